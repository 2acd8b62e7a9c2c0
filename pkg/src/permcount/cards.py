"""Card guessing with Yes/No feedback: greedy play via exact permanents or SIS.

A deck of m·n cards holds n values, m copies each.  The subject guesses the
value of each card in turn and is only told right/wrong.  The greedy strategy
guesses the most likely value; the probability that the next card shows value
v is proportional to a_v times the permanent of the zero-blocked matrix of
the state with a_v decremented.  After a wrong guess of v the greedy choice
is v again, so permanents are only needed after a correct guess.

State bookkeeping: a_v counts copies of v not yet correctly guessed; b_v
counts wrong guesses of v, each of which pins one never-revealed position
where v cannot sit.  The unknown arrangement therefore avoids b_v forbidden
positions per value, which is exactly the zero-blocked permanent model.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from permcount import _kernels
from permcount.exact import ZeroBlockSpec, zero_block_permanent
from permcount.graph import BipartiteGraph
from permcount.matching import hopcroft_karp
from permcount.sampling import EstimateReport, _csr
from permcount.scaling import prune_non_extendable, sinkhorn

__all__ = [
    "DeckState",
    "ExactPolicy",
    "GameRecord",
    "SISPolicy",
    "apply_feedback",
    "expected_score",
    "fresh_deck",
    "next_guess_exact",
    "next_guess_sis",
    "play_game",
]


@dataclass(frozen=True)
class DeckState:
    """Knowledge state of the guesser.

    a[v]: copies of value v not yet correctly guessed (still unlocated).
    b[v]: wrong guesses of v, i.e. unlocated positions where v cannot be.
    last_feedback: (value, correct) of the most recent guess, if any.
    """

    a: tuple[int, ...]
    b: tuple[int, ...]
    last_feedback: Optional[tuple[int, bool]] = None

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        if any(x < 0 for x in self.a) or any(x < 0 for x in self.b):
            raise ValueError("counts must be nonnegative")
        if sum(self.b) > sum(self.a):
            raise ValueError("more forbidden positions than unlocated cards")

    @property
    def remaining(self) -> int:
        return sum(self.a)

    def to_zero_block(self) -> ZeroBlockSpec:
        return ZeroBlockSpec(self.a, self.b, self.remaining)


def fresh_deck(n_values: int, m: int) -> DeckState:
    if n_values < 1 or m < 1:
        raise ValueError("need n_values >= 1 and m >= 1")
    return DeckState(a=(m,) * n_values, b=(0,) * n_values)


def apply_feedback(state: DeckState, guess: int, correct: bool) -> DeckState:
    if not 0 <= guess < len(state.a):
        raise ValueError(f"guess {guess} out of range")
    if correct:
        if state.a[guess] < 1:
            raise ValueError(f"correct guess of exhausted value {guess}")
        a = list(state.a)
        a[guess] -= 1
        return DeckState(tuple(a), state.b, (guess, True))
    b = list(state.b)
    b[guess] += 1
    return DeckState(state.a, tuple(b), (guess, False))


# Permanents depend only on the multiset of (a_v, b_v) blocks, and game states
# recur across repetitions, so a cache pays for itself many times over.
_perm_cache: dict[tuple, int] = {}


def _cached_permanent(a: Sequence[int], b: Sequence[int], n: int) -> int:
    key = (tuple(sorted((x, y) for x, y in zip(a, b) if x or y)), n)
    val = _perm_cache.get(key)
    if val is None:
        val = zero_block_permanent(ZeroBlockSpec(tuple(a), tuple(b), n))
        _perm_cache[key] = val
    return val


def next_guess_exact(state: DeckState, counter: Optional[list[int]] = None) -> int:
    """Greedy guess from exact permanents.

    P(next card = v) is proportional to a_v · per(M) of the state with a_v
    decremented; the common denominator cancels, so integer comparison
    suffices.  After a wrong guess of v with a_v >= 1 the answer is v again
    with no permanent work; ``counter``, if given, has its single entry
    incremented once per permanent-backed evaluation.
    """
    if state.remaining < 1:
        raise ValueError("empty deck")
    lf = state.last_feedback
    if lf is not None and not lf[1] and state.a[lf[0]] >= 1:
        return lf[0]
    if counter is not None:
        counter[0] += 1
    n1 = state.remaining - 1
    best_v = -1
    best = -1
    for v, av in enumerate(state.a):
        if av < 1:
            continue
        a_dec = list(state.a)
        a_dec[v] -= 1
        score = av * _cached_permanent(a_dec, state.b, n1)
        if score > best:
            best = score
            best_v = v
    return best_v


def _state_graph(state: DeckState) -> tuple[BipartiteGraph, list[int], int]:
    """Bipartite graph of unlocated card copies vs. unknown positions.

    Rows: a_v copies per value, values ascending.  Columns: each value's b_v
    forbidden positions first (values ascending), then the free positions.
    Returns (graph, value of each row, index of the next free column).
    """
    n = state.remaining
    row_value = [v for v, av in enumerate(state.a) for _ in range(av)]
    col_forbidden = [v for v, bv in enumerate(state.b) for _ in range(bv)]
    next_col = len(col_forbidden)
    edges = [
        (i, j)
        for i, rv in enumerate(row_value)
        for j in range(n)
        if j >= next_col or col_forbidden[j] != rv
    ]
    return BipartiteGraph(n, edges), row_value, next_col


def next_guess_sis(state: DeckState, B: int, rng: np.random.Generator) -> int:
    """Greedy guess from B weighted SIS samples of the state's matchings.

    Estimates the value marginals of the next unguessed position from the
    importance weights and picks the heaviest value (smallest index on ties).
    The after-wrong shortcut applies first, with no sampling.
    """
    if state.remaining < 1:
        raise ValueError("empty deck")
    if B < 1:
        raise ValueError("B must be >= 1")
    lf = state.last_feedback
    if lf is not None and not lf[1] and state.a[lf[0]] >= 1:
        return lf[0]
    live = [v for v, av in enumerate(state.a) if av >= 1]
    if len(live) == 1:
        return live[0]
    graph, row_value, next_col = _state_graph(state)
    pm = hopcroft_karp(graph)
    pruned = prune_non_extendable(graph, pm)
    weights = sinkhorn(pruned)
    Lp, Li, Rp, Ri = _csr(pruned)
    n = graph.n
    match_l0 = np.array([pm[u] for u in range(n)], dtype=np.int64)
    match_r0 = np.empty(n, dtype=np.int64)
    match_r0[match_l0] = np.arange(n, dtype=np.int64)
    u2 = rng.random((B, 2 * n - 1))
    logps, matches = _kernels.sample_block(
        n, Lp, Li, Rp, Ri, np.ascontiguousarray(weights.q), match_l0, match_r0, u2
    )
    lw = -logps
    w = np.exp(lw - np.max(lw))
    mass = np.zeros(len(state.a))
    row_of_next = np.argmax(matches == next_col, axis=1)
    for i in range(B):
        mass[row_value[int(row_of_next[i])]] += w[i]
    return int(np.argmax(mass))


@dataclass(frozen=True)
class GameRecord:
    """Transcript of one game: the deck, every guess, and the score."""

    deck: tuple[int, ...]
    guesses: tuple[tuple[int, int, bool], ...]
    score: int
    permanent_evals: int


class ExactPolicy:
    """Greedy player backed by exact zero-blocked permanents."""

    def __init__(self):
        self.counter = [0]

    def next_guess(self, state: DeckState, rng: np.random.Generator) -> int:
        return next_guess_exact(state, self.counter)


class SISPolicy:
    """Greedy player that estimates next-card marginals from B SIS samples."""

    def __init__(self, B: int):
        self.B = B
        self.counter = [0]

    def next_guess(self, state: DeckState, rng: np.random.Generator) -> int:
        return next_guess_sis(state, self.B, rng)


def play_game(
    deck: Sequence[int],
    policy,
    rng: Optional[np.random.Generator] = None,
    debug: bool = False,
) -> GameRecord:
    """Play one full game over ``deck`` (a shuffled sequence of values).

    One guess per position; feedback is right/wrong only, so wrongly guessed
    cards stay unknown for the rest of the game.
    """
    deck = tuple(int(x) for x in deck)
    n_values = max(deck) + 1 if deck else 0
    counts = [0] * n_values
    for x in deck:
        counts[x] += 1
    state = DeckState(tuple(counts), (0,) * n_values)
    if rng is None:
        rng = np.random.default_rng(0)
    start_evals = getattr(policy, "counter", [0])[0]
    guesses = []
    score = 0
    # Positions whose cards were guessed wrong and remain unknown.
    unknown_past: list[int] = []
    for pos, card in enumerate(deck):
        guess = policy.next_guess(state, rng)
        correct = guess == card
        if correct:
            score += 1
        else:
            unknown_past.append(pos)
        guesses.append((pos, guess, correct))
        state = apply_feedback(state, guess, correct)
        if debug:
            unknown = sorted(unknown_past + list(range(pos + 1, len(deck))))
            assert sorted(deck[p] for p in unknown) == sorted(
                v for v, av in enumerate(state.a) for _ in range(av)
            ), "state multiset diverged from the deck's unknown suffix"
            assert sum(state.b) == len(unknown_past)
    evals = getattr(policy, "counter", [0])[0] - start_evals
    return GameRecord(deck=deck, guesses=tuple(guesses), score=score, permanent_evals=evals)


def _run_games(
    n_values: int, m: int, reps: int, policy: str, seed: int, B: int
) -> np.ndarray:
    """Scores of ``reps`` games, one Philox stream per repetition."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if policy not in ("exact", "sis"):
        raise ValueError(f"unknown policy {policy!r}")
    base = list(range(n_values)) * m
    player = ExactPolicy() if policy == "exact" else SISPolicy(B)
    scores = np.empty(reps)
    for rep in range(reps):
        key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(rep)], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        deck = list(base)
        # Fisher-Yates with the same uniform convention as the sampler.
        for i in range(len(deck) - 1, 0, -1):
            j = min(int(rng.random() * (i + 1)), i)
            deck[i], deck[j] = deck[j], deck[i]
        scores[rep] = play_game(deck, player, rng).score
    return scores


def score_report(scores: np.ndarray, seed: int, wall_ms: float) -> EstimateReport:
    """Mean score with a normal-approximation 95% interval."""
    reps = len(scores)
    mean = float(scores.mean())
    sd = float(scores.std(ddof=1)) if reps > 1 else 0.0
    se = sd / math.sqrt(reps)

    def fmt(x: float) -> str:
        return f"{x:.6g}"

    return EstimateReport(
        estimate_log10=math.log10(mean) if mean > 0 else None,
        estimate_decimal=fmt(mean),
        stderr_log10=math.log10(se) if se > 0 else None,
        ci95=(fmt(mean - 1.96 * se), fmt(mean + 1.96 * se)),
        n_samples=reps,
        seed=seed,
        ess=float(reps),
        kl_hat=0.0,
        sinkhorn_residual=0.0,
        wall_ms=wall_ms,
        sample_std_log10=math.log10(sd) if sd > 0 else None,
    )


def expected_score(
    n_values: int,
    m: int,
    reps: int,
    policy: str = "exact",
    seed: int = 0,
    *,
    B: int = 100,
) -> EstimateReport:
    """Mean greedy score over ``reps`` uniformly shuffled decks, with 95% CI.

    Each repetition draws its shuffle (and, for the SIS policy, its sampling
    uniforms) from a Philox stream keyed by (seed, repetition), so results
    are independent of evaluation order.
    """
    t0 = time.perf_counter()
    scores = _run_games(n_values, m, reps, policy, seed, B)
    return score_report(scores, seed, (time.perf_counter() - t0) * 1e3)


def score_histogram(scores: np.ndarray) -> dict[int, int]:
    """Score frequencies of a batch of games."""
    hist: dict[int, int] = {}
    for s in scores:
        hist[int(s)] = hist.get(int(s), 0) + 1
    return dict(sorted(hist.items()))

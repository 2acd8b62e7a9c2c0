"""Card-guessing demo.

A deck holds n values, m copies each.  The player guesses each card in turn
and only hears right/wrong.  The greedy player guesses the most likely next
value, computed from permanents of zero-blocked matrices; after a wrong guess
of v it simply repeats v, so permanent work is only needed after a correct
guess.  The demo prints expected scores, the score distribution, and one
annotated game transcript.
"""

import numpy as np

from permcount.cards import (
    ExactPolicy,
    expected_score,
    play_game,
    score_histogram,
    _run_games,
)

M = 2
REPS = 20_000

print(f"Expected greedy score, m = {M} copies per value, {REPS} shuffled decks\n")
print(f"{'n':>3} {'mean':>8} {'95% CI':>20}")
for n in (2, 3, 5, 10):
    r = expected_score(n, M, reps=REPS, policy="exact", seed=n)
    print(f"{n:>3} {float(r.estimate_decimal):>8.4f} [{r.ci95[0]}, {r.ci95[1]}]")

print("\nScore distribution for n = 5:")
scores = _run_games(5, M, REPS, "exact", seed=5, B=0)
for score, count in score_histogram(scores).items():
    print(f"  score {score:>2}: {count / REPS:.4f} {'#' * int(round(count / REPS * 120))}")

print("\nOne game, n = 3, m = 2:")
deck = [1, 0, 2, 0, 1, 2]
rec = play_game(deck, ExactPolicy())
for pos, guess, correct in rec.guesses:
    print(f"  position {pos}: card {deck[pos]}, guessed {guess} -> "
          f"{'right' if correct else 'wrong'}")
print(f"Score: {rec.score}/6, permanent evaluations: {rec.permanent_evals}")

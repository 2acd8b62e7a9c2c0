"""Latin rectangle counting by row-wise sequential importance sampling,
asymptotic conjecture evaluators, and the odd-row (Cameron) statistic.

A k-by-n Latin rectangle is sampled row by row: each row is a perfect
matching of the residual bipartite graph (columns vs. symbols), which after
removing j disjoint matchings from K_{n,n} is (n-j)-regular.  Regularity
makes the doubly stochastic scaling uniform on the surviving edges, so each
row's sampling probability is an exact product of inverse neighbor counts
and the k=1 weight is exactly n!.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import lgamma
from typing import Optional, Sequence

import numpy as np

from permcount import _kernels
from permcount.sampling import (
    CHUNK_SIZE,
    EstimateAccumulator,
    EstimateReport,
    _report_from_accumulator,
    sample_uniforms,
)

__all__ = [
    "ConjectureValue",
    "LatinSample",
    "cameron_statistic",
    "conjecture",
    "estimate_latin",
    "is_latin_rectangle",
    "odd_rows",
    "sample_latin",
    "wasserstein_to_binomial",
]

_LOG10_E = math.log10(math.e)
CONJECTURES = (
    "timashov-square",
    "timashov-rect",
    "llw-square",
    "llw-rect-normalized",
    "emm-square",
    "c_n",
    "c_kn",
)


@dataclass(frozen=True)
class LatinSample:
    """One sampled k-by-n Latin rectangle with its log importance weight."""

    rectangle: np.ndarray
    log_weight: float


def is_latin_rectangle(rectangle: np.ndarray) -> bool:
    r = np.asarray(rectangle)
    if r.ndim != 2:
        return False
    k, n = r.shape
    if k > n:
        return False
    full = np.arange(n)
    for row in r:
        if not np.array_equal(np.sort(row), full):
            return False
    for col in r.T:
        if len(set(int(x) for x in col)) != k:
            return False
    return True


def odd_rows(rectangle: np.ndarray) -> int:
    """Number of rows whose permutation is odd (parity via cycle count)."""
    r = np.asarray(rectangle)
    if r.ndim != 2:
        raise ValueError("rectangle must be a 2-d array")
    k, n = r.shape
    full = np.arange(n)
    count = 0
    for row in r:
        if not np.array_equal(np.sort(row), full):
            raise ValueError("row is not a permutation")
        seen = np.zeros(n, dtype=bool)
        cycles = 0
        for i in range(n):
            if not seen[i]:
                cycles += 1
                j = i
                while not seen[j]:
                    seen[j] = True
                    j = int(row[j])
        if (n - cycles) % 2 == 1:
            count += 1
    return count


def sample_latin(k: int, n: int, rng: np.random.Generator) -> LatinSample:
    """Draw one k-by-n Latin rectangle with known sampling probability."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    u = rng.random((1, k * (2 * n - 1)))
    logws, _, rects = _kernels.latin_block(n, k, u)
    return LatinSample(rectangle=rects[0].copy(), log_weight=float(logws[0]))


def _latin_chunks(
    k: int, n: int, n_samples: int, seed: int, workers: int, want_odds: bool
):
    """Chunked kernel runs with the same (seed, index) streams as the sis module."""
    stride = k * (2 * n - 1)

    def run_chunk(c: int):
        start = c * CHUNK_SIZE
        count = min(CHUNK_SIZE, n_samples - start)
        u2 = np.empty((count, stride), dtype=np.float64)
        for i in range(count):
            u2[i] = sample_uniforms(seed, start + i, stride)
        logws, odds, _ = _kernels.latin_block(n, k, u2)
        acc = EstimateAccumulator.from_log_weights(logws)
        return acc, logws, (odds if want_odds else None)

    n_chunks = (n_samples + CHUNK_SIZE - 1) // CHUNK_SIZE
    if workers <= 1 or n_chunks == 1:
        results = [run_chunk(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, range(n_chunks)))
    total = EstimateAccumulator()
    for acc, _, _ in results:
        total = total.merge(acc)
    log_weights = np.concatenate([lw for _, lw, _ in results])
    odds = np.concatenate([o for _, _, o in results]) if want_odds else None
    return total, log_weights, odds


def estimate_latin(
    k: int, n: int, n_samples: int, seed: int, *, workers: int = 1
) -> EstimateReport:
    """Estimate the number of k-by-n Latin rectangles.

    The estimate is the mean of the importance weights; accumulation is
    log-space throughout (counts reach 10^230 by n = 20).
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    t0 = time.perf_counter()
    acc, _, _ = _latin_chunks(k, n, n_samples, seed, workers, want_odds=False)
    return _report_from_accumulator(acc, seed, 0.0, (time.perf_counter() - t0) * 1e3)


def cameron_statistic(
    n: int, n_samples: int, seed: int, *, workers: int = 1
) -> tuple[float, np.ndarray, EstimateReport]:
    """Weighted odd-row distribution of random n-by-n Latin squares.

    Returns (W1 distance to Bin(n, 1/2), weighted odd-row histogram summing
    to one, the count EstimateReport from the same run).
    """
    t0 = time.perf_counter()
    acc, log_weights, odds = _latin_chunks(n, n, n_samples, seed, workers, want_odds=True)
    u = np.exp(log_weights - np.max(log_weights))
    u /= u.sum()
    hist = np.zeros(n + 1)
    np.add.at(hist, odds, u)
    w1 = wasserstein_to_binomial(list(zip(range(n + 1), hist)), n)
    report = _report_from_accumulator(acc, seed, 0.0, (time.perf_counter() - t0) * 1e3)
    return w1, hist, report


def wasserstein_to_binomial(
    weighted_counts: Sequence[tuple[int, float]], n: int
) -> float:
    """W1 distance between a weighted empirical law on {0..n} and Bin(n, 1/2).

    For integer-supported laws W1 = sum over integer t of |F_hat(t) - F(t)|,
    which is exact on this grid.
    """
    if len(weighted_counts) == 0:
        raise ValueError("empty input")
    hist = np.zeros(n + 1)
    total = 0.0
    for c, w in weighted_counts:
        c = int(c)
        if not 0 <= c <= n:
            raise ValueError(f"count {c} outside [0, {n}]")
        if w < 0:
            raise ValueError("weights must be nonnegative")
        hist[c] += w
        total += w
    if total <= 0:
        raise ValueError("weights sum to zero")
    emp_cdf = np.cumsum(hist / total)
    pmf = np.array([math.comb(n, t) for t in range(n + 1)], dtype=float) / 2.0**n
    bin_cdf = np.cumsum(pmf)
    return float(np.abs(emp_cdf - bin_cdf)[:-1].sum())


def _log_falling(m: int, j: int) -> float:
    """log [m]_j = log(m! / (m - j)!)."""
    return lgamma(m + 1) - lgamma(m - j + 1)


@dataclass(frozen=True)
class ConjectureValue:
    """A conjectured (log10) Latin count or normalizer; see :func:`conjecture`."""

    which: str
    k: int
    n: int
    log10_value: float

    @property
    def value(self) -> float:
        return 10.0**self.log10_value


def conjecture(which: str, k: int, n: int) -> ConjectureValue:
    """Evaluate one of the asymptotic Latin-count conjectures in log10.

    Square forms require k = n; "timashov-rect" requires k < n (its leading
    factor vanishes at k = n); "llw-rect-normalized" is the constant
    e^(-k/2) that the rectangle conjecture reduces to after dividing by the
    normalizer c_kn.  All factorials go through log-gamma.
    """
    if not (1 <= k <= n and n >= 2):
        raise ValueError("need 1 <= k <= n and n >= 2")
    if which in ("timashov-square", "llw-square", "emm-square", "c_n") and k != n:
        raise ValueError(f"{which} requires k = n")
    if which == "timashov-square":
        ln = (
            (1.5 * n + 1) * math.log(2 * math.pi)
            - math.log(2.0)
            + (-2.0 * n * n - 0.5 * n - 1.0)
            + (n * n + 1.5 * n - 1.0) * math.log(n)
        )
    elif which == "timashov-rect":
        if k >= n:
            raise ValueError("timashov-rect requires k < n")
        ln = (
            0.5 * k * math.log(2 * math.pi * n / math.e)
            + (n * n - n * k + 0.5) * math.log1p(-k / n)
            + 2.0 * n * _log_falling(n, k)
            - k * n * math.log(n)
        )
    elif which == "llw-square":
        ln = (
            0.5 * math.log(2 * math.pi**3)
            - 1.75
            + 3.0 * n * lgamma(n + 1)
            - 0.5 * n
            - lgamma(n * n + 1)
        )
    elif which == "llw-rect-normalized":
        ln = -0.5 * k
    elif which == "emm-square":
        ln = 3.0 * n * lgamma(n + 1) - lgamma(n * n + 1) - 0.5 * n + 5.0 / 6.0
    elif which == "c_n":
        ln = 3.0 * n * lgamma(n + 1) - lgamma(n * n + 1) - 0.5 * n
    elif which == "c_kn":
        ln = (
            k * lgamma(n + 1)
            + 2.0 * n * _log_falling(n, k)
            - _log_falling(n * n, k * n)
        )
    else:
        raise ValueError(f"unknown conjecture {which!r}; expected one of {CONJECTURES}")
    return ConjectureValue(which=which, k=k, n=n, log10_value=ln * _LOG10_E)

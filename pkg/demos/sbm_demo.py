"""Scaled-vs-uniform comparison demo on stochastic block models.

Each side of the bipartite graph splits into two clusters; edges appear with
probability p within the paired clusters and q across.  The imbalance makes
uniform proposals badly matched to the matching distribution, while the
doubly stochastic scaling adapts.  The demo prints the estimate, sample
standard deviation (in log10), and the uniform/scaled spread ratio for a few
(p, q) settings, then a convergence trace for the most lopsided one.
"""

from permcount.sbm import compare_modes, sbm_graph

N_PER_SIDE = 20
N_SAMPLES = 10_000

print(f"n = {N_PER_SIDE} per side, N = {N_SAMPLES} samples per mode\n")
print(f"{'p':>5} {'q':>5} {'scaled est':>12} {'scaled std':>11} "
      f"{'uniform std':>12} {'ratio(log10)':>13}")
for p, q in [(0.9, 0.2), (0.9, 0.5), (0.7, 0.3), (0.6, 0.6)]:
    g = sbm_graph(N_PER_SIDE, p, q, seed=1)
    r = compare_modes(g, N_SAMPLES, seed=1, workers=8)
    print(
        f"{p:>5} {q:>5} {r.scaled.estimate_decimal:>12} "
        f"{r.scaled.sample_std_log10:>11.3f} {r.uniform.sample_std_log10:>12.3f} "
        f"{r.std_ratio_log10:>13.3f}"
    )

print("\nConvergence trace for p = 0.9, q = 0.2 (running log10 estimate):")
g = sbm_graph(N_PER_SIDE, 0.9, 0.2, seed=1)
r = compare_modes(g, N_SAMPLES, seed=1, workers=8, trace_stride=1000)
print(f"{'N prefix':>9} {'scaled':>9} {'uniform':>9}")
for (k, s), (_, u) in zip(r.scaled_trace, r.uniform_trace):
    print(f"{k:>9} {s:>9.4f} {u:>9.4f}")
print("\nThe spread gap is modest at this size but consistently favors the "
      "scaled proposals; it widens with n and with cluster imbalance.")

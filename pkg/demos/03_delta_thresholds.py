"""
Step-size thresholds: symmetric bound, asymmetric bounds, recovery margins
==========================================================================

Evaluates the closed-form step-size conditions on the reference parameter
sets and shows the threshold is the exact sign boundary of the steady-state
means.  Also evaluates the information-theoretic exact-recovery margin for
sparse graphs, where the learning recursion still works although community
detection from a single graph draw is impossible.
"""

from blocklearn import (
    SbmParams,
    asymmetric_delta_thresholds,
    exact_recovery_infeasible,
    symmetric_delta_threshold,
    symmetric_log_ratio_closed_form,
)

d0, d1 = 0.368, 0.511

print("symmetric bound, dense graph (p=0.8, q=0.1):",
      round(symmetric_delta_threshold(d0, d1, 0.8, 0.1), 4))
print("symmetric bound, sparse graph (p=0.25, q=0.1):",
      round(symmetric_delta_threshold(d0, d1, 0.25, 0.1), 4))

# The threshold is exactly where the weaker cluster's steady-state mean
# changes sign.
thr = symmetric_delta_threshold(d0, d1, 0.8, 0.1)
for eps in (-1e-3, +1e-3):
    c0, c1 = symmetric_log_ratio_closed_form(d0, d1, 0.8, 0.1, thr + eps)
    print(f"  delta = threshold {eps:+.0e}: cluster means ({c0:+.5f}, {c1:+.5f})")

# Asymmetric communities: size/probability/informativeness imbalances shift
# the burden onto the cluster whose hypothesis is not prevalent.
report = asymmetric_delta_thresholds(
    SbmParams(n0=10, n1=8, p0=0.8, p1=0.8, q0=0.2, q1=0.2), 0.035, 0.04
)
print("\nasymmetric case (n0=10, n1=8, d0=0.035, d1=0.04):")
print(f"  prevalent cluster: {report.prevalent_cluster}, thresholds "
      f"({report.delta_c0:.4f}, {report.delta_c1:.4f}), overall {report.delta0:.4f}")

same_size = asymmetric_delta_thresholds(
    SbmParams(n0=10, n1=10, p0=0.8, p1=0.8, q0=0.2, q1=0.2), 0.035, 0.04
)
print(f"  equal sizes: asymmetric bound {same_size.delta0:.4f} vs "
      f"sharper symmetric bound {same_size.delta_min:.4f}")

# Sparse regime: exact community recovery is infeasible, yet the step-size
# condition stays satisfiable because the p/q scaling cancels.
for p, q in ((0.25, 0.1), (0.8, 0.1)):
    check = exact_recovery_infeasible(15, p, q)
    print(f"\nexact recovery at n=15, p={p}, q={q}: margin {check.margin:.3f} "
          f"(< sqrt(2) means infeasible) -> infeasible={check.infeasible}")

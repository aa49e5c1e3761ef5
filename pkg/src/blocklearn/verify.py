"""Built-in property and oracle suites (the ``verify`` CLI subcommand).

Each check pits an implementation path against an independent oracle:
closed forms against brute-force matrix powers, block expectations against
exact binomial-convolution sums, estimators against the recursions that
generated their inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .graphs import (
    SbmParams,
    averaging_combination,
    closed_form_power,
    expected_combination,
    expected_perron,
    inverse_binomial_moment,
    perron_vector,
    sample_adjacency,
    sample_sbm,
)
from .inverse import (
    BeliefSeries,
    estimate_log_likelihoods,
    fit_error,
    recursion_series,
    scan_delta,
)
from .learning import BeliefState, asl_update, bayesian_update, geometric_combine, run
from .models import LikelihoodProfile, bernoulli_profile, divergence_table
from .theory import expected_log_ratio, symmetric_log_ratio_closed_form

__all__ = ["CheckResult", "all_checks", "run_all"]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_profile(rng, n_agents, n_hypotheses, alphabet):
    raw = rng.random((n_agents, n_hypotheses, alphabet)) + 1e-3
    raw /= raw.sum(axis=2, keepdims=True)
    truth = rng.integers(0, n_hypotheses, size=n_agents)
    return LikelihoodProfile(likelihoods=raw, true_state=truth)


def _random_combination(rng, n_agents):
    adjacency = (rng.random((n_agents, n_agents)) < 0.4).astype(int)
    np.fill_diagonal(adjacency, 1)  # no zero columns
    return averaging_combination(adjacency)


def check_simplex_conservation(steps=10_000, seed=20240501, tol=1e-10):
    """Every update/combine output must exponentiate to a probability vector."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < steps:
        n, h, m = int(rng.integers(3, 20)), int(rng.integers(2, 6)), int(rng.integers(2, 8))
        profile = _random_profile(rng, n, h, m)
        combination = _random_combination(rng, n)
        raw = rng.random((n, h)) + 1e-3
        state = BeliefState(log_private=np.log(raw / raw.sum(axis=1, keepdims=True)))
        burst = min(200, steps - done)
        for _ in range(burst):
            obs = rng.integers(0, m, size=n)
            if rng.random() < 0.5:
                log_psi = bayesian_update(state, obs, profile)
            else:
                log_psi = asl_update(state, obs, profile, delta=float(rng.uniform(0.01, 0.99)))
            log_mu = geometric_combine(log_psi, combination)
            worst = max(
                worst,
                float(np.abs(np.exp(log_psi).sum(axis=1) - 1.0).max()),
                float(np.abs(np.exp(log_mu).sum(axis=1) - 1.0).max()),
            )
            state = BeliefState(log_private=log_mu)
            done += 1
    return CheckResult(
        "simplex-conservation",
        worst <= tol,
        f"max |sum(beliefs) - 1| = {worst:.3e} over {done} steps (tol {tol:g})",
    )


def check_power_identity(tol=1e-10, max_power=50):
    """Symmetric closed-form powers against repeated dense multiplication."""
    worst = 0.0
    for p, q, n in [(0.8, 0.1, 15), (0.5, 0.2, 10), (0.9, 0.05, 4)]:
        base = closed_form_power(p, q, n, 1)
        acc = base.copy()
        for t in range(2, max_power + 1):
            acc = acc @ base
            worst = max(worst, float(np.abs(closed_form_power(p, q, n, t) - acc).max()))
    return CheckResult(
        "power-identity",
        worst <= tol,
        f"max closed-form vs multiplied deviation = {worst:.3e} (tol {tol:g}, t <= {max_power})",
    )


def check_inverse_binomial(slope_limit=-1.18, seed=7):
    """Exact inverse binomial moments dominate the plug-in value, and the gap
    decays at least like n^(-4/3)."""
    rng = np.random.default_rng(seed)
    jensen_ok = True
    for _ in range(200):
        c = float(rng.uniform(0.1, 5.0))
        n = int(rng.integers(1, 60))
        p = float(rng.uniform(0.05, 1.0))
        t = int(rng.integers(1, 4))
        exact = inverse_binomial_moment(c, n, p, t, mode="exact")
        approx = inverse_binomial_moment(c, n, p, t, mode="approx")
        jensen_ok = jensen_ok and exact >= approx - 1e-15

    sizes = np.array([10, 40, 160])
    gaps = np.array(
        [
            inverse_binomial_moment(1.0, n, 0.5, 1, mode="exact")
            - inverse_binomial_moment(1.0, n, 0.5, 1, mode="approx")
            for n in sizes
        ]
    )
    slope = np.polyfit(np.log(sizes), np.log(gaps), 1)[0]
    passed = jensen_ok and slope <= slope_limit
    return CheckResult(
        "inverse-binomial-moment",
        passed,
        f"jensen_ok={jensen_ok}, log-log slope = {slope:.3f} (limit {slope_limit})",
    )


def check_perron_closed_form(tol=1e-9):
    """Block closed-form Perron vector against power iteration on the dense
    expected matrix."""
    worst = 0.0
    for params in [
        SbmParams(n0=20, n1=15, p0=0.8, p1=0.9, q0=0.1, q1=0.1),
        SbmParams(n0=10, n1=8, p0=0.8, p1=0.8, q0=0.2, q1=0.2),
        SbmParams(n0=7, n1=23, p0=0.6, p1=0.45, q0=0.08, q1=0.15),
    ]:
        dense = expected_combination(params).dense()
        iterated = perron_vector(dense, tol=1e-14, max_iter=10**6)
        worst = max(worst, float(np.abs(iterated - expected_perron(params)).max()))
    return CheckResult(
        "perron-closed-form",
        worst <= tol,
        f"max |power iteration - closed form| = {worst:.3e} (tol {tol:g})",
    )


def check_delta_interpolation(tol=1e-12, seed=11, steps=300):
    """Per-step identity: public log-ratio equals delta times the likelihood
    log-ratio plus (1 - delta) times the private log-ratio."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        n, h, m = 12, 3, 5
        profile = _random_profile(rng, n, h, m)
        combination = _random_combination(rng, n)
        state = BeliefState.uniform(n, h)
        delta = float(rng.uniform(0.05, 0.95))
        for _ in range(steps):
            obs = rng.integers(0, m, size=n)
            log_psi = asl_update(state, obs, profile, delta)
            log_like = profile.log_likelihoods[np.arange(n), :, obs]
            for a, b in [(0, 1), (1, 2)]:
                lhs = log_psi[:, a] - log_psi[:, b]
                rhs = delta * (log_like[:, a] - log_like[:, b]) + (1 - delta) * (
                    state.log_private[:, a] - state.log_private[:, b]
                )
                worst = max(worst, float(np.abs(lhs - rhs).max()))
            state = BeliefState(log_private=geometric_combine(log_psi, combination))
    return CheckResult(
        "delta-interpolation",
        worst <= tol,
        f"max per-step identity deviation = {worst:.3e} (tol {tol:g})",
    )


def check_inverse_round_trip(tol=1e-10, seed=3):
    """Noiseless recursion: the estimator recovers the injected log-likelihood
    ratios at the true step size, which also minimizes the fit error."""
    rng = np.random.default_rng(seed)
    n = 12
    combination = _random_combination(rng, n)
    truth = rng.normal(0.0, 1.0, size=n)
    delta_true = 0.375
    series = BeliefSeries.from_array(recursion_series(truth, combination, delta_true, steps=80))
    recovered = estimate_log_likelihoods(series, combination, delta_true)
    recovery_gap = float(np.abs(recovered - truth).max())
    r_true = fit_error(series, combination, delta_true, recovered)
    grid = np.arange(0.025, 0.98, 0.025)
    scan = scan_delta(series, combination, grid)
    passed = recovery_gap <= tol and r_true <= scan.best_error + 1e-12
    return CheckResult(
        "inverse-round-trip",
        passed,
        f"recovery gap = {recovery_gap:.3e} (tol {tol:g}), "
        f"r(true)={r_true:.3e} <= grid min {scan.best_error:.3e}",
    )


def check_scan_recovery(
    n_seeds=50,
    required=0.90,
    delta_true=0.5,
    horizon=80,
    split=40,
    window=0.05,
    seed0=1000,
):
    """Step-size scans on synthetic recursion series must place the argmin
    near the generating step size for at least the required fraction of seeds.

    Each seed draws a fresh network and fresh per-agent expected
    log-likelihood ratios, feeds them through the noiseless recursion at the
    generator step size, and scans the grid.  (Scoring against
    single-trajectory time averages instead of injected expectations cannot
    identify the step size: the validation-mean residual of the fit error is
    nearly flat in it once the series reaches steady state.)
    """
    params = SbmParams(n0=15, n1=15, p0=0.8, p1=0.8, q0=0.1, q1=0.1)
    grid = np.arange(0.025, 0.98, 0.025)
    rng = np.random.default_rng(seed0)
    hits = 0
    for s in range(n_seeds):
        network = sample_sbm(params, seed=seed0 + s)
        truth = np.where(network.clusters == 0, 0.368, -0.511) + rng.normal(0.0, 0.2, network.size)
        series = BeliefSeries.from_array(
            recursion_series(truth, network.combination, delta_true, steps=horizon),
            split_index=split,
        )
        scan = scan_delta(series, network.combination, grid)
        if abs(scan.best_delta - delta_true) <= window + 1e-12:
            hits += 1
    rate = hits / n_seeds
    return CheckResult(
        "scan-delta-recovery",
        rate >= required,
        f"argmin within +-{window} of {delta_true} for {hits}/{n_seeds} seeds ({rate:.0%})",
    )


def exact_block_expectation(params):
    """Exact entrywise expectation of the averaging-rule combination matrix,
    by direct summation over the binomial in-degree distribution.

    Returns the 2x2 matrix of block values (entries are constant within each
    block).  Serves as the independent oracle for the block approximation.
    """
    from scipy.stats import binom

    def conv_pmf(n_a, p_a, n_b, p_b):
        pa = binom.pmf(np.arange(n_a + 1), n_a, p_a)
        pb = binom.pmf(np.arange(n_b + 1), n_b, p_b)
        return np.convolve(pa, pb)

    def moment(prob, n_same, p_same, n_other, p_other):
        # entry present with `prob`; the rest of the column sums two binomials
        pmf = conv_pmf(n_same, p_same, n_other, p_other)
        support = np.arange(pmf.size)
        return prob * float(np.sum(pmf / (1.0 + support)))

    n0, n1 = params.n0, params.n1
    p0, p1, q0, q1 = params.p0, params.p1, params.q0, params.q1
    return np.array(
        [
            [moment(p0, n0 - 1, p0, n1, q1), moment(q0, n0 - 1, q0, n1, p1)],
            [moment(q1, n0, p0, n1 - 1, q1), moment(p1, n0, q0, n1 - 1, p1)],
        ]
    )


def check_expected_matrix_trend(seed=42, samples=400):
    """The block approximation's bias against the exact expectation shrinks
    with community size, and sampled combination matrices agree with the
    exact expectation within Monte Carlo error."""
    p, q = 0.5, 0.1
    biases = []
    for n in (10, 20, 40):
        params = SbmParams(n0=n, n1=n, p0=p, p1=p, q0=q, q1=q)
        exact = exact_block_expectation(params)
        approx = expected_combination(params).block_values
        biases.append(float(np.abs(exact - approx).max()))
    decreasing = biases[0] > biases[1] > biases[2]

    params = SbmParams(n0=10, n1=10, p0=p, p1=p, q0=q, q1=q)
    exact_intra = exact_block_expectation(params)[0, 0]
    rng = np.random.default_rng(seed)
    block_means = np.empty(samples)
    for s in range(samples):
        adjacency = sample_adjacency(params, rng)
        sums = adjacency.sum(axis=0)
        combo = np.divide(adjacency, sums, out=np.zeros(adjacency.shape), where=sums > 0)
        block_means[s] = combo[:10, :10].mean()
    mc_mean = block_means.mean()
    mc_se = block_means.std(ddof=1) / np.sqrt(samples)
    mc_ok = abs(mc_mean - exact_intra) <= 3 * mc_se
    return CheckResult(
        "expected-matrix-trend",
        decreasing and mc_ok,
        f"bias at n=10/20/40: {biases[0]:.2e}/{biases[1]:.2e}/{biases[2]:.2e} "
        f"(decreasing={decreasing}); MC intra mean {mc_mean:.6f} vs exact {exact_intra:.6f} "
        f"within 3 s.e. = {3 * mc_se:.2e}: {mc_ok}",
    )


def check_series_vs_closed_form(tol=1e-9):
    """Truncated-series evaluation against the symmetric closed form, both
    driven by the same block expected matrix."""
    params = SbmParams(n0=15, n1=15, p0=0.8, p1=0.8, q0=0.1, q1=0.1)
    clusters = np.repeat([0, 1], 15)
    profile = bernoulli_profile(clusters, (0.1, 0.5))
    table = divergence_table(profile)
    d0 = float(table[0, 1])
    d1 = float(table[-1, 0])
    worst = 0.0
    for delta in (0.01, 0.1, 0.3, 0.7):
        prediction = expected_log_ratio(params, profile, delta, truncation_tol=1e-13)
        closed0, closed1 = symmetric_log_ratio_closed_form(d0, d1, 0.8, 0.1, delta)
        means = prediction.cluster_means(clusters)
        worst = max(worst, abs(means[0] - closed0), abs(means[1] - closed1))
    return CheckResult(
        "series-vs-closed-form",
        worst <= tol,
        f"max |truncated series - closed form| = {worst:.3e} (tol {tol:g})",
    )


def all_checks():
    return [
        check_simplex_conservation,
        check_power_identity,
        check_inverse_binomial,
        check_perron_closed_form,
        check_delta_interpolation,
        check_inverse_round_trip,
        check_scan_recovery,
        check_expected_matrix_trend,
        check_series_vs_closed_form,
    ]


def run_all(names=None):
    """Run the selected suites (all by default) and return their results."""
    results = []
    for check in all_checks():
        label = check.__name__.removeprefix("check_").replace("_", "-")
        if names and label not in names:
            continue
        results.append(check())
    return results

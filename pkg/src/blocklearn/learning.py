"""Social-learning recursions in the log domain.

One iteration is an update step (full Bayesian or step-size-discounted) that
turns private beliefs into public beliefs, followed by geometric averaging of
neighbors' public beliefs through the combination matrix.  Beliefs live as
per-agent rows of log-probabilities; log-sum-exp renormalization keeps them
on the simplex even when the linear-domain values underflow.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .exceptions import DeltaOutOfRange, WindowTooLarge
from .models import observation_matrix

__all__ = [
    "BeliefState",
    "Trace",
    "log_normalize",
    "bayesian_update",
    "asl_update",
    "geometric_combine",
    "estimate_state",
    "run",
    "windowed_mean_log_ratio",
]


def log_normalize(log_values):
    """Shift each row so it exponentiates to a probability vector."""
    log_values = np.asarray(log_values, dtype=float)
    peak = log_values.max(axis=-1, keepdims=True)
    norm = peak + np.log(np.exp(log_values - peak).sum(axis=-1, keepdims=True))
    return log_values - norm


@dataclass
class BeliefState:
    """Log-domain private (post-combination) and public (post-update) beliefs."""

    log_private: np.ndarray
    log_public: np.ndarray = None
    iteration: int = 0

    @classmethod
    def uniform(cls, n_agents, n_hypotheses):
        return cls(log_private=np.full((n_agents, n_hypotheses), -np.log(n_hypotheses)))


def _gather_log_likelihoods(profile, observations):
    idx = np.arange(profile.n_agents)
    return profile.log_likelihoods[idx, :, np.asarray(observations, dtype=int)]


def bayesian_update(state, observations, profile):
    """Full Bayesian update: public belief proportional to likelihood times prior.

    Returns the new public log-beliefs; the caller decides what to do with
    the state.
    """
    log_like = _gather_log_likelihoods(profile, observations)
    return log_normalize(log_like + state.log_private)


def asl_update(state, observations, profile, delta):
    """Step-size update: likelihood tempered by ``delta``, prior by ``1 - delta``.

    The step size discounts history, which lets the recursion track changes
    instead of hardening around early evidence.
    """
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must be in (0, 1), got {delta}")
    log_like = _gather_log_likelihoods(profile, observations)
    return log_normalize(delta * log_like + (1.0 - delta) * state.log_private)


def geometric_combine(log_public, combination):
    """Geometric averaging of neighbors' public beliefs.

    Agent k's private belief is proportional to the product of its neighbors'
    public beliefs raised to the trust weights, i.e. the combination matrix
    transposed acting on the log-beliefs, renormalized per agent.
    """
    return log_normalize(np.asarray(combination).T @ np.asarray(log_public))


def estimate_state(log_beliefs):
    """Per-agent argmax hypothesis; ties go to the lowest index."""
    return np.argmax(log_beliefs, axis=-1)


@dataclass
class Trace:
    """Time-indexed record of one seeded run.

    Row 0 holds the initial (uniform) private beliefs; row i >= 1 holds
    iteration i.  ``log_ratio`` is the public-belief log-ratio for the
    configured hypothesis pair (the initial row uses the private beliefs,
    since no public belief exists before the first update).
    """

    log_ratio: np.ndarray
    estimates: np.ndarray
    clusters: np.ndarray
    metadata: dict
    mu_log_ratio: np.ndarray = None
    observations: np.ndarray = None
    final_state: BeliefState = field(default=None, repr=False)

    @property
    def horizon(self):
        return self.log_ratio.shape[0] - 1

    @property
    def n_agents(self):
        return self.log_ratio.shape[1]

    def to_csv(self, path, sidecar=True):
        """Write rows ``iter, agent, cluster, log_ratio, estimate[, obs]`` and
        a JSON metadata sidecar next to the CSV."""
        with_obs = self.observations is not None
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["iter", "agent", "cluster", "log_ratio", "estimate"]
            if with_obs:
                header.append("obs")
            writer.writerow(header)
            for i in range(self.horizon + 1):
                for k in range(self.n_agents):
                    row = [
                        i,
                        k,
                        int(self.clusters[k]),
                        f"{self.log_ratio[i, k]:.17g}",
                        int(self.estimates[i, k]),
                    ]
                    if with_obs:
                        row.append(int(self.observations[k, i - 1]) if i >= 1 else "")
                    writer.writerow(row)
        if sidecar:
            with open(str(path) + ".meta.json", "w") as fh:
                json.dump(self.metadata, fh, indent=2, default=str)


def run(
    network,
    profile,
    strategy="asl",
    delta=None,
    horizon=100,
    seed=0,
    pair=(0, 1),
    estimator="mu",
    record_mu_ratio=True,
    record_observations=False,
    extra_metadata=None,
):
    """Run one seeded social-learning trajectory.

    Parameters
    ----------
    network : Network
    profile : LikelihoodProfile
    strategy : {"asl", "traditional"}
        Update rule applied before each combination step.
    delta : float
        Step size in (0, 1); required for the "asl" strategy.
    horizon : int
        Number of iterations after the initial state.
    seed : int
        Drives the per-agent observation substreams; equal seeds give
        bitwise-identical traces.
    pair : (int, int)
        Hypothesis pair (a, b) whose log-ratio log(psi_a / psi_b) is recorded.
    estimator : {"mu", "psi"}
        Whether state estimates argmax the private or the public beliefs.
    """
    if network.size != profile.n_agents:
        raise ValueError("network and profile disagree on the number of agents")
    if strategy not in ("asl", "traditional"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "asl":
        if delta is None:
            raise DeltaOutOfRange("asl strategy requires a delta in (0, 1)")
        if not 0.0 < delta < 1.0:
            raise DeltaOutOfRange(f"delta must be in (0, 1), got {delta}")
    if estimator not in ("mu", "psi"):
        raise ValueError(f"estimator must be 'mu' or 'psi', got {estimator!r}")
    a, b = pair

    n, h = profile.n_agents, profile.n_hypotheses
    combination_t = np.ascontiguousarray(network.combination.T)
    symbols = observation_matrix(profile, horizon, seed)
    # (N, horizon, H) gather of log-likelihood rows, done once up front
    log_like_series = np.moveaxis(profile.log_likelihoods, 1, 2)[
        np.arange(n)[:, None], symbols, :
    ]

    if strategy == "asl":
        w_like, w_prior = delta, 1.0 - delta
    else:
        w_like, w_prior = 1.0, 1.0

    log_mu = np.full((n, h), -np.log(h))
    log_ratio = np.empty((horizon + 1, n))
    estimates = np.empty((horizon + 1, n), dtype=np.int64)
    mu_ratio = np.empty((horizon + 1, n)) if record_mu_ratio else None

    log_ratio[0] = log_mu[:, a] - log_mu[:, b]
    estimates[0] = estimate_state(log_mu)
    if record_mu_ratio:
        mu_ratio[0] = log_ratio[0]

    log_psi = log_mu
    for i in range(1, horizon + 1):
        log_psi = log_normalize(w_like * log_like_series[:, i - 1, :] + w_prior * log_mu)
        log_mu = log_normalize(combination_t @ log_psi)
        log_ratio[i] = log_psi[:, a] - log_psi[:, b]
        estimates[i] = estimate_state(log_mu if estimator == "mu" else log_psi)
        if record_mu_ratio:
            mu_ratio[i] = log_mu[:, a] - log_mu[:, b]

    metadata = {
        "seed": int(seed),
        "strategy": strategy,
        "delta": delta,
        "horizon": int(horizon),
        "pair": [int(a), int(b)],
        "estimator": estimator,
        "n_agents": int(n),
        "cluster_sizes": np.bincount(network.clusters).tolist(),
        "network_retries": int(network.retries),
        "profile": profile.reference,
        "version": __version__,
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    return Trace(
        log_ratio=log_ratio,
        estimates=estimates,
        clusters=network.clusters.copy(),
        metadata=metadata,
        mu_log_ratio=mu_ratio,
        observations=symbols if record_observations else None,
        final_state=BeliefState(log_private=log_mu, log_public=log_psi, iteration=horizon),
    )


def windowed_mean_log_ratio(trace, window):
    """Trailing mean of the recorded log-ratios over ``window`` entries.

    Positions with fewer than ``window`` trailing entries are NaN.  Accepts a
    Trace or a bare array (time along the first axis).
    """
    series = np.asarray(getattr(trace, "log_ratio", trace), dtype=float)
    length = series.shape[0]
    if window < 1:
        raise ValueError("window must be at least 1")
    if window > length:
        raise WindowTooLarge(f"window {window} exceeds series length {length}")
    flat = series.reshape(length, -1)
    csum = np.vstack([np.zeros((1, flat.shape[1])), np.cumsum(flat, axis=0)])
    out = np.full_like(flat, np.nan)
    out[window - 1 :] = (csum[window:] - csum[:-window]) / window
    return out.reshape(series.shape)

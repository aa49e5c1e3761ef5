"""Inverse analysis of public-belief sequences.

Given a per-agent series of public log-belief ratios and a combination
matrix, estimate the expected log-likelihood ratios implied by an assumed
step size, score how well the pair fits the recursion on held-out steps, and
scan a step-size grid for the best fit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DeltaOutOfRange, InsufficientSteps

__all__ = [
    "BeliefSeries",
    "estimate_log_likelihoods",
    "fit_error",
    "traditional_fit",
    "scan_delta",
    "DeltaScan",
    "recursion_series",
]


@dataclass
class BeliefSeries:
    """Per-step, per-agent public log-belief ratios with a train/validation split.

    ``values[i, k]`` is agent k's log-ratio at step i; rows before
    ``split_index`` are the fitting segment, the rest the validation segment.
    Gaps (NaNs) are forward-filled at ingestion: an agent that is silent at a
    step keeps its previous value, and leading gaps fall back to 0 (the
    uniform-belief ratio).
    """

    values: np.ndarray
    split_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be (steps, agents)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series contains non-finite values after ingestion")
        if not 1 <= self.split_index < self.values.shape[0]:
            raise InsufficientSteps(
                f"split index {self.split_index} must satisfy 1 <= split < {self.values.shape[0]}"
            )

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def n_agents(self):
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, split_index=None):
        values = np.array(values, dtype=float)
        filled = _forward_fill(values)
        if split_index is None:
            split_index = filled.shape[0] // 2
        return cls(values=filled, split_index=split_index)

    @classmethod
    def from_csv(cls, path, split_index=None, step_col="step", agent_col="agent", value_col="log_ratio"):
        """Load a generic long-format CSV with step, agent and log-ratio columns."""
        steps, agents, vals = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                steps.append(int(row[step_col]))
                agents.append(int(row[agent_col]))
                vals.append(float(row[value_col]))
        if not steps:
            raise InsufficientSteps(f"no rows in {path}")
        n_steps = max(steps) + 1
        n_agents = max(agents) + 1
        values = np.full((n_steps, n_agents), np.nan)
        values[steps, agents] = vals
        return cls.from_array(values, split_index)

    @classmethod
    def from_trace_csv(cls, path, split_index=None):
        """Load the trace CSV written by the learning module."""
        return cls.from_csv(path, split_index, step_col="iter")


def _forward_fill(values):
    filled = values.copy()
    for k in range(filled.shape[1]):
        col = filled[:, k]
        last = 0.0  # before any post: the uniform-belief log-ratio
        for i in range(col.size):
            if np.isnan(col[i]):
                col[i] = last
            else:
                last = col[i]
    return filled


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must be in (0, 1), got {delta}")


def estimate_log_likelihoods(series, combination, delta):
    """Estimate expected log-likelihood ratios from the fitting segment.

    Inverts the per-step recursion identity
    ``y_i = delta * nu_i + (1 - delta) * A^T y_{i-1}``:
    for each agent the estimate averages
    ``(y_i - (1 - delta) * A^T y_{i-1}) / delta`` over the fitting steps.
    """
    _check_delta(delta)
    if series.split_index < 2:
        raise InsufficientSteps("need at least 2 fitting steps to form one increment")
    combination = np.asarray(combination, dtype=float)
    y = series.values
    current = y[1 : series.split_index]
    lagged = y[0 : series.split_index - 1]
    residual = current - (1.0 - delta) * (lagged @ combination)
    return residual.mean(axis=0) / delta


def fit_error(series, combination, delta, estimates):
    """Recursion-fit error on the validation segment.

    Uses the validation-segment mean log-ratios ``m`` and returns
    ``sqrt(sum_k (m_k - (1 - delta) (A^T m)_k - delta * e_k)^2) / N``.
    """
    _check_delta(delta)
    combination = np.asarray(combination, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    m = series.values[series.split_index :].mean(axis=0)
    residual = m - (1.0 - delta) * (m @ combination) - delta * estimates
    return float(np.linalg.norm(residual) / series.n_agents)


def traditional_fit(series, combination):
    """Fit quality of the step-size-free (full Bayesian) recursion.

    The identity ``y_i = nu_i + A^T y_{i-1}`` has no step size; the same
    estimate-then-score procedure applies with both coefficients equal to 1.
    Returns ``(estimates, error)``.
    """
    if series.split_index < 2:
        raise InsufficientSteps("need at least 2 fitting steps to form one increment")
    combination = np.asarray(combination, dtype=float)
    y = series.values
    current = y[1 : series.split_index]
    lagged = y[0 : series.split_index - 1]
    estimates = (current - lagged @ combination).mean(axis=0)
    m = y[series.split_index :].mean(axis=0)
    residual = m - m @ combination - estimates
    return estimates, float(np.linalg.norm(residual) / series.n_agents)


class DeltaScan(NamedTuple):
    deltas: np.ndarray
    errors: np.ndarray
    best_delta: float
    best_error: float
    traditional_error: float


def scan_delta(series, combination, grid, include_traditional=False):
    """Evaluate the fit error over a step-size grid.

    Each grid point estimates log-likelihood ratios on the fitting segment
    and scores them on the validation segment.  ``best_delta`` is the grid
    argmin; when ``include_traditional`` is set, the step-size-free fit is
    reported alongside (conventionally plotted in place of delta = 0) but
    does not participate in the argmin.
    """
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ValueError("empty delta grid")
    for d in grid:
        _check_delta(d)
    errors = np.empty(grid.size)
    for i, d in enumerate(grid):
        estimates = estimate_log_likelihoods(series, combination, d)
        errors[i] = fit_error(series, combination, d, estimates)
    best = int(np.argmin(errors))
    traditional_error = None
    if include_traditional:
        _, traditional_error = traditional_fit(series, combination)
    return DeltaScan(
        deltas=grid,
        errors=errors,
        best_delta=float(grid[best]),
        best_error=float(errors[best]),
        traditional_error=traditional_error,
    )


def recursion_series(log_likelihood_ratios, combination, delta, steps, start=None):
    """Generate a noiseless log-ratio series from the recursion itself.

    Feeds constant per-agent log-likelihood ratios through
    ``y_i = delta * c + (1 - delta) * A^T y_{i-1}`` starting from zeros (the
    uniform belief).  Useful as a round-trip oracle for the estimators.
    """
    _check_delta(delta)
    c = np.asarray(log_likelihood_ratios, dtype=float)
    combination = np.asarray(combination, dtype=float)
    out = np.empty((steps + 1, c.size))
    out[0] = np.zeros(c.size) if start is None else np.asarray(start, dtype=float)
    for i in range(1, steps + 1):
        out[i] = delta * c + (1.0 - delta) * (out[i - 1] @ combination)
    return out

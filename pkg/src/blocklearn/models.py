"""Hypothesis sets, per-agent discrete likelihood models, and KL utilities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SupportMismatch

__all__ = [
    "HypothesisSet",
    "LikelihoodProfile",
    "InformativenessReport",
    "bernoulli_profile",
    "random_multinomial_profile",
    "kl_divergence",
    "cluster_informativeness",
    "check_global_identifiability",
    "sample_observation",
    "observation_matrix",
    "save_profile",
    "load_profile",
]

MIN_LIKELIHOOD = 1e-12
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class HypothesisSet:
    """Ordered, immutable collection of hypothesis labels."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(labels) < 2:
            raise ValueError("need at least two hypotheses")
        if len(set(labels)) != len(labels):
            raise ValueError("hypothesis labels must be unique")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def numbered(cls, count):
        return cls(tuple(f"theta{i}" for i in range(count)))

    def index(self, label):
        return self.labels.index(label)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


@dataclass
class LikelihoodProfile:
    """Per-agent, per-hypothesis distributions over a finite alphabet.

    Attributes
    ----------
    likelihoods : ndarray, shape (N, H, m)
        ``likelihoods[k, h]`` is the distribution of agent k's observation
        under hypothesis h.  Every row must sum to one and every entry must
        be strictly positive (at least 1e-12) so log-likelihood ratios stay
        finite.
    true_state : ndarray, shape (N,)
        Index of the hypothesis generating each agent's observations.
    hypotheses : HypothesisSet
    """

    likelihoods: np.ndarray
    true_state: np.ndarray
    hypotheses: HypothesisSet = None
    reference: str = "inline"
    log_likelihoods: np.ndarray = field(init=False, repr=False)
    _true_cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.likelihoods = np.asarray(self.likelihoods, dtype=float)
        self.true_state = np.asarray(self.true_state, dtype=int)
        if self.likelihoods.ndim != 3:
            raise ValueError("likelihoods must have shape (agents, hypotheses, alphabet)")
        n, h, _ = self.likelihoods.shape
        if self.hypotheses is None:
            self.hypotheses = HypothesisSet.numbered(h)
        if len(self.hypotheses) != h:
            raise ValueError("hypothesis labels do not match likelihood axis")
        if self.true_state.shape != (n,):
            raise ValueError("true_state must assign one hypothesis per agent")
        if np.any(self.true_state < 0) or np.any(self.true_state >= h):
            raise ValueError("true_state indices out of range")
        if np.any(self.likelihoods < MIN_LIKELIHOOD):
            raise ValueError(
                f"likelihood entries must be at least {MIN_LIKELIHOOD} "
                "(log-likelihood ratios must stay finite)"
            )
        row_sums = self.likelihoods.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise ValueError("each likelihood row must sum to one")
        self.log_likelihoods = np.log(self.likelihoods)
        true_rows = self.likelihoods[np.arange(n), self.true_state]
        self._true_cdf = np.cumsum(true_rows, axis=1)

    @property
    def n_agents(self):
        return self.likelihoods.shape[0]

    @property
    def n_hypotheses(self):
        return self.likelihoods.shape[1]

    @property
    def alphabet_size(self):
        return self.likelihoods.shape[2]


def _normalize_rows(raw):
    raw = np.clip(raw, MIN_LIKELIHOOD, None)
    return raw / raw.sum(axis=-1, keepdims=True)


def bernoulli_profile(clusters, success_probs):
    """Profile where hypothesis h makes every agent observe Bernoulli(s_h).

    ``clusters`` doubles as the true state: agents in cluster c follow
    hypothesis c.
    """
    clusters = np.asarray(clusters, dtype=int)
    probs = np.asarray(success_probs, dtype=float)
    rows = np.stack([1.0 - probs, probs], axis=1)  # (H, 2)
    likelihoods = _normalize_rows(np.broadcast_to(rows, (clusters.size, *rows.shape)).copy())
    return LikelihoodProfile(
        likelihoods=likelihoods,
        true_state=clusters,
        reference=f"bernoulli{tuple(float(p) for p in probs)}",
    )


def random_multinomial_profile(clusters, alphabet_size, seed, n_hypotheses=None):
    """Per-agent random multinomial likelihoods: entries drawn uniform(0, 1)
    and normalized.  Agents in cluster c follow hypothesis c."""
    clusters = np.asarray(clusters, dtype=int)
    if n_hypotheses is None:
        n_hypotheses = int(clusters.max()) + 1
    rng = np.random.default_rng(seed)
    raw = rng.random((clusters.size, n_hypotheses, alphabet_size))
    return LikelihoodProfile(
        likelihoods=_normalize_rows(raw),
        true_state=clusters,
        reference=f"multinomial(m={alphabet_size}, seed={seed})",
    )


def kl_divergence(p, q):
    """Kullback-Leibler divergence ``sum p_i log(p_i / q_i)`` in nats.

    Zero-mass entries of ``p`` contribute nothing; a zero in ``q`` facing
    positive mass in ``p`` raises SupportMismatch.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal length")
    support = p > 0
    if np.any(q[support] <= 0):
        raise SupportMismatch("q has zero mass on the support of p")
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def divergence_table(profile):
    """Per-agent KL from the agent's true model to every hypothesis: (N, H)."""
    n, h = profile.n_agents, profile.n_hypotheses
    table = np.empty((n, h))
    for k in range(n):
        true_row = profile.likelihoods[k, profile.true_state[k]]
        for j in range(h):
            table[k, j] = kl_divergence(true_row, profile.likelihoods[k, j])
    return table


@dataclass
class InformativenessReport:
    """Cluster-level informativeness summary.

    ``d0``/``d1`` hold the two-cluster pairwise values (KL from each
    cluster's true model to the other cluster's truth); they are None when
    the layout is not two clusters with distinct truths.  ``summed_d[c]``
    averages, over cluster-c agents, the total divergence to all competing
    hypotheses.  ``per_agent[k, h]`` is the KL from agent k's true model to
    hypothesis h.  Deviations are within-cluster ranges (max minus min).
    """

    per_agent: np.ndarray
    clusters: np.ndarray
    d0: float
    d1: float
    summed_d: np.ndarray
    homogeneous: bool
    max_deviation: float
    variant_used: str = "pairwise (d0, d1); summed_d is the multi-hypothesis sum"


def cluster_informativeness(profile, clusters, tol=1e-9):
    """Summarize per-cluster informativeness and check within-cluster homogeneity."""
    clusters = np.asarray(clusters, dtype=int)
    table = divergence_table(profile)
    labels = np.unique(clusters)

    max_dev = 0.0
    for c in labels:
        rows = table[clusters == c]
        max_dev = max(max_dev, float((rows.max(axis=0) - rows.min(axis=0)).max()))
    homogeneous = max_dev <= tol

    others = table.sum(axis=1)  # own-truth column is zero, so the row sum is the competitor sum
    summed = np.array([others[clusters == c].mean() for c in labels])

    d0 = d1 = None
    if labels.size == 2:
        truth0 = profile.true_state[clusters == labels[0]]
        truth1 = profile.true_state[clusters == labels[1]]
        if truth0.size and truth1.size and np.all(truth0 == truth0[0]) and np.all(truth1 == truth1[0]):
            t0, t1 = int(truth0[0]), int(truth1[0])
            if t0 != t1:
                d0 = float(table[clusters == labels[0], t1].mean())
                d1 = float(table[clusters == labels[1], t0].mean())

    return InformativenessReport(
        per_agent=table,
        clusters=clusters,
        d0=d0,
        d1=d1,
        summed_d=summed,
        homogeneous=homogeneous,
        max_deviation=max_dev,
    )


def check_global_identifiability(profile, theta_star):
    """Check that every competing hypothesis is distinguishable by someone.

    Returns ``(identifiable, witnesses)`` where ``witnesses[h]`` lists the
    agents with strictly positive KL between hypothesis ``theta_star`` and
    hypothesis ``h``.
    """
    if isinstance(theta_star, str):
        theta_star = profile.hypotheses.index(theta_star)
    witnesses = {}
    ok = True
    for h in range(profile.n_hypotheses):
        if h == theta_star:
            continue
        agents = [
            k
            for k in range(profile.n_agents)
            if kl_divergence(profile.likelihoods[k, theta_star], profile.likelihoods[k, h]) > 0
        ]
        witnesses[h] = agents
        ok = ok and bool(agents)
    return ok, witnesses


def _symbols_from_uniforms(cdf, u):
    """Map uniform draws to alphabet symbols through a cdf row (shared by the
    scalar and batch samplers so their streams agree)."""
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.size - 1)


def sample_observation(profile, agent, rng):
    """Draw one observation for ``agent`` from its true-hypothesis model."""
    return int(_symbols_from_uniforms(profile._true_cdf[agent], rng.random()))


def observation_matrix(profile, horizon, seed):
    """Draw ``(N, horizon)`` observation symbols, one independent substream
    per agent (spawned by agent index, so the draws of agent k do not depend
    on the network size)."""
    n = profile.n_agents
    out = np.empty((n, horizon), dtype=np.int64)
    children = np.random.SeedSequence(seed).spawn(n)
    for k in range(n):
        u = np.random.default_rng(children[k]).random(horizon)
        out[k] = _symbols_from_uniforms(profile._true_cdf[k], u)
    return out


# -- text format -------------------------------------------------------------
#
# Header "N H m", one line of hypothesis labels, one line of per-agent true
# state indices, then N*H probability rows (agent-major).  '#' starts a
# comment line.


def save_profile(path, profile):
    n, h, m = profile.likelihoods.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {h} {m}\n")
        fh.write(" ".join(profile.hypotheses.labels) + "\n")
        fh.write(" ".join(str(int(t)) for t in profile.true_state) + "\n")
        for k in range(n):
            for j in range(h):
                fh.write(" ".join(f"{v:.17g}" for v in profile.likelihoods[k, j]) + "\n")


def load_profile(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    n, h, m = (int(tok) for tok in lines[0].split())
    labels = tuple(lines[1].split())
    true_state = np.fromstring(lines[2], dtype=int, sep=" ")
    rows = [np.fromstring(ln, dtype=float, sep=" ") for ln in lines[3 : 3 + n * h]]
    likelihoods = np.vstack(rows).reshape(n, h, m)
    return LikelihoodProfile(
        likelihoods=likelihoods,
        true_state=true_state,
        hypotheses=HypothesisSet(labels),
        reference=str(path),
    )

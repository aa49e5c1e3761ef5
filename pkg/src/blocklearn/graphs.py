"""Stochastic Block Model networks and combination-matrix analysis.

Generates directed SBM graphs, builds averaging-rule (column normalized)
combination matrices, and evaluates the closed-form network theory: the
expected combination matrix in block form, its exact powers in the symmetric
case, Perron eigenvectors, and inverse-moment approximations for binomial
in-degrees.

Conventions
-----------
Adjacency entry ``E[l, k] = 1`` means agent ``k`` receives from agent ``l``,
so column ``k`` lists the in-neighbors of ``k``.  For two communities the
edge-probability matrix has blocks ``[[p0, q0], [q1, p1]]`` indexed by
(source cluster, target cluster): ``q0`` is the probability of an edge from a
cluster-0 agent into a cluster-1 column, ``q1`` the reverse.  Diagonal
(self-loop) entries are sampled like any other intra-cluster entry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateBlock,
    InvalidRegimeWarning,
    NoConvergence,
    NotStronglyConnected,
    ZeroColumn,
)

__all__ = [
    "SbmParams",
    "BlockModel",
    "Network",
    "ExpectedMatrix",
    "sample_adjacency",
    "sample_sbm",
    "averaging_combination",
    "expected_combination",
    "expected_perron",
    "closed_form_power",
    "perron_vector",
    "is_strongly_connected",
    "inverse_binomial_moment",
    "save_network",
    "load_network",
    "save_matrix_csv",
    "load_matrix_csv",
]

COLUMN_SUM_TOL = 1e-12


def _check_probability(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SbmParams:
    """Two-community SBM law.

    Parameters
    ----------
    n0, n1 : int
        Community sizes (each at least 1).
    p0, p1 : float
        Intra-community edge probabilities.
    q0 : float
        Probability of an edge from a cluster-0 agent into a cluster-1 column.
    q1 : float
        Probability of an edge from a cluster-1 agent into a cluster-0 column.
    """

    n0: int
    n1: int
    p0: float
    p1: float
    q0: float
    q1: float

    def __post_init__(self):
        if self.n0 < 1 or self.n1 < 1:
            raise ValueError("community sizes must be at least 1")
        for name in ("p0", "p1", "q0", "q1"):
            _check_probability(name, getattr(self, name))

    @property
    def size(self):
        return self.n0 + self.n1

    @property
    def sizes(self):
        return (self.n0, self.n1)

    def block_probabilities(self):
        """2x2 block matrix indexed (source cluster, target cluster)."""
        return np.array([[self.p0, self.q0], [self.q1, self.p1]])

    def to_block_model(self):
        return BlockModel(sizes=self.sizes, probs=self.block_probabilities())

    @property
    def is_symmetric(self):
        return self.n0 == self.n1 and self.p0 == self.p1 and self.q0 == self.q1

    def to_dict(self):
        return {k: getattr(self, k) for k in ("n0", "n1", "p0", "p1", "q0", "q1")}


@dataclass(frozen=True, eq=False)
class BlockModel:
    """General k-community SBM law: community sizes plus a k x k probability matrix.

    ``probs[i, j]`` is the probability of an edge from a cluster-i agent into
    a cluster-j column.  The closed-form theory below is two-community only;
    this generalization exists for sampling.
    """

    sizes: tuple
    probs: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        probs = np.asarray(self.probs, dtype=float)
        k = len(sizes)
        if k < 1 or any(s < 1 for s in sizes):
            raise ValueError("need at least one community, each of size >= 1")
        if probs.shape != (k, k):
            raise ValueError(f"probs must be {k}x{k}, got {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def size(self):
        return sum(self.sizes)

    @property
    def n_communities(self):
        return len(self.sizes)

    def labels(self):
        """Per-agent cluster label, communities laid out contiguously."""
        return np.repeat(np.arange(self.n_communities), self.sizes)

    def probability_matrix(self):
        """Dense N x N matrix of per-entry edge probabilities."""
        lab = self.labels()
        return self.probs[np.ix_(lab, lab)]


def _as_block_model(params):
    if isinstance(params, SbmParams):
        return params.to_block_model()
    if isinstance(params, BlockModel):
        return params
    raise TypeError(f"expected SbmParams or BlockModel, got {type(params).__name__}")


@dataclass
class Network:
    """A realized network: binary adjacency, left-stochastic combination, labels.

    ``combination[l, k]`` is the trust agent ``k`` puts in neighbor ``l``;
    every column sums to one.  ``retries`` records how many redraws the
    sampler needed before this realization was accepted.
    """

    adjacency: np.ndarray
    combination: np.ndarray
    clusters: np.ndarray
    retries: int = 0

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency)
        self.combination = np.asarray(self.combination, dtype=float)
        self.clusters = np.asarray(self.clusters)
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n) or self.combination.shape != (n, n):
            raise ValueError("adjacency and combination must be square and same size")
        if self.clusters.shape != (n,):
            raise ValueError("clusters must have one label per agent")
        col_sums = self.combination.sum(axis=0)
        if np.any(np.abs(col_sums - 1.0) > 1e-9):
            raise ValueError("combination matrix is not left-stochastic")
        if np.any((self.combination > 0) != (self.adjacency > 0)):
            raise ValueError("combination support must match adjacency support")

    @property
    def size(self):
        return self.adjacency.shape[0]

    def cluster_sizes(self):
        return np.bincount(self.clusters)


def sample_adjacency(params, rng):
    """Draw a raw adjacency matrix: every entry (diagonal included) is an
    independent Bernoulli with its block probability.  No connectivity
    conditioning is applied."""
    model = _as_block_model(params)
    prob = model.probability_matrix()
    return (rng.random(prob.shape) < prob).astype(np.int8)


def averaging_combination(adjacency):
    """Column-normalize a binary adjacency matrix (the averaging rule).

    Entry ``(l, k)`` becomes ``E[l, k] / sum_l E[l, k]`` so each agent gives
    equal confidence to each of its in-neighbors.

    Raises
    ------
    ZeroColumn
        If some column has no nonzero entry; the offending agent index is
        attached to the exception.
    """
    adjacency = np.asarray(adjacency)
    col_sums = adjacency.sum(axis=0)
    zero = np.flatnonzero(col_sums == 0)
    if zero.size:
        raise ZeroColumn(int(zero[0]))
    return adjacency / col_sums


def sample_sbm(params, seed, require_strong_connectivity=True, max_retries=100):
    """Sample an SBM network with an averaging-rule combination matrix.

    Whole graphs are redrawn until the realization has no isolated column
    and, when ``require_strong_connectivity`` is set, is strongly connected
    with at least one self-loop (so the combination matrix is primitive).

    Parameters
    ----------
    params : SbmParams or BlockModel
    seed : int
        Seed for the draw; equal seeds give identical networks.
    require_strong_connectivity : bool
        Redraw until the directed graph is strongly connected and has a
        self-loop.
    max_retries : int
        Redraw budget (at least 1).

    Raises
    ------
    ZeroColumn
        If the final attempt still contains an agent without in-neighbors.
    NotStronglyConnected
        If the retry budget is exhausted on connectivity.
    """
    if max_retries < 1:
        raise ValueError("max_retries must be at least 1")
    model = _as_block_model(params)
    rng = np.random.default_rng(seed)
    last_failure = None
    for attempt in range(max_retries):
        adjacency = sample_adjacency(model, rng)
        if np.any(adjacency.sum(axis=0) == 0):
            last_failure = ZeroColumn(int(np.flatnonzero(adjacency.sum(axis=0) == 0)[0]))
            continue
        if require_strong_connectivity:
            connected, has_loop = is_strongly_connected(adjacency)
            if not (connected and has_loop):
                last_failure = NotStronglyConnected(
                    f"draw {attempt} not primitive (connected={connected}, self_loop={has_loop})"
                )
                continue
        combination = averaging_combination(adjacency)
        return Network(
            adjacency=adjacency,
            combination=combination,
            clusters=model.labels(),
            retries=attempt,
        )
    if isinstance(last_failure, ZeroColumn):
        raise last_failure
    raise NotStronglyConnected(
        f"no strongly connected draw within {max_retries} retries"
    )


def is_strongly_connected(adjacency):
    """Directed strong connectivity plus self-loop presence.

    Returns
    -------
    (connected, has_self_loop) : tuple of bool
        ``connected`` is established by two reachability passes (forward and
        reverse from agent 0); primitivity in the usual sense requires both
        flags true.
    """
    adjacency = np.asarray(adjacency) > 0
    n = adjacency.shape[0]
    has_loop = bool(adjacency.diagonal().any())

    def _reaches_all(mat):
        reached = np.zeros(n, dtype=bool)
        reached[0] = True
        frontier = reached.copy()
        while frontier.any():
            # out-neighbors of the frontier: columns hit by any frontier row
            new = mat[frontier].any(axis=0) & ~reached
            reached |= new
            frontier = new
        return reached.all()

    connected = _reaches_all(adjacency) and _reaches_all(adjacency.T)
    return connected, has_loop


@dataclass(frozen=True, eq=False)
class ExpectedMatrix:
    """Block form of the expected combination matrix for a two-community SBM.

    ``block_values[i, j]`` is the constant entry of the (source-i, target-j)
    block; ``sizes`` are the community sizes.  ``dense()`` expands to the full
    N x N matrix, which is left-stochastic by construction.
    """

    block_values: np.ndarray
    sizes: tuple
    params: SbmParams = field(repr=False, default=None)

    def dense(self):
        n0, n1 = self.sizes
        v = self.block_values
        out = np.block(
            [
                [np.full((n0, n0), v[0, 0]), np.full((n0, n1), v[0, 1])],
                [np.full((n1, n0), v[1, 0]), np.full((n1, n1), v[1, 1])],
            ]
        )
        col_sums = out.sum(axis=0)
        if np.any(np.abs(col_sums - 1.0) > COLUMN_SUM_TOL):
            raise DegenerateBlock("expected matrix is not left-stochastic")
        return out

    def labels(self):
        return np.repeat(np.arange(2), self.sizes)


def expected_combination(params):
    """Expected combination matrix of a two-community SBM, in block form.

    The four block values are ``p0/r0``, ``q0/r1``, ``q1/r0``, ``p1/r1``
    with ``r0 = p0*n0 + q1*n1`` and ``r1 = q0*n0 + p1*n1`` (the expected
    in-degree of a column in each community).  This approximates the true
    entrywise expectation up to a residual of order ``min(n0, n1)**(-4/3)``.

    Raises
    ------
    DegenerateBlock
        If a block normalizer ``r0`` or ``r1`` is zero.
    """
    if not isinstance(params, SbmParams):
        raise TypeError("expected_combination is defined for two-community SbmParams")
    r0 = params.p0 * params.n0 + params.q1 * params.n1
    r1 = params.q0 * params.n0 + params.p1 * params.n1
    if r0 <= 0 or r1 <= 0:
        raise DegenerateBlock(f"zero expected in-degree (r0={r0}, r1={r1})")
    values = np.array(
        [
            [params.p0 / r0, params.q0 / r1],
            [params.q1 / r0, params.p1 / r1],
        ]
    )
    return ExpectedMatrix(block_values=values, sizes=params.sizes, params=params)


def expected_perron(params):
    """Closed-form Perron eigenvector of the expected combination matrix.

    With ``r0 = p0*n0 + q1*n1`` and ``r1 = q0*n0 + p1*n1`` the per-agent
    entries are ``q0*r0 / (q0*r0*n0 + q1*r1*n1)`` in cluster 0 and
    ``q1*r1 / (q0*r0*n0 + q1*r1*n1)`` in cluster 1.

    Raises
    ------
    DegenerateBlock
        If the clusters are decoupled (``q0`` or ``q1`` is zero), in which
        case no strictly positive eigenvector exists.
    """
    if not isinstance(params, SbmParams):
        raise TypeError("expected_perron is defined for two-community SbmParams")
    if params.q0 <= 0 or params.q1 <= 0:
        raise DegenerateBlock("decoupled clusters: Perron vector is not strictly positive")
    r0 = params.p0 * params.n0 + params.q1 * params.n1
    r1 = params.q0 * params.n0 + params.p1 * params.n1
    total = params.q0 * r0 * params.n0 + params.q1 * r1 * params.n1
    u0 = params.q0 * r0 / total
    u1 = params.q1 * r1 / total
    return np.concatenate([np.full(params.n0, u0), np.full(params.n1, u1)])


def closed_form_power(p, q, n, t):
    """Exact t-th power of the expected combination matrix for symmetric
    communities (equal sizes ``n``, intra probability ``p``, cross ``q``).

    Returns the ``2n x 2n`` matrix whose intra-block entries are
    ``(1 + r**t) / (2n)`` and cross-block entries ``(1 - r**t) / (2n)``
    with ratio ``r = (p - q) / (p + q)``.

    A warning is emitted when ``q >= p``: the expression still evaluates but
    the community structure it describes is inverted or absent.
    """
    if n < 1:
        raise ValueError("community size must be at least 1")
    if t < 1:
        raise ValueError("power must be at least 1")
    _check_probability("p", p)
    _check_probability("q", q)
    if p + q <= 0:
        raise DegenerateBlock("p + q must be positive")
    if q >= p:
        warnings.warn(
            f"closed-form power assumes q < p (got p={p}, q={q})",
            InvalidRegimeWarning,
            stacklevel=2,
        )
    ratio = ((p - q) / (p + q)) ** t
    block = np.array([[1 + ratio, 1 - ratio], [1 - ratio, 1 + ratio]]) / (2 * n)
    return np.kron(block, np.ones((n, n)))


def perron_vector(matrix, tol=1e-12, max_iter=10**6):
    """Perron eigenvector of a column-stochastic matrix by power iteration.

    Starts from the uniform vector and iterates ``v <- A v`` (renormalized to
    sum one) until successive iterates agree within ``tol`` and the residual
    ``max |A u - u|`` is below ``tol``.

    Raises
    ------
    NoConvergence
        If the tolerance is not reached within ``max_iter`` steps (e.g. for
        non-primitive matrices).
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        w = matrix @ v
        s = w.sum()
        if s <= 0:
            raise NoConvergence("iterate collapsed to zero")
        w = w / s
        if np.max(np.abs(w - v)) <= tol:
            if np.max(np.abs(matrix @ w - w)) <= tol:
                return w
        v = w
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps")


def inverse_binomial_moment(c, n, p, t=1, mode="approx"):
    """Inverse moment ``E 1/(c + B)**t`` for ``B ~ Binomial(n, p)``.

    ``mode='approx'`` returns the plug-in value ``1/(c + n*p)**t``, which
    underestimates the exact moment (Jensen) by a term of order
    ``n**-(t + 1/3)``.  ``mode='exact'`` sums the binomial pmf directly.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if t < 1:
        raise ValueError("t must be at least 1")
    _check_probability("p", p)
    if mode == "approx":
        return 1.0 / (c + n * p) ** t
    if mode == "exact":
        from scipy.stats import binom

        support = np.arange(n + 1)
        pmf = binom.pmf(support, n, p)
        return float(np.sum(pmf / (c + support) ** t))
    raise ValueError(f"mode must be 'approx' or 'exact', got {mode!r}")


# -- text formats -----------------------------------------------------------
#
# Network file: a header line, then N rows of N space-separated adjacency
# bits.  The header is "N n0 n1" for two communities or "N k s0 ... s_{k-1}"
# in general.  Lines starting with '#' are comments.


def save_network(path, network):
    """Write adjacency and cluster layout as a plain-text matrix file."""
    sizes = np.bincount(network.clusters)
    with open(path, "w") as fh:
        if len(sizes) == 2:
            fh.write(f"{network.size} {sizes[0]} {sizes[1]}\n")
        else:
            fh.write(f"{network.size} {len(sizes)} " + " ".join(map(str, sizes)) + "\n")
        for row in network.adjacency:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def load_network(path):
    """Read a network file and rebuild the averaging-rule combination matrix."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = [int(tok) for tok in lines[0].split()]
    if len(header) == 3:
        n, sizes = header[0], header[1:]
    else:
        n, k = header[0], header[1]
        sizes = header[2 : 2 + k]
        if len(sizes) != k:
            raise ValueError("malformed network header")
    if sum(sizes) != n:
        raise ValueError("community sizes do not sum to the agent count")
    rows = [np.fromstring(ln, dtype=int, sep=" ") for ln in lines[1 : 1 + n]]
    adjacency = np.vstack(rows).astype(np.int8)
    if adjacency.shape != (n, n):
        raise ValueError("adjacency block does not match declared size")
    clusters = np.repeat(np.arange(len(sizes)), sizes)
    return Network(
        adjacency=adjacency,
        combination=averaging_combination(adjacency),
        clusters=clusters,
    )


def save_matrix_csv(path, matrix):
    """Write a dense matrix as CSV with 17 significant digits (lossless for
    double precision)."""
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def load_matrix_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=","))

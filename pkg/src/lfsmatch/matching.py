"""Affinity assembly, assignment solvers and the reweighted random walk IQP solver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import GroundTruth, WeightedGraph
from .spectral import (
    Kernel,
    default_distance_mode,
    default_t_grid,
    dvs_signature,
    heat_kernel_matrix,
    laplacian_eig,
    lfs,
    signature_distance_matrix,
)

DEFAULT_MAX_DIM = 4096


class DimensionError(ValueError):
    """Candidate-pair space too large for a dense affinity matrix."""


@dataclass(frozen=True)
class AffinityMatrix:
    """Dense ``n1*n2`` square affinity over candidate pairs ``ia = i * n2 + a``."""

    W: np.ndarray
    n1: int
    n2: int
    gamma: float
    transform: str

    @property
    def dim(self) -> int:
        return self.n1 * self.n2


@dataclass
class MatchResult:
    assignment: dict[int, int]
    x_continuous: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True
    accuracy: float | None = None
    scores: dict[int, float] = field(default_factory=dict)


# -- affinity -----------------------------------------------------------------


def transform_distances(d: np.ndarray, gamma: float, transform: str = "gaussian") -> np.ndarray:
    if transform == "gaussian":
        return np.exp(-(d**2) / gamma**2)
    if transform == "exponential":
        return np.exp(-d / gamma)
    raise ValueError(f"unknown affinity transform {transform!r}")


def pair_distance_tensor(M1: np.ndarray, M2: np.ndarray) -> np.ndarray:
    """``D[ia, jb] = |M1[i, j] - M2[a, b]|`` laid out as an ``n1*n2`` square matrix."""
    n1, n2 = M1.shape[0], M2.shape[0]
    D = np.abs(M1[:, None, :, None] - M2[None, :, None, :])
    return D.reshape(n1 * n2, n1 * n2)


def conflict_masks(n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks over ``(ia, jb)``: valid second-order pairs (i != j and a != b)
    and the diagonal (i == j and a == b). Everything else conflicts."""
    i = np.repeat(np.arange(n1), n2)
    a = np.tile(np.arange(n2), n1)
    off = (i[:, None] != i[None, :]) & (a[:, None] != a[None, :])
    return off, np.eye(n1 * n2, dtype=bool)


def build_affinity(
    g1: WeightedGraph,
    g2: WeightedGraph,
    node_dist: np.ndarray | None = None,
    t: float = 1.0,
    sig_weight: float = 0.0,
    transform: str = "gaussian",
    gamma: float | None = None,
    mode: str = "heat",
    max_dim: int = DEFAULT_MAX_DIM,
) -> AffinityMatrix:
    """Assemble the compatibility matrix and convert distances to affinities.

    ``mode="heat"`` uses pairwise heat kernel distances at time ``t``;
    ``mode="adjacency"`` uses pairwise adjacency distances. When ``sig_weight > 0``
    the diagonal holds the transformed node distances ``sig_weight * node_dist``.
    ``gamma`` defaults to the mean nonzero second-order distance.
    """
    n1, n2 = g1.n, g2.n
    if n1 * n2 > max_dim:
        raise DimensionError(f"{n1}x{n2}={n1 * n2} candidate pairs exceeds the cap of {max_dim}")
    if sig_weight < 0:
        raise ValueError("sig_weight must be nonnegative")
    if mode == "heat":
        if not t > 0:
            raise ValueError(f"t must be positive, got {t!r}")
        M1 = heat_kernel_matrix(laplacian_eig(g1), t)
        M2 = heat_kernel_matrix(laplacian_eig(g2), t)
    elif mode == "adjacency":
        M1, M2 = g1.adjacency(), g2.adjacency()
    else:
        raise ValueError(f"unknown affinity mode {mode!r}")

    D = pair_distance_tensor(M1, M2)
    off, diag = conflict_masks(n1, n2)
    use_nodes = sig_weight > 0 and node_dist is not None
    if sig_weight > 0 and node_dist is None:
        raise ValueError("node_dist is required when sig_weight > 0")
    if use_nodes:
        node_dist = np.asarray(node_dist, dtype=float)
        if node_dist.shape != (n1, n2):
            raise ValueError(f"node_dist must have shape {(n1, n2)}")

    if gamma is None:
        nz = D[off & (D > 0)]
        gamma = float(nz.mean()) if nz.size else 1.0
    if not gamma > 0:
        raise ValueError("gamma must be positive")

    W = np.zeros_like(D)
    W[off] = transform_distances(D[off], gamma, transform)
    if use_nodes:
        W[diag] = transform_distances(sig_weight * node_dist.ravel(), gamma, transform)
    return AffinityMatrix(W, n1, n2, gamma, transform)


# -- linear assignment ---------------------------------------------------------


def hungarian(cost) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-cost assignment by shortest augmenting paths with dual potentials.

    Rectangular inputs assign every row (or every column, whichever is fewer).
    Returns ``(rows, cols)`` index arrays sorted by row, like
    ``scipy.optimize.linear_sum_assignment``. O(n^2 m).
    """
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("cost matrix must be a nonempty 2-d array")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    transposed = C.shape[0] > C.shape[1]
    if transposed:
        C = C.T
    n, m = C.shape

    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)  # owner[j]: 1-based row matched to column j
    way = np.zeros(m + 1, dtype=int)
    for row in range(1, n + 1):
        owner[0] = row
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            cur = C[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    cols = np.nonzero(owner[1:])[0]
    rows = owner[1:][cols] - 1
    if transposed:
        rows, cols = cols, rows
    order = np.argsort(rows)
    return rows[order], cols[order]


def assignment_cost(cost, rows, cols) -> float:
    return float(np.asarray(cost, dtype=float)[rows, cols].sum())


# -- RRWM -------------------------------------------------------------------------


def sinkhorn_normalize(y: np.ndarray, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Alternate row and column normalization until the matrix stops changing.

    All-zero rows or columns are left untouched and reported with a warning.
    """
    y = np.array(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("sinkhorn input must be nonnegative")
    rows_ok = y.sum(axis=1) > 0
    cols_ok = y.sum(axis=0) > 0
    if not (rows_ok.all() and cols_ok.all()):
        warnings.warn("sinkhorn: zero rows/columns left unnormalized", RuntimeWarning, stacklevel=2)
    for _ in range(max_iter):
        prev = y.copy()
        rs = y.sum(axis=1, keepdims=True)
        y = np.divide(y, rs, out=y, where=rs > 0)
        cs = y.sum(axis=0, keepdims=True)
        y = np.divide(y, cs, out=y, where=cs > 0)
        if np.max(np.abs(y - prev)) <= tol:
            break
    return y


@dataclass
class RRWMResult:
    x: np.ndarray
    iterations: int
    converged: bool


def rrwm(
    W,
    n1: int | None = None,
    n2: int | None = None,
    reweight_alpha: float = 0.2,
    inflation_beta: float = 30.0,
    tol: float = 1e-6,
    max_iter: int = 300,
    sinkhorn_tol: float = 1e-8,
    sinkhorn_max_iter: int = 100,
) -> RRWMResult:
    """Reweighted random walk over candidate pairs.

    Each step walks ``x <- x P`` with ``P = W / max row sum``, inflates
    ``exp(beta x / max x)``, projects it with Sinkhorn, and mixes
    ``x <- alpha x + (1 - alpha) y`` before renormalizing onto the simplex.
    """
    if isinstance(W, AffinityMatrix):
        n1, n2, W = W.n1, W.n2, W.W
    W = np.array(W, dtype=float)
    if n1 is None or n2 is None or W.shape != (n1 * n2, n1 * n2):
        raise ValueError("W must be (n1*n2) x (n1*n2) with n1, n2 given")
    if np.any(W < 0):
        raise ValueError("affinity must be nonnegative")
    if not 0.0 <= reweight_alpha <= 1.0:
        raise ValueError("reweight_alpha must lie in [0, 1]")
    if not inflation_beta > 0:
        raise ValueError("inflation_beta must be positive")
    i = np.repeat(np.arange(n1), n2)
    a = np.tile(np.arange(n2), n1)
    W[(i[:, None] == i[None, :]) != (a[:, None] == a[None, :])] = 0.0
    d_max = W.sum(axis=1).max()
    if not d_max > 0:
        raise ValueError("affinity matrix has no positive entries")
    P = W / d_max

    x = np.full(n1 * n2, 1.0 / (n1 * n2))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        walked = x @ P
        peak = walked.max()
        if peak > 0:
            # shifting the exponent is a uniform rescale that Sinkhorn removes
            y = np.exp(inflation_beta * (walked / peak - 1.0))
        else:
            y = np.ones_like(walked)
        y = sinkhorn_normalize(y.reshape(n1, n2), sinkhorn_tol, sinkhorn_max_iter).ravel()
        y /= y.sum()
        x_new = reweight_alpha * walked + (1.0 - reweight_alpha) * y
        x_new /= x_new.sum()
        step = np.abs(x_new - x).sum()
        x = x_new
        if step <= tol:
            converged = True
            break
    return RRWMResult(x, it, converged)


def discretize(x, n1: int, n2: int) -> dict[int, int]:
    """Greedy one-to-one rounding: take the global maximum, drop its row and column.

    Ties resolve to the lowest ``(i, a)`` index.
    """
    X = np.array(x, dtype=float).reshape(n1, n2)
    out = {}
    for _ in range(min(n1, n2)):
        k = int(np.argmax(X))
        i, a = divmod(k, n2)
        out[i] = a
        X[i, :] = -np.inf
        X[:, a] = -np.inf
    return out


def accuracy(assignment: dict[int, int], truth: GroundTruth) -> float:
    """Fraction of ground-truth pairs reproduced by the assignment."""
    if len(truth) == 0:
        raise ValueError("ground truth is empty")
    hits = sum(1 for i, a in truth.pairs if assignment.get(i) == a)
    return hits / len(truth)


# -- pipelines --------------------------------------------------------------------


def node_distance_matrix(
    g1: WeightedGraph,
    g2: WeightedGraph,
    kernel: Kernel | str,
    mode: str | None = None,
    t_grid=None,
    num: int = 100,
) -> np.ndarray:
    """Signature distances between every node of ``g1`` and every node of ``g2``.

    ``kernel="dvs"`` selects the degree vector baseline (L2 distance unless given).
    Spectral kernels sample both graphs on one shared grid.
    """
    if isinstance(kernel, str):
        if kernel != "dvs":
            raise ValueError("string kernels other than 'dvs' must be constructed with make_kernel")
        pad = max(g1.n, g2.n) - 1
        return signature_distance_matrix(dvs_signature(g1, pad), dvs_signature(g2, pad), mode or "l2")
    d1, d2 = laplacian_eig(g1), laplacian_eig(g2)
    if t_grid is None:
        t_grid = default_t_grid(kernel, d1, d2, num=num)
    s1, s2 = lfs(d1, kernel, t_grid), lfs(d2, kernel, t_grid)
    return signature_distance_matrix(s1.values, s2.values, mode or default_distance_mode(kernel))


def bipartite_signature_match(
    g1: WeightedGraph,
    g2: WeightedGraph,
    kernel: Kernel | str,
    mode: str | None = None,
    truth: GroundTruth | None = None,
    t_grid=None,
) -> MatchResult:
    """Hungarian matching on node-signature distances."""
    cost = node_distance_matrix(g1, g2, kernel, mode, t_grid)
    rows, cols = hungarian(cost)
    assignment = dict(zip(rows.tolist(), cols.tolist()))
    result = MatchResult(assignment, scores={i: float(cost[i, a]) for i, a in assignment.items()})
    if truth is not None:
        result.accuracy = accuracy(assignment, truth)
    return result


def iqp_match(
    g1: WeightedGraph,
    g2: WeightedGraph,
    mode: str = "heat",
    t: float = 0.2,
    kernel: Kernel | str | None = None,
    sig_weight: float = 0.0,
    transform: str = "gaussian",
    gamma: float | None = None,
    truth: GroundTruth | None = None,
    reweight_alpha: float = 0.2,
    inflation_beta: float = 30.0,
    tol: float = 1e-6,
    max_iter: int = 300,
    max_dim: int = DEFAULT_MAX_DIM,
) -> MatchResult:
    """Second-order matching: affinity assembly, RRWM and greedy discretization."""
    node_dist = None
    if kernel is not None and sig_weight > 0:
        node_dist = node_distance_matrix(g1, g2, kernel)
    aff = build_affinity(g1, g2, node_dist, t, sig_weight, transform, gamma, mode, max_dim)
    res = rrwm(aff, reweight_alpha=reweight_alpha, inflation_beta=inflation_beta, tol=tol, max_iter=max_iter)
    assignment = discretize(res.x, aff.n1, aff.n2)
    X = res.x.reshape(aff.n1, aff.n2)
    out = MatchResult(
        assignment,
        res.x,
        res.iterations,
        res.converged,
        scores={i: float(X[i, a]) for i, a in assignment.items()},
    )
    if truth is not None:
        out.accuracy = accuracy(assignment, truth)
    return out

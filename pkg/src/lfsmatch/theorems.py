"""Randomized numerical checks of the descriptor stability and approximation bounds.

Each check returns a :class:`BoundReport` whose rows record one comparison of a
measured left-hand side against a bound; ``violations`` counts rows where the
bound fails beyond a relative slack of ``1e-9``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import WeightedGraph, gen_erdos_renyi, laplacian_from_adjacency
from .spectral import (
    EigenDecomposition,
    Heat,
    Kernel,
    default_t_grid,
    eig_sym,
    heat_kernel_matrix,
    laplacian_eig,
    lfs,
)

log = logging.getLogger(__name__)

SLACK = 1e-9
CSV_HEADER = ["trial", "seed", "param_t", "param_eps", "lhs", "rhs", "violation"]


@dataclass
class BoundReport:
    name: str
    trials: int = 0
    violations: int = 0
    max_ratio: float = 0.0
    skipped: int = 0
    parameters: dict = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)

    def add(self, trial: int, seed: int, t, eps, lhs: float, rhs: float, violated: bool | None = None):
        if violated is None:
            violated = lhs > rhs * (1 + SLACK) + SLACK * (rhs == 0)
        if rhs > 0:
            self.max_ratio = max(self.max_ratio, lhs / rhs)
        elif lhs > 0:
            self.max_ratio = float("inf")
        self.violations += int(violated)
        self.rows.append((trial, seed, t, eps, float(lhs), float(rhs), int(violated)))

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for trial, seed, t, eps, lhs, rhs, bad in self.rows:
            w.writerow([trial, seed, _fmt(t), _fmt(eps), _fmt(lhs), _fmt(rhs), bad])
        return buf.getvalue()

    def summary(self) -> str:
        return (
            f"{self.name}: trials={self.trials} rows={len(self.rows)} violations={self.violations} "
            f"skipped={self.skipped} max_ratio={self.max_ratio:.6g}"
        )


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    return f"{float(v):.17g}"


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# -- perturbations ------------------------------------------------------------------


def edge_perturbation(g: WeightedGraph, rng: np.random.Generator, max_eps: float, attempts: int = 1000) -> np.ndarray:
    """Laplacian of random edge-weight deltas with unit Frobenius norm.

    Deltas live on the existing edges. Directions that would push a weight
    negative at ``max_eps`` are rejected and redrawn; as a last resort the
    direction is restricted to edges heavier than ``max_eps``.
    """
    if not g.edges:
        raise ValueError("cannot perturb an edgeless graph")
    e = np.array(g.edges)
    i, j, w = e[:, 0].astype(int), e[:, 1].astype(int), e[:, 2]

    def unit(delta):
        D = np.zeros((g.n, g.n))
        D[i, j] = delta
        D[j, i] = delta
        dL = laplacian_from_adjacency(D)
        return dL, np.linalg.norm(dL)

    for _ in range(attempts):
        delta = rng.normal(size=len(w))
        dL, nrm = unit(delta)
        if np.all(w + max_eps * delta / nrm >= 0):
            return dL / nrm
    heavy = w > max_eps
    if not heavy.any():
        raise ValueError(f"no edge heavier than eps={max_eps}")
    delta = rng.normal(size=len(w)) * heavy
    # each |delta_e| <= 1 once normalized, so heavy edges stay nonnegative
    dL, nrm = unit(delta)
    return dL / nrm


# -- Theorem-level checks -----------------------------------------------------------


def check_lfs_continuity(
    g: WeightedGraph,
    kernel: Kernel | None = None,
    eps_grid: Sequence[float] = (1e-4, 1e-3, 1e-2),
    trials: int = 50,
    seed: int = 0,
    t_grid=None,
    band: float = 10.0,
) -> BoundReport:
    """Signature drift under Frobenius-controlled Laplacian perturbations.

    Per trial one random direction is scaled to every ``eps``; the ratio
    ``max_{node,t} |ds| / eps`` must stay within a ``band``-fold window of its
    value at the largest ``eps``. Rows with eigengap ``<= 2 eps`` are skipped.
    """
    kernel = kernel or Heat()
    eps_grid = sorted(float(e) for e in eps_grid)
    L = g.laplacian()
    dec = eig_sym(L)
    gap = dec.eigengap()
    positive = [e for e in eps_grid if e > 0]
    if positive and gap <= positive[0]:
        raise ValueError(f"eigengap {gap:.3g} is not larger than the smallest eps {positive[0]:.3g}")
    if t_grid is None:
        t_grid = default_t_grid(kernel, dec)
    base = lfs(dec, kernel, t_grid).values
    report = BoundReport(
        "lfs_continuity",
        parameters={"kernel": kernel.describe(), "eps": eps_grid, "eigengap": gap, "seed": seed},
    )
    usable = [e for e in eps_grid if e == 0 or gap > 2 * e]
    for trial in range(trials):
        s = seed + trial
        rng = _rng(s)
        direction = edge_perturbation(g, rng, max(eps_grid))
        ratios = {}
        for eps in eps_grid:
            if eps not in usable:
                report.skipped += 1
                continue
            drift = np.max(np.abs(lfs(eig_sym(L + eps * direction), kernel, t_grid).values - base))
            if eps == 0:
                report.add(trial, s, "", eps, drift, 0.0)
            else:
                ratios[eps] = drift / eps
        report.trials += 1
        if not ratios:
            continue
        ref = ratios[max(ratios)]
        for eps, r in ratios.items():
            bad = not (ref / band <= r <= ref * band)
            report.add(trial, s, "", eps, r, ref * band, violated=bad)
    return report


def check_subspace_invariance(
    g: WeightedGraph,
    kernel: Kernel | None = None,
    trials: int = 100,
    seed: int = 0,
    t_grid=None,
    tol: float = 1e-10,
    identity: bool = False,
) -> BoundReport:
    """Signatures recomputed after random orthogonal rotations of every
    repeated eigenspace must not move by more than ``tol``."""
    kernel = kernel or Heat()
    dec = laplacian_eig(g)
    groups = [grp for grp in dec.eigenspaces() if len(grp) > 1]
    report = BoundReport("subspace_invariance", parameters={"kernel": kernel.describe(), "seed": seed, "tol": tol})
    if not groups:
        log.warning("no repeated eigenvalue found; subspace invariance check skipped")
        report.skipped = trials
        return report
    if t_grid is None:
        t_grid = default_t_grid(kernel, dec)
    base = lfs(dec, kernel, t_grid).values
    for trial in range(trials):
        s = seed + trial
        rng = _rng(s)
        V = dec.vectors.copy()
        for grp in groups:
            Q = np.eye(len(grp)) if identity else random_orthogonal(len(grp), rng)
            V[:, grp] = V[:, grp] @ Q
        rotated = lfs(EigenDecomposition(dec.lambdas, V), kernel, t_grid).values
        report.add(trial, s, "", "", float(np.max(np.abs(rotated - base))), tol)
        report.trials += 1
    return report


def random_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign correction)."""
    Q, R = np.linalg.qr(rng.normal(size=(k, k)))
    return Q * np.sign(np.diag(R))


def hkd_limit_error(g1: WeightedGraph, g2: WeightedGraph, t: float, heat_kernel: Callable = heat_kernel_matrix) -> float:
    """``max |d^K_t / t - d^A|`` over quadruples with ``i != j`` and ``a != b``."""
    K1 = heat_kernel(laplacian_eig(g1), t)
    K2 = heat_kernel(laplacian_eig(g2), t)
    A1, A2 = g1.adjacency(), g2.adjacency()
    off1 = ~np.eye(g1.n, dtype=bool)
    off2 = ~np.eye(g2.n, dtype=bool)
    k1, k2, a1, a2 = K1[off1], K2[off2], A1[off1], A2[off2]
    dk = np.abs(k1[:, None] - k2[None, :])
    da = np.abs(a1[:, None] - a2[None, :])
    return float(np.max(np.abs(dk / t - da)))


def check_hkd_limit(
    pairs: Iterable[tuple[WeightedGraph, WeightedGraph]],
    t_grid: Sequence[float] = (8e-4, 4e-4, 2e-4, 1e-4),
    abs_tol: float = 1e-2,
    min_reduction: float = 0.9,
    heat_kernel: Callable = heat_kernel_matrix,
) -> BoundReport:
    """Small-time limit of pairwise heat kernel distances.

    Along the descending grid the error must shrink at least ``min_reduction``
    times as fast as ``t`` (1.8x per halving), and the error at the smallest
    ``t`` must be below ``abs_tol``. Errors under ``1e-12`` count as converged.
    """
    t_grid = sorted((float(t) for t in t_grid), reverse=True)
    if any(not 0 < t <= 1 for t in t_grid):
        raise ValueError("t values must lie in (0, 1]")
    report = BoundReport("hkd_limit", parameters={"t": t_grid, "abs_tol": abs_tol, "min_reduction": min_reduction})
    for trial, (g1, g2) in enumerate(pairs):
        errs = [hkd_limit_error(g1, g2, t, heat_kernel) for t in t_grid]
        for k in range(1, len(t_grid)):
            needed = min_reduction * t_grid[k - 1] / t_grid[k]
            bound = errs[k - 1] / needed
            report.add(trial, "", t_grid[k], "", errs[k], bound, violated=errs[k] > 1e-12 and errs[k] > bound)
        report.add(trial, "", t_grid[-1], "", errs[-1], abs_tol)
        report.trials += 1
    return report


def hkd_frobenius_sides(
    g1: WeightedGraph,
    g2: WeightedGraph,
    t: float,
    quadruples: str = "matched",
    heat_kernel: Callable = heat_kernel_matrix,
) -> tuple[float, float]:
    """Left and right side of the squared pairwise-heat-distance bound.

    ``quadruples="matched"`` sums ``(K_ij - K'_ij)^2`` over ``i != j`` (graphs
    of equal size, identity correspondence); ``"all"`` sums over every
    ``i != j, a != b`` combination.
    """
    d1, d2 = laplacian_eig(g1), laplacian_eig(g2)
    K1, K2 = heat_kernel(d1, t), heat_kernel(d2, t)
    off1 = ~np.eye(g1.n, dtype=bool)
    off2 = ~np.eye(g2.n, dtype=bool)
    if quadruples == "matched":
        if g1.n != g2.n:
            raise ValueError("matched quadruples need graphs of equal size")
        lhs = float(np.sum((K1 - K2)[off1] ** 2))
    elif quadruples == "all":
        lhs = float(np.sum((K1[off1][:, None] - K2[off2][None, :]) ** 2))
    else:
        raise ValueError(f"unknown quadruple set {quadruples!r}")
    rhs = float(np.sum(np.exp(-2 * t * d1.lambdas)) + np.sum(np.exp(-2 * t * d2.lambdas)))
    return lhs, rhs


def check_hkd_frobenius_bound(
    pairs: Iterable[tuple[WeightedGraph, WeightedGraph]],
    t_grid: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    quadruples: str = "matched",
    heat_kernel: Callable = heat_kernel_matrix,
    seeds: Sequence[int] | None = None,
) -> BoundReport:
    report = BoundReport("hkd_frobenius_bound", parameters={"t": list(t_grid), "quadruples": quadruples})
    for trial, (g1, g2) in enumerate(pairs):
        s = seeds[trial] if seeds is not None else ""
        for t in t_grid:
            if not t > 0:
                raise ValueError("t must be positive")
            lhs, rhs = hkd_frobenius_sides(g1, g2, t, quadruples, heat_kernel)
            report.add(trial, s, t, "", lhs, rhs)
        report.trials += 1
    return report


def maxeig_bound(g: WeightedGraph) -> float:
    """``max_v d(v) + sum_u w(u,v) d(u) / d(v)`` for a graph without isolated nodes."""
    A = g.adjacency()
    d = A.sum(axis=1)
    return float(np.max(d + (A @ d) / d))


def check_maxeig_bound(graphs: Iterable[WeightedGraph], seeds: Sequence[int] | None = None) -> BoundReport:
    report = BoundReport("maxeig_bound")
    for trial, g in enumerate(graphs):
        if not g.is_connected():
            report.skipped += 1
            continue
        lam_max = float(laplacian_eig(g).lambdas[-1])
        report.add(trial, seeds[trial] if seeds is not None else "", "", "", lam_max, maxeig_bound(g))
        report.trials += 1
    return report


def check_eigenvalue_perturbation(
    g: WeightedGraph,
    eps_grid: Sequence[float] = (1e-3, 1e-2, 1e-1),
    trials: int = 200,
    seed: int = 0,
) -> BoundReport:
    """Sorted-spectrum shift versus the spectral norm of the perturbation."""
    L = g.laplacian()
    lam = eig_sym(L).lambdas
    report = BoundReport("eigenvalue_perturbation", parameters={"eps": list(eps_grid), "seed": seed})
    for trial in range(trials):
        s = seed + trial
        rng = _rng(s)
        eps = float(eps_grid[trial % len(eps_grid)])
        dL = eps * edge_perturbation(g, rng, eps)
        shift = float(np.max(np.abs(eig_sym(L + dL).lambdas - lam)))
        norm2 = float(np.max(np.abs(np.linalg.eigvalsh(dL))))
        report.add(trial, s, "", eps, shift, norm2)
        report.trials += 1
    return report


def check_eigen_sensitivity(
    g: WeightedGraph,
    eps_grid: Sequence[float] = (1e-3, 1e-2, 1e-1),
    trials: int = 50,
    seed: int = 0,
    floor: float = 1e-11,
) -> BoundReport:
    """First-order eigenvalue prediction ``lam_i + phi_i^T dL phi_i``.

    The residual against the true perturbed spectrum must shrink at least
    quadratically: at each ``eps`` it is bounded by twice the residual at the
    largest ``eps`` scaled by ``(eps / eps_max)^2``, plus a rounding floor.
    """
    dec = laplacian_eig(g)
    eps_grid = sorted(float(e) for e in eps_grid)
    report = BoundReport("eigen_sensitivity", parameters={"eps": eps_grid, "seed": seed, "eigengap": dec.eigengap()})
    L = g.laplacian()
    for trial in range(trials):
        s = seed + trial
        direction = edge_perturbation(g, _rng(s), eps_grid[-1])
        first_order = np.einsum("ik,ij,jk->k", dec.vectors, direction, dec.vectors)
        resid = {
            eps: float(np.max(np.abs(eig_sym(L + eps * direction).lambdas - (dec.lambdas + eps * first_order))))
            for eps in eps_grid
        }
        top = resid[eps_grid[-1]]
        for eps in eps_grid[:-1]:
            report.add(trial, s, "", eps, resid[eps], 2 * top * (eps / eps_grid[-1]) ** 2 + floor)
        report.trials += 1
    return report


# -- default suite ------------------------------------------------------------------


def random_connected_graph(n: int, rng: np.random.Generator, m_range: tuple[int, int] | None = None) -> WeightedGraph:
    total = n * (n - 1) // 2
    lo, hi = m_range or (n - 1, total)
    while True:
        g = gen_erdos_renyi(n, int(rng.integers(lo, hi + 1)), rng)
        if g.is_connected():
            return g


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(n, tuple((i, j, weight) for i in range(n) for j in range(i + 1, n)))


def distinct_spectrum_graph(seed: int = 0, n: int = 20, m: int = 60, min_gap: float = 0.05) -> WeightedGraph:
    """First connected G(n, m) from ``seed`` onwards whose eigengap exceeds ``min_gap``."""
    s = seed
    while True:
        g = gen_erdos_renyi(n, m, _rng(s))
        if g.is_connected() and laplacian_eig(g).eigengap() > min_gap:
            return g
        s += 1


def run_default_suite(seed: int = 0, scale: float = 1.0, heat_kernel: Callable = heat_kernel_matrix) -> list[BoundReport]:
    """Every check at its default configuration; ``scale`` shrinks trial counts."""

    def n_trials(k):
        return max(1, int(round(k * scale)))

    reports = []
    k5 = complete_graph(5)
    distinct = distinct_spectrum_graph(seed)
    for label, g in (("distinct", distinct), ("k5", k5)):
        rep = check_lfs_continuity(g, Heat(), trials=n_trials(50), seed=seed)
        rep.name = f"lfs_continuity_{label}"
        reports.append(rep)
    reports.append(check_subspace_invariance(k5, Heat(), trials=n_trials(100), seed=seed))

    rng = _rng(seed)
    pairs = []
    for _ in range(n_trials(50)):
        n = int(rng.integers(4, 13))
        tot = n * (n - 1) // 2
        pairs.append((gen_erdos_renyi(n, int(rng.integers(1, tot + 1)), rng),
                      gen_erdos_renyi(n, int(rng.integers(1, tot + 1)), rng)))
    reports.append(check_hkd_limit(pairs, heat_kernel=heat_kernel))

    seeds = [seed + k for k in range(n_trials(100))]
    frob_pairs = []
    for s in seeds:
        r = _rng(s)
        frob_pairs.append((gen_erdos_renyi(10, 20, r), gen_erdos_renyi(10, 25, r)))
    reports.append(check_hkd_frobenius_bound(frob_pairs, heat_kernel=heat_kernel, seeds=seeds))

    graphs = [random_connected_graph(12, _rng(s)) for s in seeds]
    reports.append(check_maxeig_bound(graphs, seeds))

    g15 = random_connected_graph(15, _rng(seed), (40, 40))
    reports.append(check_eigenvalue_perturbation(g15, trials=n_trials(200), seed=seed))
    reports.append(check_eigen_sensitivity(distinct, trials=n_trials(50), seed=seed))
    return reports

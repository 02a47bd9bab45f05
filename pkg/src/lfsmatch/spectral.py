"""Laplacian eigenpairs, Laplacian family signatures and heat kernels."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar

import numpy as np

from .graph import WeightedGraph, adjacency

# eigenvalues at or below this (relative to the spectral scale) are treated as exact zeros
ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues; column ``k`` of ``vectors`` pairs with ``lambdas[k]``."""

    lambdas: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def zero_tol(self) -> float:
        return ZERO_EIG_TOL * max(1.0, float(np.max(np.abs(self.lambdas))))

    def clean_lambdas(self) -> np.ndarray:
        """Eigenvalues with numerical zeros (and tiny negatives) snapped to 0."""
        lam = self.lambdas.copy()
        lam[np.abs(lam) <= self.zero_tol()] = 0.0
        return np.maximum(lam, 0.0)

    def nonzero_range(self) -> tuple[float, float]:
        """Smallest nonzero and largest eigenvalue; ``(1, 1)`` for an edgeless graph."""
        lam = self.clean_lambdas()
        nz = lam[lam > 0]
        if nz.size == 0:
            return 1.0, 1.0
        return float(nz.min()), float(nz.max())

    def eigenspaces(self, rtol: float = 1e-8) -> list[np.ndarray]:
        """Index groups of numerically equal eigenvalues."""
        lam = self.lambdas
        tol = rtol * max(1.0, float(np.max(np.abs(lam))))
        groups, start = [], 0
        for k in range(1, len(lam) + 1):
            if k == len(lam) or lam[k] - lam[k - 1] > tol:
                groups.append(np.arange(start, k))
                start = k
        return groups

    def eigengap(self, rtol: float = 1e-8) -> float:
        """Minimum spacing between distinct eigenvalues (inf if only one)."""
        reps = np.array([self.lambdas[g].mean() for g in self.eigenspaces(rtol)])
        return float(np.min(np.diff(reps))) if len(reps) > 1 else float("inf")


def eig_sym(M: np.ndarray, sym_tol: float = 1e-12) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix (LAPACK ``syevd`` via numpy)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    # LinAlgError from a non-converging solver is left to propagate
    lambdas, vectors = np.linalg.eigh(0.5 * (M + M.T))
    return EigenDecomposition(lambdas, vectors)


def laplacian_eig(g: WeightedGraph) -> EigenDecomposition:
    return eig_sym(g.laplacian())


# -- construction kernels ----------------------------------------------------


def _safe_log(lam):
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lam > 0, np.log(np.where(lam > 0, lam, 1.0)), -np.inf)


def _check_positive(**params):
    for name, value in params.items():
        if value is not None and not value > 0:
            raise ValueError(f"kernel parameter {name} must be positive, got {value!r}")


@dataclass(frozen=True)
class Kernel:
    """Construction kernel ``h(t; lambda)``; subclasses are vectorized over both arguments.

    ``coupled`` kernels depend on ``t * lambda`` only and are sampled on a
    logarithmic heat-style grid; decoupled ones are sampled on a uniform
    log-eigenvalue grid.
    """

    name: ClassVar[str] = "kernel"
    coupled: ClassVar[bool] = True

    def __call__(self, t, lam) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if not callable(v)}

    def describe(self) -> str:
        extra = []
        for k, v in self.__dict__.items():
            if callable(v):
                v = getattr(v, "__name__", repr(v))
            elif isinstance(v, float):
                v = f"{v:.6g}"
            extra.append(f"{k}={v}")
        return f"{self.name}({';'.join(extra)})" if extra else self.name

    def resolve(self, t_grid: np.ndarray) -> "Kernel":
        """Fill grid-dependent parameters (a no-op for most kernels)."""
        return self


@dataclass(frozen=True)
class Heat(Kernel):
    name: ClassVar[str] = "heat"

    def __call__(self, t, lam):
        return np.exp(-np.asarray(t) * np.asarray(lam))


@dataclass(frozen=True)
class _LogCentered(Kernel):
    """Shared machinery for kernels centred at ``mu(lambda)`` with a width ``sigma``.

    ``sigma=None`` means seven grid spacings, resolved against the sampling grid.
    Zero eigenvalues evaluate to 0.
    """

    sigma: float | None = None
    coupled: ClassVar[bool] = False

    def __post_init__(self):
        _check_positive(sigma=self.sigma)

    def resolve(self, t_grid):
        if self.sigma is not None:
            return self
        t_grid = np.asarray(t_grid, dtype=float)
        spacing = (t_grid[-1] - t_grid[0]) / (len(t_grid) - 1) if len(t_grid) > 1 else 1.0
        return replace(self, sigma=7.0 * spacing if spacing > 0 else 1.0)

    def _sigma(self):
        if self.sigma is None:
            raise ValueError(f"{self.name} kernel width unresolved; call resolve(t_grid) first")
        return self.sigma

    def _center(self, lam):
        return _safe_log(lam)

    def _profile(self, offset, sigma):
        raise NotImplementedError

    def __call__(self, t, lam):
        t, lam = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lam, dtype=float))
        mu = self._center(lam)
        out = np.zeros(t.shape)
        ok = (lam > 0) & np.isfinite(mu)
        out[ok] = self._profile(t[ok] - mu[ok], self._sigma())
        return out


@dataclass(frozen=True)
class Wave(_LogCentered):
    name: ClassVar[str] = "wave"

    def _profile(self, offset, sigma):
        return np.exp(-(offset**2) / (2 * sigma**2))


@dataclass(frozen=True)
class Gaussian(_LogCentered):
    """Gaussian bump around ``mu(lambda)``; ``mu=np.log`` reproduces the wave kernel."""

    mu: Callable = np.log
    name: ClassVar[str] = "gaussian"

    def _center(self, lam):
        if self.mu is np.log:
            return _safe_log(lam)
        with np.errstate(all="ignore"):
            return np.asarray(self.mu(lam), dtype=float)

    def _profile(self, offset, sigma):
        return np.exp(-(offset**2) / (2 * sigma**2))


@dataclass(frozen=True)
class LaplacianKernel(Gaussian):
    name: ClassVar[str] = "laplacian"

    def _profile(self, offset, sigma):
        return np.exp(-np.abs(offset) / sigma)


@dataclass(frozen=True)
class _ShapeScale(Kernel):
    k: float = 2.0
    theta: float = 1.0

    def __post_init__(self):
        _check_positive(k=self.k, theta=self.theta)


@dataclass(frozen=True)
class Gamma(_ShapeScale):
    name: ClassVar[str] = "gamma"

    def __call__(self, t, lam):
        x = np.asarray(t) * np.asarray(lam)
        return np.power(x, self.k - 1) * np.exp(-x / self.theta)


@dataclass(frozen=True)
class Rayleigh(_ShapeScale):
    name: ClassVar[str] = "rayleigh"

    def __call__(self, t, lam):
        x = np.asarray(t) * np.asarray(lam)
        return np.power(x, self.k - 1) * np.exp(-(x**2) / (2 * self.theta**2))


@dataclass(frozen=True)
class StudentT(_ShapeScale):
    k: float = 3.0
    name: ClassVar[str] = "t"

    def __call__(self, t, lam):
        x = np.asarray(t) * np.asarray(lam)
        return np.power(1.0 + x**2 / self.theta, -(self.k + 1) / 2)


@dataclass(frozen=True)
class InvChiSq(_ShapeScale):
    k: float = 4.0
    name: ClassVar[str] = "invchi2"

    def __call__(self, t, lam):
        x = np.asarray(np.asarray(t) * np.asarray(lam), dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        out[pos] = np.power(x[pos], -self.k / 2 - 1) * np.exp(-self.theta / (2 * x[pos]))
        return out


KERNELS: dict[str, type[Kernel]] = {
    cls.name: cls
    for cls in (Heat, Wave, Gamma, Gaussian, LaplacianKernel, Rayleigh, StudentT, InvChiSq)
}
COUPLED = tuple(name for name, cls in KERNELS.items() if cls.coupled)
DECOUPLED = tuple(name for name, cls in KERNELS.items() if not cls.coupled)


def make_kernel(name: str, **params) -> Kernel:
    try:
        cls = KERNELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None
    return cls(**params)


def kernel_eval(kernel: Kernel, t: float, lam: float) -> float:
    """Scalar ``h(t; lambda)`` with argument checks."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam!r}")
    return float(kernel(t, lam))


def is_coupled_numerically(kernel: Kernel, rng: np.random.Generator, trials: int = 200, rtol: float = 1e-10) -> bool:
    """Probe ``h(t, lambda) == h(c t, lambda / c)`` on random positive arguments."""
    t = rng.uniform(0.05, 3.0, trials)
    lam = rng.uniform(0.05, 10.0, trials)
    c = np.exp(rng.uniform(-2.0, 2.0, trials))
    a, b = kernel(t, lam), kernel(c * t, lam / c)
    return bool(np.all(np.abs(a - b) <= rtol * np.maximum(1.0, np.abs(a))))


# -- signatures ----------------------------------------------------------------


def default_t_grid(kernel: Kernel, *decomps: EigenDecomposition, num: int = 100) -> np.ndarray:
    """Shared sampling grid for one or more spectra.

    Coupled kernels: ``num`` log-spaced times over ``[4 ln10 / lam_max, 4 ln10 / lam_2]``.
    Decoupled kernels: ``num`` uniform points over ``[log lam_2, log lam_max]``.
    A degenerate range (single nonzero eigenvalue) is widened by a factor ``e``.
    """
    lo = min(d.nonzero_range()[0] for d in decomps)
    hi = max(d.nonzero_range()[1] for d in decomps)
    if kernel.coupled:
        t0, t1 = 4 * np.log(10) / hi, 4 * np.log(10) / lo
        if np.isclose(t0, t1, rtol=1e-9):
            t0, t1 = t0 / np.e, t1 * np.e
        return np.geomspace(t0, t1, num)
    e0, e1 = np.log(lo), np.log(hi)
    if np.isclose(e0, e1, rtol=0, atol=1e-9):
        e0, e1 = e0 - 1.0, e1 + 1.0
    return np.linspace(e0, e1, num)


@dataclass(frozen=True)
class SignatureSet:
    t_grid: np.ndarray
    values: np.ndarray  # n x len(t_grid)
    kernel: Kernel = field(default_factory=Heat)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "t", "value"])
        for node, row in enumerate(self.values):
            for t, v in zip(self.t_grid, row):
                w.writerow([node, f"{t:.17g}", f"{v:.17g}"])
        return buf.getvalue()


def lfs(decomp: EigenDecomposition, kernel: Kernel, t_grid=None) -> SignatureSet:
    """Per-node signatures ``s_l(t) = sum_k h(t; lam_k) phi_k(l)^2`` on a grid."""
    if t_grid is None:
        t_grid = default_t_grid(kernel, decomp)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t grid must be a nonempty 1-d array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t grid must be strictly ascending")
    if kernel.coupled and np.any(t_grid <= 0):
        raise ValueError("t grid must be positive")
    kernel = kernel.resolve(t_grid)
    H = kernel(t_grid[:, None], decomp.clean_lambdas()[None, :])  # s x n_eig
    values = (decomp.vectors**2) @ H.T
    return SignatureSet(t_grid, values, kernel)


def sig_distance(a, b, mode: str = "l2") -> float:
    """Relative-L1 or L2 distance between two sampled signatures (0/0 terms count as 0)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"signature length mismatch: {a.shape} vs {b.shape}")
    return float(signature_distance_matrix(a[None, :], b[None, :], mode)[0, 0])


def signature_distance_matrix(S1: np.ndarray, S2: np.ndarray, mode: str = "l2") -> np.ndarray:
    """All pairwise distances between rows of ``S1`` and rows of ``S2``."""
    S1, S2 = np.atleast_2d(S1), np.atleast_2d(S2)
    if S1.shape[1] != S2.shape[1]:
        raise ValueError("signature length mismatch")
    diff = np.abs(S1[:, None, :] - S2[None, :, :])
    if mode == "l2":
        return np.sqrt(np.sum(diff**2, axis=2))
    if mode == "relative_l1":
        denom = S1[:, None, :] + S2[None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(denom != 0, diff / np.where(denom != 0, denom, 1.0), 0.0)
        return terms.sum(axis=2)
    raise ValueError(f"unknown distance mode {mode!r}")


def default_distance_mode(kernel: Kernel) -> str:
    return "l2" if kernel.coupled else "relative_l1"


# -- heat kernel ---------------------------------------------------------------


def heat_kernel_matrix(decomp: EigenDecomposition, t: float) -> np.ndarray:
    """``exp(-t L)`` assembled from the eigendecomposition of ``L``."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    V = decomp.vectors
    K = (V * np.exp(-t * decomp.lambdas)) @ V.T
    return 0.5 * (K + K.T)


def pairwise_distance(M: np.ndarray, Mp: np.ndarray, i: int, j: int, a: int, b: int) -> float:
    """``|M[i, j] - Mp[a, b]|``: the pairwise heat kernel distance when given
    heat kernels, the pairwise adjacency distance when given adjacency matrices."""
    n, m = M.shape[0], Mp.shape[0]
    if not (0 <= i < n and 0 <= j < n and 0 <= a < m and 0 <= b < m):
        raise IndexError(f"indices ({i}, {j}, {a}, {b}) out of range for sizes ({n}, {m})")
    return float(abs(M[i, j] - Mp[a, b]))


pairwise_hkd = pairwise_distance


# -- degree vector baseline ---------------------------------------------------


def dvs_signature(g: WeightedGraph, pad_to: int | None = None) -> np.ndarray:
    """Degree vector signature: total incident weight then incident weights sorted
    descending, zero padded to ``pad_to`` entries. Returns ``n x (pad_to + 1)``."""
    A = adjacency(g)
    max_deg = int(np.max((A > 0).sum(axis=1))) if g.edges else 0
    if pad_to is None:
        pad_to = max_deg
    if pad_to < max_deg:
        raise ValueError(f"pad_to={pad_to} is smaller than the maximum degree {max_deg}")
    out = np.zeros((g.n, pad_to + 1))
    out[:, 0] = A.sum(axis=1)
    out[:, 1:] = -np.sort(-A, axis=1)[:, :pad_to] if pad_to <= g.n else np.pad(
        -np.sort(-A, axis=1), ((0, 0), (0, pad_to - g.n))
    )
    return out

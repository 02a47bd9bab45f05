"""Synthetic benchmark protocols and their CSV output.

Each trial draws its graphs from ``numpy.random.default_rng([seed, trial, ...])``
so results do not depend on scheduling; rows are sorted before writing.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import GroundTruth, gen_erdos_renyi, gen_matching_pair, permute, perturb_gaussian
from .matching import bipartite_signature_match, iqp_match
from .spectral import make_kernel

SIGNATURE_KERNELS = ("heat", "wave", "gamma", "gaussian", "laplacian", "rayleigh", "t", "invchi2", "dvs")
IQP_PROTOCOLS = ("iqp_deformation", "iqp_outliers", "iqp_density")

CSV_COLUMNS = [
    "protocol", "mode", "kernel", "sigma", "outliers", "density", "t", "trial_count",
    "mean_accuracy", "stderr", "seed",
    "rrwm_alpha", "rrwm_beta", "sig_weight", "affinity_transform", "affinity_gamma",
]


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = "signature_bench"
    trials: int = 100
    seed: int = 0
    kernels: tuple[str, ...] = SIGNATURE_KERNELS
    kernel_params: dict = field(default_factory=dict)
    sigma_grid: tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(11))
    outlier_grid: tuple[int, ...] = (0, 2, 4, 6, 8, 10)
    density_grid: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    # signature benchmark graphs
    n_nodes: int = 50
    m_range: tuple[int, int] = (400, 1000)
    # IQP benchmark graphs
    n_in: int = 20
    base_sigma: float = 0.0
    density_sigma: float = 0.5
    base_density: float = 0.5
    iqp_modes: tuple[str, ...] = ("adjacency", "heat", "heat+wave")
    t: float = 0.2
    sig_weight: float = 1.0
    affinity_gamma: float | None = None
    affinity_transform: str = "gaussian"
    alpha: float = 0.2
    beta: float = 30.0
    tol: float = 1e-6
    max_iter: int = 300
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for name in ("kernels", "sigma_grid", "outlier_grid", "density_grid", "iqp_modes"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")

    def kernel(self, name: str):
        if name == "dvs":
            return "dvs"
        return make_kernel(name, **self.kernel_params.get(name, {}))


# -- trial workers ------------------------------------------------------------------


def _signature_trial(cfg: ExperimentConfig, trial: int) -> list[tuple]:
    rng = np.random.default_rng([cfg.seed, trial])
    lo, hi = cfg.m_range
    g = gen_erdos_renyi(cfg.n_nodes, int(rng.integers(lo, hi + 1)), rng)
    out = []
    for k, sigma in enumerate(cfg.sigma_grid):
        r = np.random.default_rng([cfg.seed, trial, k + 1])
        perm = r.permutation(g.n)
        gp = permute(perturb_gaussian(g, sigma, r), perm)
        truth = GroundTruth(tuple((i, int(perm[i])) for i in range(g.n)))
        for name in cfg.kernels:
            res = bipartite_signature_match(g, gp, cfg.kernel(name), truth=truth)
            out.append((name, float(sigma), trial, res.accuracy))
    return out


def _iqp_axis(cfg: ExperimentConfig) -> list[tuple[float, int, float]]:
    """(sigma, outliers, density) points for the configured protocol."""
    if cfg.protocol == "iqp_deformation":
        return [(float(s), 0, cfg.base_density) for s in cfg.sigma_grid]
    if cfg.protocol == "iqp_outliers":
        return [(cfg.base_sigma, int(o), cfg.base_density) for o in cfg.outlier_grid]
    if cfg.protocol == "iqp_density":
        return [(cfg.density_sigma, 0, float(d)) for d in cfg.density_grid]
    raise ValueError(f"not an IQP protocol: {cfg.protocol!r}")


def _iqp_trial(cfg: ExperimentConfig, trial: int) -> list[tuple]:
    out = []
    for k, (sigma, n_out, rho) in enumerate(_iqp_axis(cfg)):
        rng = np.random.default_rng([cfg.seed, trial, k])
        g1, g2, truth = gen_matching_pair(cfg.n_in, n_out, n_out, rho, sigma, rng)
        for mode in cfg.iqp_modes:
            out.append((mode, k, trial, run_iqp_mode(cfg, mode, g1, g2, truth)))
    return out


def run_iqp_mode(cfg: ExperimentConfig, mode: str, g1, g2, truth) -> float:
    """Accuracy of one affinity mode: ``adjacency``, ``heat`` or ``heat+<kernel>``."""
    base, _, kname = mode.partition("+")
    if base not in ("adjacency", "heat"):
        raise ValueError(f"unknown IQP mode {mode!r}")
    kernel = cfg.kernel(kname) if kname else None
    res = iqp_match(
        g1, g2,
        mode=base,
        t=cfg.t,
        kernel=kernel,
        sig_weight=cfg.sig_weight if kernel is not None else 0.0,
        transform=cfg.affinity_transform,
        gamma=cfg.affinity_gamma,
        truth=truth,
        reweight_alpha=cfg.alpha,
        inflation_beta=cfg.beta,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
    )
    return res.accuracy


def _run_trials(cfg: ExperimentConfig, worker) -> list[tuple]:
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(worker, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        chunks = [worker(cfg, trial) for trial in range(cfg.trials)]
    return [rec for chunk in chunks for rec in chunk]


def _mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(np.std(v, ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


# -- protocols --------------------------------------------------------------------


def run_signature_bench(cfg: ExperimentConfig) -> list[dict]:
    """Bipartite matching accuracy per (signature, noise level) on G(n, m) graphs."""
    if cfg.protocol != "signature_bench":
        cfg = replace(cfg, protocol="signature_bench")
    records = sorted(_run_trials(cfg, _signature_trial), key=lambda r: (r[0], r[1], r[2]))
    rows = []
    for name in cfg.kernels:
        kernel = cfg.kernel(name)
        dist = "l2" if name == "dvs" else ("l2" if kernel.coupled else "relative_l1")
        label = "dvs" if name == "dvs" else kernel.describe()
        for sigma in cfg.sigma_grid:
            accs = [r[3] for r in records if r[0] == name and r[1] == float(sigma)]
            mean, se = _mean_stderr(accs)
            rows.append(_row(cfg, mode=f"bipartite_{dist}", kernel=label, sigma=sigma, outliers=0,
                             density="", t="", mean=mean, se=se, n=len(accs), iqp=False))
    return rows


def run_iqp_bench(cfg: ExperimentConfig) -> list[dict]:
    """RRWM accuracy per affinity mode along the deformation, outlier or density axis."""
    axis = _iqp_axis(cfg)
    records = sorted(_run_trials(cfg, _iqp_trial), key=lambda r: (r[0], r[1], r[2]))
    rows = []
    for mode in cfg.iqp_modes:
        _, _, kname = mode.partition("+")
        label = cfg.kernel(kname).describe() if kname else ""
        for k, (sigma, n_out, rho) in enumerate(axis):
            accs = [r[3] for r in records if r[0] == mode and r[1] == k]
            mean, se = _mean_stderr(accs)
            rows.append(_row(cfg, mode=mode, kernel=label, sigma=sigma, outliers=n_out, density=rho,
                             t=cfg.t if mode != "adjacency" else "", mean=mean, se=se, n=len(accs), iqp=True,
                             sig_weight=cfg.sig_weight if kname else 0.0))
    return rows


def _num(v) -> str:
    if v == "" or v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def _row(cfg, *, mode, kernel, sigma, outliers, density, t, mean, se, n, iqp, sig_weight=0.0) -> dict:
    return {
        "protocol": cfg.protocol,
        "mode": mode,
        "kernel": kernel,
        "sigma": _num(sigma),
        "outliers": _num(outliers),
        "density": _num(density),
        "t": _num(t),
        "trial_count": str(n),
        "mean_accuracy": _num(mean),
        "stderr": _num(se),
        "seed": str(cfg.seed),
        "rrwm_alpha": _num(cfg.alpha) if iqp else "",
        "rrwm_beta": _num(cfg.beta) if iqp else "",
        "sig_weight": _num(sig_weight) if iqp else "",
        "affinity_transform": cfg.affinity_transform if iqp else "",
        "affinity_gamma": ("auto" if cfg.affinity_gamma is None else _num(cfg.affinity_gamma)) if iqp else "",
    }


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> list[dict]:
    if cfg.protocol == "signature_bench":
        return run_signature_bench(cfg)
    if cfg.protocol in IQP_PROTOCOLS:
        return run_iqp_bench(cfg)
    raise ValueError(f"unknown benchmark protocol {cfg.protocol!r}")

"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 theorem violation, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import bench, theorems
from .graph import GraphFormatError, read_graph, read_truth
from .matching import DimensionError, DEFAULT_MAX_DIM, bipartite_signature_match, iqp_match
from .spectral import make_kernel

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("lfsmatch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("grid must be nonempty")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in _floats(text))


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_common(p, trials=True):
    p.add_argument("--seed", type=int, default=0)
    if trials:
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    p.add_argument("--out", help="output path (default: stdout)")


def _add_rrwm(p):
    p.add_argument("--alpha", type=float, default=0.2, help="RRWM reweight factor")
    p.add_argument("--beta", type=float, default=30.0, help="RRWM inflation factor")
    p.add_argument("--t", type=float, default=0.2, help="heat kernel time for pairwise distances")
    p.add_argument("--sig-weight", type=float, default=1.0, help="weight of node-signature distances")
    p.add_argument("--affinity-gamma", type=float, default=None, help="distance scale (default: mean distance)")
    p.add_argument("--affinity-transform", choices=("gaussian", "exponential"), default="gaussian")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lfsmatch", description="Spectral descriptors for weighted graph matching")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bench-signatures", help="bipartite matching accuracy of node signatures")
    _add_common(p)
    p.add_argument("--kernel", type=_names, default=bench.SIGNATURE_KERNELS,
                   help="comma-separated kernels (heat,wave,gamma,gaussian,laplacian,rayleigh,t,invchi2,dvs)")
    p.add_argument("--sigma-grid", type=_floats, default=bench.ExperimentConfig.sigma_grid)
    p.add_argument("--nodes", type=int, default=50)
    p.add_argument("--edges", type=_ints, default=(400, 1000), help="min,max edge count")

    p = sub.add_parser("bench-iqp", help="RRWM accuracy for adjacency and heat kernel affinities")
    _add_common(p)
    p.add_argument("--protocol", choices=("deformation", "outliers", "density"), default="deformation")
    p.add_argument("--modes", type=_names, default=bench.ExperimentConfig.iqp_modes,
                   help="comma-separated: adjacency, heat, heat+<kernel>")
    p.add_argument("--kernel", type=_names, default=None, help="shorthand adding heat+<kernel> modes")
    p.add_argument("--sigma-grid", type=_floats, default=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5))
    p.add_argument("--outlier-grid", type=_ints, default=bench.ExperimentConfig.outlier_grid)
    p.add_argument("--density-grid", type=_floats, default=bench.ExperimentConfig.density_grid)
    p.add_argument("--density", type=float, default=bench.ExperimentConfig.base_density,
                   help="edge density for the deformation and outlier protocols")
    p.add_argument("--density-sigma", type=float, default=0.5)
    p.add_argument("--inliers", type=int, default=20)
    _add_rrwm(p)

    p = sub.add_parser("verify-theorems", help="randomized checks of the stability and approximation bounds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for one CSV per check")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on trial counts")

    p = sub.add_parser("match", help="match two graph files")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--truth", help="file of 'i a' ground-truth pairs")
    p.add_argument("--mode", choices=("heat", "adjacency", "bipartite"), default="heat")
    p.add_argument("--kernel", default=None, help="node signature kernel (enables unary terms)")
    p.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)
    _add_rrwm(p)
    return parser


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bench_signatures(args) -> int:
    cfg = bench.ExperimentConfig(
        protocol="signature_bench",
        trials=args.trials,
        seed=args.seed,
        kernels=args.kernel,
        sigma_grid=args.sigma_grid,
        n_nodes=args.nodes,
        m_range=(args.edges[0], args.edges[-1]),
        jobs=args.jobs,
    )
    for name in cfg.kernels:
        cfg.kernel(name)
    _emit(bench.rows_to_csv(bench.run(cfg)), args.out)
    return EXIT_OK


def _cmd_bench_iqp(args) -> int:
    modes = tuple(args.modes)
    if args.kernel:
        modes += tuple(f"heat+{k}" for k in args.kernel if f"heat+{k}" not in modes)
    cfg = bench.ExperimentConfig(
        protocol=f"iqp_{args.protocol}",
        trials=args.trials,
        seed=args.seed,
        sigma_grid=args.sigma_grid,
        outlier_grid=args.outlier_grid,
        density_grid=args.density_grid,
        base_density=args.density,
        density_sigma=args.density_sigma,
        n_in=args.inliers,
        iqp_modes=modes,
        t=args.t,
        sig_weight=args.sig_weight,
        affinity_gamma=args.affinity_gamma,
        affinity_transform=args.affinity_transform,
        alpha=args.alpha,
        beta=args.beta,
        jobs=args.jobs,
    )
    for mode in modes:
        base, _, kname = mode.partition("+")
        if base not in ("adjacency", "heat"):
            raise UsageError(f"unknown mode {mode!r}")
        if kname:
            cfg.kernel(kname)
    _emit(bench.rows_to_csv(bench.run(cfg)), args.out)
    return EXIT_OK


def run_theorems(seed: int = 0, out: str | None = None, scale: float = 1.0, **kwargs) -> tuple[int, list]:
    reports = theorems.run_default_suite(seed, scale, **kwargs)
    if out:
        os.makedirs(out, exist_ok=True)
        for rep in reports:
            with open(os.path.join(out, f"{rep.name}.csv"), "w") as fh:
                fh.write(rep.to_csv())
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION
    return code, reports


def _cmd_verify(args) -> int:
    code, reports = run_theorems(args.seed, args.out, args.scale)
    for rep in reports:
        print(("PASS " if rep.passed else "FAIL ") + rep.summary())
    return code


def _cmd_match(args) -> int:
    g1, g2 = read_graph(args.graph1), read_graph(args.graph2)
    truth = read_truth(args.truth) if args.truth else None
    if g1.num_edges == 0 or g2.num_edges == 0:
        raise UsageError("both graphs need at least one edge")
    kernel = make_kernel(args.kernel) if args.kernel else None
    if args.mode == "bipartite":
        result = bipartite_signature_match(g1, g2, kernel or make_kernel("wave"), truth=truth)
    else:
        result = iqp_match(
            g1, g2,
            mode=args.mode,
            t=args.t,
            kernel=kernel,
            sig_weight=args.sig_weight if kernel is not None else 0.0,
            transform=args.affinity_transform,
            gamma=args.affinity_gamma,
            truth=truth,
            reweight_alpha=args.alpha,
            inflation_beta=args.beta,
            max_dim=args.max_dim,
        )
    lines = [f"{i} -> {a} {result.scores[i]:.6g}" for i, a in sorted(result.assignment.items())]
    if result.accuracy is not None:
        lines.append(f"accuracy {result.accuracy:.6f}")
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "bench-signatures": _cmd_bench_signatures,
    "bench-iqp": _cmd_bench_iqp,
    "verify-theorems": _cmd_verify,
    "match": _cmd_match,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GraphFormatError, OSError) as exc:
        print(f"lfsmatch: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, DimensionError, ValueError) as exc:
        print(f"lfsmatch: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

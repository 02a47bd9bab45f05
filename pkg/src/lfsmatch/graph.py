"""Weighted undirected graphs, their matrices, generators and perturbations.

Graphs are immutable edge lists; dense adjacency and Laplacian matrices are
built on demand. Every random routine takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on nodes ``0..n-1`` with nonnegative edge weights.

    Edges are normalized to ``(i, j, w)`` with ``i < j`` and sorted by ``(i, j)``.
    """

    n: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"node count must be a positive integer, got {self.n!r}")
        seen = {}
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if not np.isfinite(w) or w < 0:
                raise ValueError(f"edge ({i}, {j}) has invalid weight {w!r}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen[key] = w
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple((i, j, w) for (i, j), w in sorted(seen.items())))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def from_adjacency(cls, A: np.ndarray) -> "WeightedGraph":
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12):
            raise ValueError("adjacency must be symmetric")
        iu, ju = np.nonzero(np.triu(A, 1))
        return cls(A.shape[0], tuple((int(i), int(j), float(A[i, j])) for i, j in zip(iu, ju)))

    def adjacency(self) -> np.ndarray:
        return adjacency(self)

    def laplacian(self) -> np.ndarray:
        return laplacian(self)

    def degrees(self) -> np.ndarray:
        """Total incident weight per node."""
        return adjacency(self).sum(axis=1)

    def num_components(self) -> int:
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j, _ in self.edges:
            parent[find(i)] = find(j)
        return len({find(x) for x in range(self.n)})

    def is_connected(self) -> bool:
        return self.num_components() == 1


@dataclass(frozen=True)
class GroundTruth:
    """Known-correct correspondences ``(node in G1, node in G2)``."""

    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        pairs = tuple((int(i), int(a)) for i, a in self.pairs)
        if len({i for i, _ in pairs}) != len(pairs) or len({a for _, a in pairs}) != len(pairs):
            raise ValueError("ground truth must be injective in both coordinates")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def adjacency(g: WeightedGraph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    if g.edges:
        e = np.array(g.edges)
        i, j = e[:, 0].astype(int), e[:, 1].astype(int)
        A[i, j] = e[:, 2]
        A[j, i] = e[:, 2]
    return A


def laplacian(g: WeightedGraph) -> np.ndarray:
    A = adjacency(g)
    return np.diag(A.sum(axis=1)) - A


def laplacian_from_adjacency(A: np.ndarray) -> np.ndarray:
    return np.diag(A.sum(axis=1)) - A


def gen_erdos_renyi(n: int, m: int, rng: np.random.Generator) -> WeightedGraph:
    """G(n, m): exactly ``m`` distinct edges chosen uniformly, weights ~ U[0, 1)."""
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError(f"m={m} outside [0, {total}] for n={n}")
    iu, ju = np.triu_indices(n, 1)
    chosen = np.sort(rng.choice(total, size=m, replace=False))
    weights = rng.uniform(0.0, 1.0, size=m)
    return WeightedGraph(n, tuple(zip(iu[chosen].tolist(), ju[chosen].tolist(), weights.tolist())))


def perturb_gaussian(
    g: WeightedGraph, sigma: float, rng: np.random.Generator, fraction: float = 1.0
) -> WeightedGraph:
    """Add N(0, sigma^2) noise to edge weights, clamping at zero.

    ``fraction`` selects a random subset of edges to perturb; the edge set itself
    never changes.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if sigma == 0 or not g.edges:
        return g
    noise = rng.normal(0.0, sigma, size=len(g.edges))
    if fraction < 1.0:
        noise = noise * (rng.uniform(size=len(g.edges)) < fraction)
    return WeightedGraph(
        g.n, tuple((i, j, max(0.0, w + d)) for (i, j, w), d in zip(g.edges, noise.tolist()))
    )


def permute(g: WeightedGraph, perm: Sequence[int]) -> WeightedGraph:
    """Relabel node ``i`` as ``perm[i]``."""
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (g.n,) or not np.array_equal(np.sort(perm), np.arange(g.n)):
        raise ValueError("perm must be a bijection on range(n)")
    return WeightedGraph(g.n, tuple((int(perm[i]), int(perm[j]), w) for i, j, w in g.edges))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix P with ``P @ M @ P.T`` relabelling rows/cols of M by ``perm``."""
    perm = np.asarray(perm, dtype=int)
    P = np.zeros((len(perm), len(perm)))
    P[perm, np.arange(len(perm))] = 1.0
    return P


def _random_density_edges(pairs: Iterable[tuple[int, int]], rho: float, rng) -> list[Edge]:
    pairs = list(pairs)
    keep = rng.uniform(size=len(pairs)) < rho
    weights = rng.uniform(0.0, 1.0, size=len(pairs))
    return [(i, j, float(w)) for (i, j), k, w in zip(pairs, keep, weights) if k]


def gen_matching_pair(
    n_in: int,
    n_out1: int,
    n_out2: int,
    rho: float,
    sigma: float,
    rng: np.random.Generator,
) -> tuple[WeightedGraph, WeightedGraph, GroundTruth]:
    """Two graphs sharing ``n_in`` inlier nodes plus per-graph outliers.

    Inlier edges are drawn with density ``rho`` and U[0, 1) weights and copied to
    the second graph with N(0, sigma^2) deformation noise. Each graph gets its own
    outliers, joined to everything at density ``rho``. The second graph is then
    relabelled by a random permutation recorded in the returned ground truth.
    """
    if n_in < 2:
        raise ValueError("n_in must be at least 2")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {rho}")
    if n_out1 < 0 or n_out2 < 0:
        raise ValueError("outlier counts must be nonnegative")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")

    inlier = _random_density_edges(((i, j) for i in range(n_in) for j in range(i + 1, n_in)), rho, rng)
    base = WeightedGraph(n_in, tuple(inlier))
    deformed = perturb_gaussian(base, sigma, rng)

    def with_outliers(core: WeightedGraph, n_out: int) -> WeightedGraph:
        n = n_in + n_out
        extra = _random_density_edges(
            ((i, j) for j in range(n_in, n) for i in range(j)), rho, rng
        )
        return WeightedGraph(n, core.edges + tuple(extra))

    g1 = with_outliers(base, n_out1)
    g2 = with_outliers(deformed, n_out2)
    perm = rng.permutation(g2.n)
    g2 = permute(g2, perm)
    truth = GroundTruth(tuple((i, int(perm[i])) for i in range(n_in)))
    return g1, g2, truth


class GraphFormatError(ValueError):
    """Malformed graph or truth text; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


def format_graph(g: WeightedGraph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{i} {j} {w:.17g}" for i, j, w in g.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str, path: str | None = None) -> WeightedGraph:
    """Parse the ``n <count>`` / ``i j w`` text format (blank lines and ``#`` comments ignored)."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 2 or tokens[0] != "n":
                raise GraphFormatError("expected header 'n <count>'", lineno, path)
            try:
                n = int(tokens[1])
            except ValueError:
                raise GraphFormatError(f"invalid node count {tokens[1]!r}", lineno, path) from None
            if n < 1:
                raise GraphFormatError(f"node count must be positive, got {n}", lineno, path)
            continue
        if len(tokens) != 3:
            raise GraphFormatError(f"expected 'i j w', got {line!r}", lineno, path)
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"invalid node index in {line!r}", lineno, path) from None
        try:
            w = float(tokens[2])
        except ValueError:
            raise GraphFormatError(f"invalid weight {tokens[2]!r}", lineno, path) from None
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"invalid edge ({i}, {j}) for n={n}", lineno, path)
        if not np.isfinite(w) or w < 0:
            raise GraphFormatError(f"weight must be finite and nonnegative, got {tokens[2]!r}", lineno, path)
        edges.append((lineno, i, j, w))
    if n is None:
        raise GraphFormatError("empty graph file", None, path)
    seen = set()
    for lineno, i, j, _ in edges:
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key}", lineno, path)
        seen.add(key)
    return WeightedGraph(n, tuple((i, j, w) for _, i, j, w in edges))


def read_graph(path) -> WeightedGraph:
    with open(path) as fh:
        return parse_graph(fh.read(), str(path))


def write_graph(g: WeightedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))


def parse_truth(text: str, path: str | None = None) -> GroundTruth:
    """Ground truth as one ``i a`` pair per line."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 'i a', got {line!r}", lineno, path)
        try:
            pairs.append((int(tokens[0]), int(tokens[1])))
        except ValueError:
            raise GraphFormatError(f"invalid node index in {line!r}", lineno, path) from None
    try:
        return GroundTruth(tuple(pairs))
    except ValueError as exc:
        raise GraphFormatError(str(exc), None, path) from None


def read_truth(path) -> GroundTruth:
    with open(path) as fh:
        return parse_truth(fh.read(), str(path))

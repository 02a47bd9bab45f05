import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfsmatch.graph import (
    GraphFormatError,
    GroundTruth,
    WeightedGraph,
    adjacency,
    format_graph,
    gen_erdos_renyi,
    gen_matching_pair,
    laplacian,
    parse_graph,
    parse_truth,
    permutation_matrix,
    permute,
    perturb_gaussian,
)

from .oracles import jacobi_eigh


def unit_triangle():
    return WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    weights = draw(st.lists(st.floats(0, 5), min_size=len(chosen), max_size=len(chosen)))
    return WeightedGraph(n, tuple((i, j, w) for (i, j), w in zip(chosen, weights)))


class TestWeightedGraph:
    def test_edges_normalized(self):
        g = WeightedGraph(3, ((2, 0, 0.5), (1, 0, 0.25)))
        assert g.edges == ((0, 1, 0.25), (0, 2, 0.5))

    @pytest.mark.parametrize(
        "edges",
        [((0, 0, 1.0),), ((0, 3, 1.0),), ((0, 1, -0.1),), ((0, 1, 1.0), (1, 0, 2.0)), ((0, 1, float("nan")),)],
    )
    def test_invalid(self, edges):
        with pytest.raises(ValueError):
            WeightedGraph(3, edges)

    def test_components(self):
        g = WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0)))
        assert g.num_components() == 2
        assert unit_triangle().is_connected()


class TestAdjacency:
    def test_single_edge(self):
        np.testing.assert_array_equal(adjacency(WeightedGraph(2, ((0, 1, 1.0),))), [[0, 1], [1, 0]])

    def test_empty(self):
        np.testing.assert_array_equal(adjacency(WeightedGraph(3)), np.zeros((3, 3)))

    def test_weighted_triangle_matches_edge_list(self):
        edges = ((0, 1, 0.5), (1, 2, 0.25), (0, 2, 1.0))
        A = adjacency(WeightedGraph(3, edges))
        expected = np.zeros((3, 3))
        for i, j, w in edges:
            expected[i, j] = expected[j, i] = w
        np.testing.assert_array_equal(A, expected)

    @given(graphs())
    def test_properties(self, g):
        A = adjacency(g)
        assert np.array_equal(A, A.T)
        assert np.all(np.diag(A) == 0) and np.all(A >= 0)


class TestLaplacian:
    def test_single_edge(self):
        np.testing.assert_array_equal(laplacian(WeightedGraph(2, ((0, 1, 0.7),))), [[0.7, -0.7], [-0.7, 0.7]])

    def test_unit_triangle_spectrum(self):
        L = laplacian(unit_triangle())
        np.testing.assert_array_equal(L, 3 * np.eye(3) - np.ones((3, 3)))
        lam, _ = jacobi_eigh(L)
        np.testing.assert_allclose(lam, [0, 3, 3], atol=1e-12)

    def test_zero_multiplicity_counts_components(self):
        g = WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0)))
        lam, _ = jacobi_eigh(laplacian(g))
        assert np.sum(np.abs(lam) < 1e-12) == 2

    @given(graphs())
    def test_rows_sum_to_zero_and_psd(self, g):
        L = laplacian(g)
        np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
        lam = np.linalg.eigvalsh(L)
        assert lam.min() >= -1e-10
        if g.is_connected():
            assert abs(lam[0]) <= 1e-10

    @given(graphs(), st.randoms(use_true_random=False))
    def test_permutation_conjugates(self, g, rnd):
        perm = list(range(g.n))
        rnd.shuffle(perm)
        P = permutation_matrix(perm)
        np.testing.assert_allclose(laplacian(permute(g, perm)), P @ laplacian(g) @ P.T, atol=1e-12)


class TestGenerators:
    def test_er_counts_and_weights(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = int(rng.integers(400, 1001))
            g = gen_erdos_renyi(50, m, rng)
            assert g.num_edges == m
            w = np.array([e[2] for e in g.edges])
            assert np.all((w >= 0) & (w <= 1))

    def test_er_complete_triangle(self):
        g = gen_erdos_renyi(3, 3, np.random.default_rng(0))
        assert [(i, j) for i, j, _ in g.edges] == [(0, 1), (0, 2), (1, 2)]

    def test_er_deterministic(self):
        a = gen_erdos_renyi(10, 20, np.random.default_rng(5))
        b = gen_erdos_renyi(10, 20, np.random.default_rng(5))
        assert a == b

    @pytest.mark.parametrize("m", [-1, 46])
    def test_er_range(self, m):
        with pytest.raises(ValueError):
            gen_erdos_renyi(10, m, np.random.default_rng(0))


class TestPerturbation:
    def test_zero_sigma_identity(self):
        g = gen_erdos_renyi(10, 20, np.random.default_rng(0))
        assert perturb_gaussian(g, 0.0, np.random.default_rng(1)) == g

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            perturb_gaussian(unit_triangle(), -0.1, np.random.default_rng(0))

    def test_clamps_at_zero(self):
        g = WeightedGraph(2, ((0, 1, 0.01),))
        # find a seed whose first draw is strongly negative
        seed = next(s for s in range(1000) if np.random.default_rng(s).normal() < -0.5)
        out = perturb_gaussian(g, 1.0, np.random.default_rng(seed))
        assert out.edges == ((0, 1, 0.0),)

    @given(graphs(), st.floats(0, 2), st.integers(0, 10_000))
    def test_edge_set_preserved(self, g, sigma, seed):
        out = perturb_gaussian(g, sigma, np.random.default_rng(seed))
        assert [(i, j) for i, j, _ in out.edges] == [(i, j) for i, j, _ in g.edges]
        assert all(w >= 0 for _, _, w in out.edges)

    def test_fraction_subset(self):
        g = gen_erdos_renyi(30, 200, np.random.default_rng(0))
        out = perturb_gaussian(g, 0.1, np.random.default_rng(1), fraction=0.25)
        changed = sum(a[2] != b[2] for a, b in zip(g.edges, out.edges))
        assert 20 < changed < 80

    def test_laplacian_change_scales_linearly(self):
        g = gen_erdos_renyi(50, 700, np.random.default_rng(0))
        L = laplacian(g)

        def mean_change(sigma):
            return np.mean([
                np.linalg.norm(laplacian(perturb_gaussian(g, sigma, np.random.default_rng(s))) - L)
                for s in range(20)
            ])

        # weights are mostly far from zero, so clamping barely bends the line
        r1, r2 = mean_change(0.01), mean_change(0.02)
        assert 1.8 < r2 / r1 < 2.2


class TestMatchingPair:
    def test_noiseless_full_density_isomorphic(self):
        g1, g2, truth = gen_matching_pair(20, 0, 0, 1.0, 0.0, np.random.default_rng(0))
        perm = np.zeros(20, dtype=int)
        for i, a in truth.pairs:
            perm[i] = a
        assert permute(g1, perm) == g2

    def test_counts_with_outliers(self):
        g1, g2, truth = gen_matching_pair(20, 5, 5, 0.5, 0.2, np.random.default_rng(0))
        assert g1.n == g2.n == 25
        assert len(truth) == 20

    def test_asymmetric_outliers(self):
        g1, g2, truth = gen_matching_pair(10, 2, 6, 0.8, 0.1, np.random.default_rng(3))
        assert (g1.n, g2.n, len(truth)) == (12, 16, 10)

    @pytest.mark.parametrize("rho", [0.0, -0.5, 1.5])
    def test_bad_density(self, rho):
        with pytest.raises(ValueError):
            gen_matching_pair(10, 0, 0, rho, 0.0, np.random.default_rng(0))


class TestPermute:
    def test_identity(self):
        g = unit_triangle()
        assert permute(g, [0, 1, 2]) == g

    def test_swap_two_nodes(self):
        g = WeightedGraph(2, ((0, 1, 0.3),))
        np.testing.assert_array_equal(adjacency(permute(g, [1, 0])), adjacency(g))

    def test_spectrum_invariant(self):
        rng = np.random.default_rng(0)
        g = gen_erdos_renyi(10, 20, rng)
        gp = permute(g, rng.permutation(10))
        np.testing.assert_allclose(jacobi_eigh(laplacian(g))[0], jacobi_eigh(laplacian(gp))[0], atol=1e-10)

    @pytest.mark.parametrize("perm", [[0, 0, 1], [0, 1], [0, 1, 3]])
    def test_not_bijection(self, perm):
        with pytest.raises(ValueError):
            permute(unit_triangle(), perm)


class TestTextFormat:
    def test_round_trip_exact(self):
        g = gen_erdos_renyi(12, 30, np.random.default_rng(2))
        assert parse_graph(format_graph(g)) == g

    @given(graphs())
    def test_round_trip_property(self, g):
        assert parse_graph(format_graph(g)) == g

    def test_layout(self):
        assert format_graph(WeightedGraph(2, ((0, 1, 0.5),))) == "n 2\n0 1 0.5\n"

    def test_malformed_weight_names_line(self):
        with pytest.raises(GraphFormatError) as exc:
            parse_graph("n 3\n0 1 0.5\n1 2 abc\n", path="g.txt")
        assert exc.value.lineno == 3
        assert str(exc.value).startswith("g.txt:3:")

    @pytest.mark.parametrize(
        "text, line",
        [("", None), ("3\n", 1), ("n 2\n0 2 1\n", 2), ("n 2\n0 1\n", 2), ("n 2\n0 1 1\n1 0 1\n", 3), ("n 2\n0 1 -1\n", 2)],
    )
    def test_errors(self, text, line):
        with pytest.raises(GraphFormatError) as exc:
            parse_graph(text)
        assert exc.value.lineno == line

    def test_truth(self):
        assert parse_truth("0 2\n1 0\n").pairs == ((0, 2), (1, 0))
        with pytest.raises(GraphFormatError):
            parse_truth("0 1\n1 1\n")

    def test_ground_truth_injective(self):
        with pytest.raises(ValueError):
            GroundTruth(((0, 1), (0, 2)))

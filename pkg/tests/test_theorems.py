import math

import numpy as np
import pytest

from lfsmatch.cli import EXIT_OK, EXIT_VIOLATION, run_theorems
from lfsmatch.graph import WeightedGraph, gen_erdos_renyi
from lfsmatch.spectral import Heat, Wave, heat_kernel_matrix, laplacian_eig
from lfsmatch.theorems import (
    BoundReport,
    check_eigen_sensitivity,
    check_eigenvalue_perturbation,
    check_hkd_frobenius_bound,
    check_hkd_limit,
    check_lfs_continuity,
    check_maxeig_bound,
    check_subspace_invariance,
    complete_graph,
    distinct_spectrum_graph,
    edge_perturbation,
    hkd_frobenius_sides,
    hkd_limit_error,
    maxeig_bound,
    random_connected_graph,
    random_orthogonal,
)

UNIT_EDGE = WeightedGraph(2, ((0, 1, 1.0),))


def exploding_heat_kernel(dec, t):
    # sign error in the exponent
    return (dec.vectors * np.exp(t * dec.lambdas)) @ dec.vectors.T


class TestReport:
    def test_add_and_csv(self):
        rep = BoundReport("x")
        rep.add(0, 1, 0.5, "", 1.0, 2.0)
        rep.add(1, 2, 0.5, "", 3.0, 2.0)
        assert rep.violations == 1 and not rep.passed
        assert rep.max_ratio == pytest.approx(1.5)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "trial,seed,param_t,param_eps,lhs,rhs,violation"
        assert lines[2].endswith(",1")

    def test_slack(self):
        rep = BoundReport("x")
        rep.add(0, 0, "", "", 1.0 + 1e-12, 1.0)
        assert rep.passed


class TestPerturbation:
    def test_unit_norm_on_edges(self):
        g = gen_erdos_renyi(8, 12, np.random.default_rng(0))
        dL = edge_perturbation(g, np.random.default_rng(1), 0.01)
        assert np.linalg.norm(dL) == pytest.approx(1.0)
        np.testing.assert_allclose(dL.sum(axis=1), 0, atol=1e-12)
        A = g.adjacency()
        off = ~np.eye(8, dtype=bool)
        assert np.all(dL[off & (A == 0)] == 0)

    def test_edgeless(self):
        with pytest.raises(ValueError):
            edge_perturbation(WeightedGraph(3), np.random.default_rng(0), 0.1)

    def test_single_edge_bump_bounded(self):
        # raising one unit edge by c moves each eigenvalue by at most 2c
        g = gen_erdos_renyi(10, 20, np.random.default_rng(2))
        i, j, w = g.edges[0]
        c = 0.3
        bumped = WeightedGraph(g.n, ((i, j, w + c),) + g.edges[1:])
        shift = np.abs(laplacian_eig(bumped).lambdas - laplacian_eig(g).lambdas)
        assert shift.max() <= 2 * c + 1e-12


class TestContinuity:
    def test_distinct_spectrum(self):
        rep = check_lfs_continuity(distinct_spectrum_graph(0), Heat(), trials=5, seed=0)
        assert rep.passed and rep.skipped == 0
        assert rep.trials == 5

    def test_k5(self):
        assert check_lfs_continuity(complete_graph(5), Heat(), trials=5, seed=1).passed

    def test_decoupled_kernel(self):
        assert check_lfs_continuity(distinct_spectrum_graph(1), Wave(), trials=3, seed=0).passed

    def test_tiny_gap_raises(self):
        # two nearly degenerate eigenvalues
        g = WeightedGraph(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0 + 1e-6)))
        with pytest.raises(ValueError):
            check_lfs_continuity(g, Heat(), trials=1)


class TestSubspaceInvariance:
    def test_k5_random_rotations(self):
        rep = check_subspace_invariance(complete_graph(5), Heat(), trials=20, seed=0)
        assert rep.passed and rep.max_ratio <= 1.0

    def test_identity_rotation_exact(self):
        rep = check_subspace_invariance(complete_graph(5), Heat(), trials=1, identity=True)
        assert all(row[4] == 0.0 for row in rep.rows)

    def test_random_orthogonal(self):
        Q = random_orthogonal(4, np.random.default_rng(0))
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)


class TestHKDLimit:
    def test_identical_pair_small_error(self):
        g = gen_erdos_renyi(6, 8, np.random.default_rng(0))
        assert hkd_limit_error(g, g, 1e-4) < 1e-2

    def test_two_disjoint_edges(self):
        g1 = WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0)))
        g2 = WeightedGraph(4, ((0, 2, 0.5), (1, 3, 0.25)))
        errs = [hkd_limit_error(g1, g2, t) for t in (2e-4, 1e-4)]
        assert errs[1] < 1e-2
        assert errs[0] / errs[1] >= 1.8

    def test_check_passes(self):
        rng = np.random.default_rng(1)
        pairs = [(gen_erdos_renyi(7, 10, rng), gen_erdos_renyi(7, 12, rng)) for _ in range(5)]
        assert check_hkd_limit(pairs).passed

    def test_broken_kernel_caught(self):
        rng = np.random.default_rng(1)
        pairs = [(gen_erdos_renyi(7, 10, rng), gen_erdos_renyi(7, 12, rng)) for _ in range(3)]

        def doubled(dec, t):
            return heat_kernel_matrix(dec, 2 * t)

        assert not check_hkd_limit(pairs, heat_kernel=doubled).passed


class TestFrobeniusBound:
    def test_unit_edge_against_itself(self):
        lhs, rhs = hkd_frobenius_sides(UNIT_EDGE, UNIT_EDGE, 0.5)
        assert lhs == 0.0
        assert rhs == pytest.approx(2 * (1 + math.exp(-2)))

    def test_edge_vs_empty(self):
        lhs, rhs = hkd_frobenius_sides(UNIT_EDGE, WeightedGraph(2), 0.5)
        assert lhs == pytest.approx(2 * ((1 - math.exp(-1)) / 2) ** 2)
        assert lhs <= rhs

    def test_check_passes(self):
        rng = np.random.default_rng(0)
        pairs = [(gen_erdos_renyi(8, 10, rng), gen_erdos_renyi(8, 20, rng)) for _ in range(10)]
        assert check_hkd_frobenius_bound(pairs).passed

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            hkd_frobenius_sides(UNIT_EDGE, WeightedGraph(3), 0.5)

    def test_exploding_kernel_caught(self):
        rng = np.random.default_rng(0)
        pairs = [(gen_erdos_renyi(8, 10, rng), gen_erdos_renyi(8, 20, rng)) for _ in range(3)]
        assert not check_hkd_frobenius_bound(pairs, heat_kernel=exploding_heat_kernel).passed


class TestMaxEigBound:
    def test_unit_edge_tight(self):
        assert maxeig_bound(UNIT_EDGE) == pytest.approx(2.0)
        assert laplacian_eig(UNIT_EDGE).lambdas[-1] == pytest.approx(2.0)

    def test_triangle(self):
        g = complete_graph(3)
        assert laplacian_eig(g).lambdas[-1] == pytest.approx(3.0)
        assert maxeig_bound(g) == pytest.approx(4.0)

    def test_random_connected(self):
        rng = np.random.default_rng(0)
        graphs = [random_connected_graph(10, rng) for _ in range(20)]
        assert all(g.is_connected() for g in graphs)
        rep = check_maxeig_bound(graphs)
        assert rep.passed and rep.trials == 20

    def test_disconnected_skipped(self):
        rep = check_maxeig_bound([WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0)))])
        assert rep.skipped == 1 and rep.trials == 0


class TestSpectrumPerturbation:
    def test_weyl(self):
        g = random_connected_graph(12, np.random.default_rng(0))
        assert check_eigenvalue_perturbation(g, trials=20).passed

    def test_first_order(self):
        assert check_eigen_sensitivity(distinct_spectrum_graph(0), trials=10).passed


class TestSuite:
    def test_reduced_suite_passes(self, tmp_path):
        code, reports = run_theorems(seed=0, out=str(tmp_path), scale=0.1)
        assert code == EXIT_OK
        assert all(r.passed for r in reports)
        files = sorted(p.name for p in tmp_path.iterdir())
        assert len(files) == len(reports)
        assert all(p.read_text().startswith("trial,seed,") for p in tmp_path.iterdir())

    def test_corrupted_kernel_exits_two(self):
        code, reports = run_theorems(seed=0, scale=0.1, heat_kernel=exploding_heat_kernel)
        assert code == EXIT_VIOLATION
        assert any(r.name == "hkd_frobenius_bound" and not r.passed for r in reports)

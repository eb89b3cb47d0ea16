"""Epigraph volumes, moment measures, spherical measures, body volumes."""

import math

import numpy as np
import pytest

from epigauss.convex_core import (
    GridFunction,
    PLConvexFunction,
    WeightPair,
    pl_box_indicator,
    pl_polygon_indicator,
)
from epigauss.gauss_functionals import (
    DivergentTailError,
    _eta_tail,
    epigraph_volume,
    gauss_coeff,
    gaussian_body_volume,
    moment_measure,
    pl_quadrature,
    regular_polygon,
    spherical_measure,
    total_moment_mass,
    weighted_epigraph_volume,
)
from epigauss.numerics import INF, SQRT_2PI, QuadratureConfig, gauss_tail, panel_rule_1d

CFG = QuadratureConfig()


def raw_epigraph_volume_1d(pl: PLConvexFunction, radius=8.0, s_top=8.0):
    """Raw double integral over the epigraph region by nested Gauss panels.

    Independent oracle: the inner Gaussian tail is integrated numerically (no
    use of the library's tail function) and the outer integral splits at the
    breakpoints of the piecewise-linear input.
    """
    lo, hi = pl.domain_interval()
    lo, hi = max(lo, -radius), min(hi, radius)
    from epigauss._geometry import max_affine_cells_1d

    cells = max_affine_cells_1d(pl.slopes[:, 0], pl.intercepts, lo, hi)
    total = 0.0
    for _, a, b in cells:
        xs, wx = panel_rule_1d(a, b, max_len=0.25, order=24)
        vals = pl.piece_values(xs.reshape(-1, 1)).max(axis=1)
        inner = np.zeros_like(xs)
        for i, v in enumerate(vals):
            if v >= s_top:
                continue
            ss, ws = panel_rule_1d(v, s_top, max_len=0.25, order=24)
            inner[i] = np.sum(np.exp(-0.5 * ss ** 2) * ws)
        total += np.sum(np.exp(-0.5 * xs ** 2) * inner * wx)
    return total / (2.0 * math.pi)  # c_2 normalization


class TestEpigraphVolume:
    def test_zero_function_half(self):
        for f in (PLConvexFunction([[0.0]], [0.0]), PLConvexFunction([[0.0, 0.0]], [0.0])):
            assert abs(epigraph_volume(f, CFG) - 0.5) < 1e-8

    def test_interval_indicator(self):
        f = pl_box_indicator([-1.0], [1.0])
        target = 0.5 * (1.0 - 2.0 * gauss_tail(1.0))
        assert abs(epigraph_volume(f, CFG) - target) < 1e-8

    def test_linear_growth_vs_raw_double_integral(self):
        f = PLConvexFunction([[1.0], [-1.0]], [1.0, 1.0])  # |x| + 1
        assert abs(epigraph_volume(f, CFG) - raw_epigraph_volume_1d(f)) < 1e-7

    def test_grid_path_matches_pl_path(self):
        # the node path carries the trapezoid boundary term ~ h^2/12 * |f'|
        pl = PLConvexFunction([[1.0], [-1.0]], [0.5, 0.5])
        grid = GridFunction.sample(lambda p: pl(p), [-8], [8], [1025])
        assert abs(epigraph_volume(grid, CFG) - epigraph_volume(pl, CFG)) < 1e-4

    def test_range_and_antitone(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            s = rng.uniform(0.3, 2.0, 3)
            b = rng.uniform(-1, 1, 3)
            lower = PLConvexFunction(np.concatenate([s, -s]).reshape(-1, 1),
                                     np.concatenate([b, b]))
            higher = lower.shifted(rng.uniform(0.1, 1.0))
            v_low = epigraph_volume(lower, CFG)
            v_high = epigraph_volume(higher, CFG)
            assert 0.0 <= v_high <= v_low <= 1.0

    def test_indicator_identity_many_bodies(self):
        bodies = {
            "interval": ([-1.2, 0.7], pl_box_indicator([-1.2], [0.7])),
            "square": (np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float),
                       pl_box_indicator([-1, -1], [1, 1])),
            "pentagon": (regular_polygon(5, 1.3), pl_polygon_indicator(regular_polygon(5, 1.3))),
            "disk64": (regular_polygon(64), pl_polygon_indicator(regular_polygon(64))),
        }
        for name, (body, indicator) in bodies.items():
            lhs = epigraph_volume(indicator, CFG)
            rhs = 0.5 * gaussian_body_volume(body)
            assert abs(lhs - rhs) < 1e-8, name


class TestWeightedVolume:
    def test_exponential_total_mass_of_abs(self):
        f = PLConvexFunction([[1.0], [-1.0]], [0.0, 0.0])
        cfg = QuadratureConfig(truncation_radius=40.0, points_per_axis=129)
        val = weighted_epigraph_volume(f, WeightPair("unit", "exponential"), cfg)
        assert abs(val - 2.0) < 1e-10

    def test_exponential_indicator_reduces_to_volume(self):
        f = pl_box_indicator([0.0], [1.0])
        val = weighted_epigraph_volume(f, WeightPair("unit", "exponential"), CFG)
        assert abs(val - 1.0) < 1e-12

    def test_gaussian_pair_reproduces_epigraph_volume(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            s = rng.uniform(0.4, 2.0, 2)
            b = rng.uniform(-0.5, 0.5, 2)
            f = PLConvexFunction(np.concatenate([s, -s]).reshape(-1, 1),
                                 np.concatenate([b, b]))
            a = weighted_epigraph_volume(f, WeightPair(), CFG)
            assert abs(a - epigraph_volume(f, CFG)) < 1e-12

    def test_alpha_tail_matches_quadrature_of_density(self):
        # H(t) = (1 - alpha t)^(1/alpha) against direct quadrature of eta
        alpha = -0.4
        for t in (0.0, 0.5, 2.0):
            s_hi = 2000.0
            ss, ws = panel_rule_1d(t, s_hi, max_len=0.5, order=16)
            direct = np.sum((1.0 - alpha * ss) ** (1.0 / alpha - 1.0) * ws)
            closed = _eta_tail("alpha_concave", alpha, np.array([t]))[0]
            # the truncated part of the polynomial tail is the leading error
            assert abs(direct - closed) < 2e-4 * closed + 1e-12

    def test_alpha_divergence_detected(self):
        f = pl_box_indicator([0.0], [1.0], value=-10.0)  # reaches 1/alpha
        with pytest.raises(DivergentTailError):
            weighted_epigraph_volume(f, WeightPair("unit", "alpha_concave", alpha=-0.4), CFG)

    def test_exponential_needs_growth_on_full_domain(self):
        flat = PLConvexFunction([[0.0]], [0.0])
        with pytest.raises(DivergentTailError):
            weighted_epigraph_volume(flat, WeightPair("unit", "exponential"), CFG)


class TestMomentMeasure:
    def test_abs_atoms(self):
        f = PLConvexFunction([[1.0], [-1.0]], [0.0, 0.0])
        est = moment_measure(f, CFG)
        target = math.sqrt(math.pi) / (2.0 * math.pi)
        np.testing.assert_allclose(est.masses, target / 2.0, atol=1e-12)
        assert abs(est.total_mass - target) < 1e-12

    def test_constant_single_atom_at_origin(self):
        c = 0.8
        f = PLConvexFunction([[0.0]], [c])
        est = moment_measure(f, CFG)
        target = gauss_coeff(1) * math.exp(-0.5 * c * c) * SQRT_2PI
        np.testing.assert_allclose(est.locations, 0.0)
        assert abs(est.total_mass - target) < 1e-12

    def test_node_attribution_partitions_total(self):
        f = PLConvexFunction([[1.0], [-1.0], [2.0], [-2.0]], [-0.5, -0.5, -1.5, -1.5])
        est = moment_measure(f, CFG, method="nodes")
        total = total_moment_mass(f, CFG, method="nodes")
        assert abs(est.masses.sum() - total) < 1e-10

    def test_cells_and_nodes_agree(self):
        f = PLConvexFunction([[1.0], [-1.0], [2.0], [-2.0]], [-0.5, -0.5, -1.5, -1.5])
        a = moment_measure(f, CFG, method="cells").masses
        b = moment_measure(f, CFG, method="nodes").masses
        np.testing.assert_allclose(a, b, atol=5e-4)

    def test_evenness_equivariance_with_node_ties(self):
        # tie rays of the even cross function pass through many grid nodes
        f = PLConvexFunction([[1, 0], [-1, 0], [0, 1], [0, -1]], [0.0] * 4)
        for method in ("cells", "nodes"):
            est = moment_measure(f, CFG, method=method)
            np.testing.assert_allclose(est.masses[0], est.masses[1], atol=1e-10)
            np.testing.assert_allclose(est.masses[2], est.masses[3], atol=1e-10)

    def test_total_mass_bound(self):
        # total <= c_(n+1) (2 pi)^(n/2) = (2 pi)^(-1/2)
        rng = np.random.default_rng(14)
        for _ in range(3):
            s = rng.uniform(0.3, 2.0, 2)
            f = PLConvexFunction(np.concatenate([s, -s]).reshape(-1, 1),
                                 rng.uniform(-1, 0, 4))
            assert moment_measure(f, CFG).total_mass <= (2 * math.pi) ** -0.5 + 1e-12

    def test_grid_histogram(self):
        f = GridFunction.sample(lambda p: (p ** 2).sum(axis=1) / 2,
                                [-6, -6], [6, 6], [129, 129])
        est = moment_measure(f, bins=16)
        assert est.kind == "histogram"
        assert abs(est.bin_masses.sum() - est.total_mass) < 1e-12
        assert abs(est.total_mass - total_moment_mass(f)) < 1e-12


class TestTotalMomentMass:
    def test_zero_function(self):
        f = PLConvexFunction([[0.0]], [0.0])
        assert abs(total_moment_mass(f, CFG) - (2 * math.pi) ** -0.5) < 1e-12

    def test_abs(self):
        f = PLConvexFunction([[1.0], [-1.0]], [0.0, 0.0])
        assert abs(total_moment_mass(f, CFG) - math.sqrt(math.pi) / (2 * math.pi)) < 1e-12

    def test_isolated_finite_point_is_null(self):
        vals = np.full(65, INF)
        vals[32] = 0.0
        from epigauss.convex_core import BoxDomain

        f = GridFunction(BoxDomain([-8.0], [8.0]), vals)
        assert total_moment_mass(f) == 0.0


class TestSphericalMeasure:
    def test_full_domain_zero(self):
        f = PLConvexFunction([[0.0, 0.0]], [0.0])
        est = spherical_measure(f, CFG)
        assert est.total_mass == 0.0
        assert len(est.masses) == 0

    def test_disk_256gon(self):
        f = pl_polygon_indicator(regular_polygon(256))
        est = spherical_measure(f, CFG)
        assert abs(est.total_mass - 0.5 * math.exp(-0.5)) < 1e-3
        lens = np.linalg.norm(est.normals, axis=1)
        np.testing.assert_allclose(lens, 1.0, atol=1e-12)

    def test_square_edges_symmetric(self):
        f = pl_box_indicator([-1, -1], [1, 1])
        est = spherical_measure(f, CFG)
        assert len(est.masses) == 4
        np.testing.assert_allclose(est.masses, est.total_mass / 4.0, atol=1e-12)

    def test_interval_endpoint_atoms(self):
        f = pl_box_indicator([-1.0], [1.0])
        est = spherical_measure(f, CFG)
        target = (2 * math.pi) ** -0.5 * math.exp(-0.5) * 0.5
        np.testing.assert_allclose(np.sort(est.normals[:, 0]), [-1.0, 1.0])
        np.testing.assert_allclose(est.masses, target, atol=1e-14)

    def test_halfspace_domain_contributes_one_edge(self):
        # domain x <= 1 in 1-d: only the finite endpoint carries mass
        f = PLConvexFunction([[1.0], [-1.0]], [0.0, 0.0],
                             normals=[[1.0]], offsets=[1.0])
        est = spherical_measure(f, CFG)
        assert len(est.masses) == 1
        assert est.normals[0, 0] == 1.0


class TestGaussianBodyVolume:
    def test_interval(self):
        assert abs(gaussian_body_volume([-1.0, 1.0]) - (1 - 2 * gauss_tail(1.0))) < 1e-14

    def test_total_mass_of_large_box(self):
        box = np.array([[-8, -8], [8, -8], [8, 8], [-8, 8]], float)
        assert abs(gaussian_body_volume(box) - 1.0) < 1e-10

    def test_square_product_structure(self):
        box = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float)
        assert abs(gaussian_body_volume(box) - (1 - 2 * gauss_tail(1.0)) ** 2) < 1e-12


class TestFinitenessBounds:
    def _functions(self):
        rng = np.random.default_rng(6)
        fns = [PLConvexFunction([[1.0], [-1.0]], [1.0, 1.0]),
               pl_box_indicator([-1.0], [1.0]),
               pl_box_indicator([-1, -1], [1, 1]),
               PLConvexFunction([[1, 0.2], [-1, 0.1], [0, 1], [0.1, -1]],
                                [0.3, 0.2, -0.4, 0.1])]
        for _ in range(2):
            s = rng.uniform(0.3, 2.0, 3)
            b = rng.uniform(-1, 1, 3)
            fns.append(PLConvexFunction(np.concatenate([s, -s]).reshape(-1, 1),
                                        np.concatenate([b, b])))
        return fns

    def test_weighted_tail_moments_finite_nonnegative(self):
        from epigauss.numerics import gauss_tail_array, pairwise_sum

        for f in self._functions():
            q = pl_quadrature(f, CFG)
            r2 = np.einsum("ij,ij->i", q.points, q.points)
            gx = np.exp(-0.5 * r2)
            tails = gauss_tail_array(q.values) * SQRT_2PI
            for p in (1.0, 2.0):
                val = pairwise_sum(r2 ** (p / 2.0) * gx * tails * q.weights)
                assert np.isfinite(val) and val >= 0.0

    def test_gradient_mass_finite_nonnegative(self):
        from epigauss.numerics import pairwise_sum

        for f in self._functions():
            q = pl_quadrature(f, CFG)
            grad_norm = np.linalg.norm(f.slopes[q.piece_id], axis=1)
            gx = np.exp(-0.5 * np.einsum("ij,ij->i", q.points, q.points))
            val = pairwise_sum(grad_norm * np.exp(-0.5 * q.values ** 2) * gx * q.weights)
            assert np.isfinite(val) and val >= 0.0

    def test_value_mass_bounded_by_tail_product_bound(self):
        from epigauss.numerics import pairwise_sum

        for f in self._functions():
            q = pl_quadrature(f, CFG)
            gx = np.exp(-0.5 * np.einsum("ij,ij->i", q.points, q.points))
            val = pairwise_sum(np.abs(q.values) * np.exp(-0.5 * q.values ** 2) * gx * q.weights)
            bound = math.exp(-0.5) * (2 * math.pi) ** (f.n / 2.0)
            assert 0.0 <= val <= bound + 1e-12


class TestPowerWeight:
    def test_power_moment_gamma_function_value(self):
        # integral |x|^(q-1) e^(-|x|) dx over the line = 2 Gamma(q)
        f = PLConvexFunction([[1.0], [-1.0]], [0.0, 0.0])
        cfg = QuadratureConfig(truncation_radius=40.0, points_per_axis=129)
        val = weighted_epigraph_volume(f, WeightPair("power", "exponential", q=3.0), cfg)
        assert abs(val - 2.0 * math.gamma(3.0)) < 1e-8

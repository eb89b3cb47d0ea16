"""Semi-discrete solver, constraint projection, and residual diagnostics."""

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from epigauss.convex_core import DiscreteMeasure, GridFunction, lower_convex_envelope
from epigauss.gauss_functionals import gauss_coeff, moment_measure
from epigauss.minkowski_solver import (
    MinkowskiProblem,
    SolverConfig,
    constraint_gradient,
    constraint_value,
    monge_ampere_residual,
    phi_star_of,
    project_shift,
    solve,
    verify_solution,
)
from epigauss.numerics import QuadratureConfig, gauss_tail_array, panel_rule_1d

CFG = QuadratureConfig()

PAIR_1D = MinkowskiProblem.from_measure(DiscreteMeasure([[1.0], [-1.0]], [1.0, 1.0]))
TWO_PAIR = MinkowskiProblem.from_measure(
    DiscreteMeasure([[1.0], [-1.0], [2.0], [-2.0]], [1.0, 1.0, 0.2, 0.2]))
CROSS = MinkowskiProblem.from_measure(
    DiscreteMeasure([[1, 0], [-1, 0], [0, 1], [0, -1]], [1.0, 1.0, 1.0, 1.0]))


def single_pair_oracle_v(radius=8.0):
    """Feasible height for the +-1 measure by kink-split panel quadrature.

    Solves (2 pi)^(-1/2) * integral exp(-y^2/2) tail(|y| - v) dy = 1/2 with an
    integrator built here, independent of the solver's cell machinery.
    """
    n1, w1 = panel_rule_1d(-radius, 0.0, 0.25, 24)
    n2, w2 = panel_rule_1d(0.0, radius, 0.25, 24)
    nodes = np.concatenate([n1, n2])
    wts = np.concatenate([w1, w2])
    gx = np.exp(-0.5 * nodes ** 2) * wts

    def gamma(v):
        return (2 * math.pi) ** -0.5 * float(
            np.sum(gx * gauss_tail_array(np.abs(nodes) - v))) - 0.5

    return brentq(gamma, 0.0, 10.0, xtol=1e-13)


class TestPhiStar:
    def test_single_pair_shifted_abs(self):
        f = phi_star_of([0.7], PAIR_1D)
        ys = np.linspace(-2, 2, 21).reshape(-1, 1)
        np.testing.assert_allclose(f(ys), np.abs(ys[:, 0]) - 0.7, atol=1e-15)

    def test_zero_heights_give_support_function(self):
        f = phi_star_of(np.zeros(2), CROSS)
        rng = np.random.default_rng(0)
        ys = rng.uniform(-2, 2, (50, 2))
        ref = np.abs(ys).max(axis=1)
        np.testing.assert_allclose(f(ys), ref, atol=1e-14)

    def test_cross_heights(self):
        f = phi_star_of([0.5, 0.5], CROSS)
        rng = np.random.default_rng(1)
        ys = rng.uniform(-3, 3, (100, 2))
        ref = np.maximum(np.abs(ys[:, 0]), np.abs(ys[:, 1])) - 0.5
        np.testing.assert_allclose(f(ys), ref, atol=1e-14)

    def test_negative_heights_rejected(self):
        with pytest.raises(ValueError):
            phi_star_of([-0.5], PAIR_1D)


class TestConstraint:
    def test_zero_heights_below_half(self):
        assert constraint_value(np.zeros(1), PAIR_1D, CFG) < 0.5
        assert constraint_value(np.zeros(2), CROSS, CFG) < 0.5

    def test_large_uniform_heights_saturate(self):
        assert abs(constraint_value(np.full(1, 50.0), PAIR_1D, CFG) - 1.0) < 1e-6

    def test_matches_raw_double_integral(self):
        from tests.test_gauss_functionals import raw_epigraph_volume_1d

        f = phi_star_of([0.0], PAIR_1D)
        assert abs(constraint_value(np.zeros(1), PAIR_1D, CFG)
                   - raw_epigraph_volume_1d(f)) < 1e-7

    def test_monotone_in_uniform_shift(self):
        vals = [constraint_value(np.full(2, t), CROSS, CFG) for t in (0.0, 0.5, 1.0, 2.0)]
        assert np.all(np.diff(vals) > 0)


class TestProjection:
    def test_matches_independent_oracle(self):
        v, t = project_shift(np.zeros(1), PAIR_1D, CFG)
        assert abs(v[0] - single_pair_oracle_v()) < 1e-8

    def test_feasible_point_is_fixed(self):
        v0, _ = project_shift(np.zeros(1), PAIR_1D, CFG)
        _, t = project_shift(v0, PAIR_1D, CFG)
        assert abs(t) < 1e-8

    def test_two_starts_reach_the_same_level_set(self):
        va, _ = project_shift(np.array([0.0, 3.0]), TWO_PAIR, CFG)
        vb, _ = project_shift(np.array([2.0, 0.5]), TWO_PAIR, CFG)
        ga = constraint_value(va, TWO_PAIR, CFG)
        gb = constraint_value(vb, TWO_PAIR, CFG)
        assert abs(ga - 0.5) <= 1e-10 and abs(gb - 0.5) <= 1e-10


class TestGradientMasses:
    def test_single_pair_gets_all_mass(self):
        from epigauss.gauss_functionals import total_moment_mass

        m = constraint_gradient(np.array([0.7]), PAIR_1D, CFG)
        total = total_moment_mass(phi_star_of([0.7], PAIR_1D), CFG)
        assert abs(m.sum() - total) < 1e-12

    def test_dominated_pieces_carry_nothing(self):
        prob = MinkowskiProblem.from_measure(
            DiscreteMeasure([[1.0], [-1.0], [2.0], [-2.0]], [1.0, 1.0, 1.0, 1.0]))
        m = constraint_gradient(np.array([0.0, 10.0]), prob, CFG)
        assert m[1] == 0.0

    def test_cross_symmetry_four_equal_atoms(self):
        est = moment_measure(phi_star_of([0.5, 0.5], CROSS), CFG)
        np.testing.assert_allclose(est.masses, est.masses[0], atol=1e-10)


class TestSolve:
    def test_single_pair_full_criteria(self):
        t0 = time.time()
        res = solve(PAIR_1D)
        assert time.time() - t0 < 10.0
        assert res.converged
        assert abs(res.constraint_value - 0.5) <= 1e-10
        assert res.residual <= 1e-10
        assert abs(res.v[0] - single_pair_oracle_v()) < 1e-8
        est = moment_measure(res.phi, CFG)
        assert abs(est.masses[0] - est.masses[1]) <= 1e-10

    def test_cross_symmetric(self):
        res = solve(CROSS)
        assert res.converged and res.residual <= 1e-3
        assert abs(res.v[0] - res.v[1]) < 1e-12
        est = moment_measure(res.phi, CFG)
        np.testing.assert_allclose(est.masses, est.masses[0], atol=1e-10)

    def test_two_pair_against_grid_search_oracle(self):
        res = solve(TWO_PAIR)
        assert res.converged and res.residual <= 1e-3

        # constrained grid search: walk v1, bisect v2 onto the volume level
        # set, minimize the exact envelope objective
        W = TWO_PAIR.pair_weights
        pts = np.array([[1.0], [-1.0], [2.0], [-2.0]])

        def objective(v1, v2):
            env = lower_convex_envelope(pts, [v1, v1, v2, v2])
            vals = env(pts)
            return W[0] * vals[0] + W[1] * vals[2]

        def scan(grid):
            best = (math.inf, None)
            for v1 in grid:
                lo_val = constraint_value(np.array([v1, 0.0]), TWO_PAIR, CFG) - 0.5
                hi_val = constraint_value(np.array([v1, 30.0]), TWO_PAIR, CFG) - 0.5
                if lo_val >= 0 or hi_val <= 0:  # level set unreachable along v2
                    continue
                v2 = brentq(
                    lambda t: constraint_value(np.array([v1, t]), TWO_PAIR, CFG) - 0.5,
                    0.0, 30.0, xtol=1e-10)
                val = objective(v1, v2)
                if val < best[0]:
                    best = (val, (v1, v2))
            return best

        coarse = scan(np.arange(0.55, 1.1, 0.005))
        c1 = coarse[1][0]
        fine = scan(np.arange(c1 - 0.006, c1 + 0.006, 0.0004))
        v_oracle = np.array(fine[1])
        assert np.max(np.abs(res.v - v_oracle)) < 1e-2

    def test_result_function_is_coercive_and_even(self):
        from epigauss.convex_core import is_coercive

        res = solve(TWO_PAIR)
        assert is_coercive(res.phi)
        est = moment_measure(res.phi, CFG)
        # atoms come in +- pairs with equal masses
        np.testing.assert_allclose(est.masses[0::2], est.masses[1::2], atol=1e-10)

    def test_mass_conservation_at_solution(self):
        from epigauss.gauss_functionals import total_moment_mass

        res = solve(TWO_PAIR)
        assert abs(res.masses.sum() - total_moment_mass(res.phi, CFG)) < 1e-10

    def test_lambda_definition(self):
        res = solve(PAIR_1D)
        assert res.lam == pytest.approx(PAIR_1D.total_mass / res.masses.sum(), rel=1e-12)


class TestVerify:
    def test_symmetric_case_tv_zero(self):
        res = solve(PAIR_1D)
        rep = verify_solution(res, PAIR_1D)
        assert rep.tv_distance <= 1e-6

    def test_two_pair_refinement_stability(self):
        res = solve(TWO_PAIR)
        rep = verify_solution(res, TWO_PAIR)
        assert rep.tv_distance <= 2e-3

    def test_truncated_run_is_flagged(self):
        cfg = SolverConfig(max_iterations=1, residual_tol=1e-12)
        res = solve(TWO_PAIR, cfg)
        assert not res.converged
        rep = verify_solution(res, TWO_PAIR, tv_tol=1e-3)
        assert rep.tv_distance > 1e-3
        assert not rep.passed


def quartic(y):
    return y ** 4 / 12.0 + y ** 2 / 2.0


def quartic_grad(y):
    return y ** 3 / 3.0 + y


def quartic_curv(y):
    return y ** 2 + 1.0


def invert_quartic_grad(x):
    return np.array([brentq(lambda yy: quartic_grad(yy) - xi, -60, 60) for xi in x])


class TestMongeAmpereResidual:
    def test_manufactured_quadratic_is_exact(self):
        tau, c2 = 1.0, gauss_coeff(1)

        def g(x):
            x = np.asarray(x).reshape(-1)
            return tau * c2 * np.exp(-0.5 * (x ** 2 / 2) ** 2) * np.exp(-0.5 * x ** 2)

        f = GridFunction.sample(lambda p: p[:, 0] ** 2 / 2, [-2], [2], [129])
        rep = monge_ampere_residual(f, g, tau)
        h = 4.0 / 128
        assert rep.max_residual <= h * h  # far below: differences are exact here

    def test_linear_candidate_with_tau_zero(self):
        f = GridFunction.sample(lambda p: 0.3 * p[:, 0] + 0.1, [-2], [2], [65])
        rep = monge_ampere_residual(f, lambda x: np.ones(len(np.atleast_1d(x))), 0.0)
        # the determinant of exactly linear samples cancels to roundoff
        assert rep.max_residual <= 1e-12

    def test_manufactured_1d_second_order(self):
        tau, c2 = 1.0, gauss_coeff(1)

        def g(x):
            y = invert_quartic_grad(np.asarray(x).reshape(-1))
            return tau * c2 * np.exp(-0.5 * quartic(y) ** 2) * np.exp(-0.5 * y ** 2) / quartic_curv(y)

        res = {}
        for m in (129, 257):
            f = GridFunction.sample(lambda p: quartic(p[:, 0]), [-2], [2], [m])
            res[m] = monge_ampere_residual(f, g, tau).max_residual
        order = math.log2(res[129] / res[257])
        assert order >= 1.8

    def test_manufactured_2d_second_order(self):
        tau, c3 = 1.0, gauss_coeff(2)

        def g(x):
            x = np.asarray(x)
            y1 = invert_quartic_grad(x[:, 0])
            y2 = invert_quartic_grad(x[:, 1])
            val = quartic(y1) + quartic(y2)
            return (tau * c3 * np.exp(-0.5 * val ** 2) * np.exp(-0.5 * (y1 ** 2 + y2 ** 2))
                    / (quartic_curv(y1) * quartic_curv(y2)))

        res = {}
        for m in (65, 129):
            f = GridFunction.sample(lambda p: quartic(p[:, 0]) + quartic(p[:, 1]),
                                    [-1.5, -1.5], [1.5, 1.5], [m, m])
            res[m] = monge_ampere_residual(f, g, tau).max_residual
        order = math.log2(res[65] / res[129])
        assert order >= 1.8

    def test_inf_nodes_excluded(self):
        vals = np.linspace(-2, 2, 65) ** 2 / 2
        vals[10] = np.inf
        vals[:10] = np.inf  # keep the finite run contiguous
        from epigauss.convex_core import BoxDomain

        f = GridFunction(BoxDomain([-2.0], [2.0]), vals)
        rep = monge_ampere_residual(f, lambda x: np.ones(len(np.atleast_1d(x))), 1.0)
        assert rep.excluded > 0
        assert np.isfinite(rep.max_residual)


class TestOriginAtom:
    def test_measure_with_origin_atom_solves(self):
        prob = MinkowskiProblem.from_measure(
            DiscreteMeasure([[1.0], [-1.0], [0.0]], [1.0, 1.0, 0.4]))
        res = solve(prob)
        assert res.converged and res.residual <= 1e-3
        assert abs(res.constraint_value - 0.5) <= 1e-10
        # the constant piece of the origin atom carries positive mass
        assert res.masses[-1] > 0.0

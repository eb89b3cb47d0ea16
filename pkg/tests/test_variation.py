"""First-variation formulas: certificates, quotients, closed forms, identities."""

import math

import numpy as np
import pytest

from epigauss.convex_core import (
    GridFunction,
    PLConvexFunction,
    pl_box_indicator,
    pl_point_indicator,
)
from epigauss.gauss_functionals import epigraph_volume
from epigauss.numerics import QuadratureConfig
from epigauss.transform import inf_convolution_pl
from epigauss.variation import (
    ConditionViolatedError,
    berman_derivative_residual,
    check_condition,
    condition_violation,
    delta_gamma_closed,
    delta_gamma_numeric,
    delta_gamma_self,
    delta_gamma_self_boundary,
    scaling_identity_residual,
    variation_report,
)

CFG = QuadratureConfig()

PHI_V = PLConvexFunction([[1.0], [-1.0]], [1.0, 1.0])              # |x| + 1
PSI_STEEP = PLConvexFunction([[1.5], [-1.3]], [0.2, 0.2])          # faster growth
PHI_2D = PLConvexFunction([[1.0, 0.2], [-1.0, 0.1], [0.0, 1.0], [0.1, -1.0]],
                          [0.5, 0.5, 0.3, 0.4])
PSI_2D = PLConvexFunction([[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]],
                          [0.1, 0.1, 0.1, 0.1])


class TestConditionCertificate:
    def test_reflexive(self):
        cert = check_condition(PHI_V, PHI_V)
        assert cert.satisfied
        assert cert.worst_violation <= 1e-9
        assert condition_violation(PHI_V, PHI_V, 1.0, 0.0) <= 1e-9

    def test_scale_and_shift_pair_admits_exact_witness(self):
        from epigauss.transform import right_scale

        psi = right_scale(PHI_V, 2.0).shifted(-5.0)
        cert = check_condition(PHI_V, psi)
        assert cert.satisfied
        # the conjugate arithmetic witness (alpha, beta) = (2, 5) passes exactly
        assert condition_violation(PHI_V, psi, 2.0, 5.0) <= 1e-9

    def test_growth_ordering_matters(self):
        # psi must grow at least as fast as phi: the slow/fast pair fails,
        # the reversed pair is certified
        slow = PLConvexFunction([[0.5], [-0.5]], [1.0, 1.0])
        assert check_condition(PHI_V, PSI_STEEP).satisfied
        assert not check_condition(PSI_STEEP, slow).satisfied

    def test_origin_outside_dom_psi_fails(self):
        # psi(o) = +inf means inf psi* = -inf
        psi = PLConvexFunction([[0.0]], [0.0], normals=[[-1.0]], offsets=[-1.0])  # dom {x >= 1}
        cert = check_condition(PHI_V, psi)
        assert not cert.satisfied
        assert cert.inf_psi_star == -math.inf


class TestNumericQuotients:
    def test_identity_element_gives_zero(self):
        rep = delta_gamma_numeric(PHI_V, pl_point_indicator([0.0]), cfg=CFG)
        np.testing.assert_allclose(rep.raw_quotients, 0.0, atol=1e-9)

    def test_interval_pair_matches_closed_derivative(self):
        # d/dt gamma_1([-1 - t, 1 + t]) / 2 at 0+ in closed form
        ind = pl_box_indicator([-1.0], [1.0])
        rep = delta_gamma_numeric(ind, ind, cfg=CFG)
        target = (2 * math.pi) ** -0.5 * math.exp(-0.5)
        assert abs(rep.richardson_value - target) < 1e-6

    def test_monotone_quotients_for_nonnegative_psi(self):
        psi = PLConvexFunction([[1.2], [-1.2]], [0.0, 0.0])  # psi >= 0, psi(o) = 0
        base = epigraph_volume(PHI_V, CFG)
        for t in (0.1, 0.05, 0.0125):
            grown = epigraph_volume(inf_convolution_pl(PHI_V, psi, t), CFG)
            assert grown >= base - 1e-10

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            delta_gamma_numeric(PHI_V, PHI_V, t_schedule=[0.1, 0.2], cfg=CFG)


class TestClosedForm:
    def test_full_domain_boundary_is_zero(self):
        rep = delta_gamma_closed(PHI_V, PSI_STEEP, CFG)
        assert rep.boundary_term == 0.0
        assert rep.closed_form_value == rep.bulk_term

    def test_self_specialization_matches_boundary_route(self):
        rep = delta_gamma_closed(PHI_V, PHI_V, CFG)
        other = delta_gamma_self_boundary(PHI_V, CFG)
        assert abs(rep.closed_form_value - other) < 1e-6

    def test_square_indicator_pair_vs_numeric(self):
        ind = pl_box_indicator([-1, -1], [1, 1])
        closed = delta_gamma_closed(ind, ind, CFG).closed_form_value
        numeric = delta_gamma_numeric(ind, ind, cfg=CFG).richardson_value
        assert abs(closed - numeric) / abs(closed) < 1e-3

    def test_condition_enforced_unless_unchecked(self):
        slow = PLConvexFunction([[0.5], [-0.5]], [1.0, 1.0])
        with pytest.raises(ConditionViolatedError):
            delta_gamma_closed(PSI_STEEP, slow, CFG)

    def test_unchecked_flag_recorded(self):
        rep = delta_gamma_closed(PHI_V, PHI_V, CFG, unchecked=True)
        assert rep.unchecked

    def test_report_invariants(self):
        rep = variation_report(PHI_V, PSI_STEEP, CFG)
        assert rep.closed_form_value == rep.boundary_term + rep.bulk_term
        assert rep.rel_error == rep.abs_error / max(abs(rep.closed_form_value), 1e-300)


class TestSelfVariation:
    def test_zero_function_vanishes(self):
        for f in (PLConvexFunction([[0.0]], [0.0]), PLConvexFunction([[0.0, 0.0]], [0.0])):
            assert abs(delta_gamma_self(f, CFG)) < 1e-12

    def test_quadratic_grid_route_matches_numeric(self):
        f = GridFunction.sample(lambda p: p[:, 0] ** 2 / 2 + 1.0, [-8], [8], [4097],
                                convex=True)
        sv = delta_gamma_self(f, CFG)
        rep = delta_gamma_numeric(f, f, t_schedule=[0.1, 0.05, 0.025, 0.0125], cfg=CFG)
        assert abs(rep.richardson_value - sv) / abs(sv) < 1e-3

    def test_linear_growth_routes_agree(self):
        a = delta_gamma_self(PHI_V, CFG)
        b = delta_gamma_self_boundary(PHI_V, CFG)
        assert abs(a - b) / abs(a) < 1e-10

    def test_five_random_full_domain_functions(self):
        rng = np.random.default_rng(20)
        for k in range(5):
            n = 1 if k < 3 else 2
            s = rng.uniform(0.4, 1.8, (3, n))
            b = rng.uniform(-0.8, 0.8, 3)
            f = PLConvexFunction(np.vstack((s, -s)), np.concatenate((b, b)))
            a = delta_gamma_self(f, CFG)
            c = delta_gamma_self_boundary(f, CFG)
            assert abs(a - c) / max(abs(a), 1e-8) < 1e-4

    def test_interval_indicator_box_domain_case(self):
        ind = pl_box_indicator([-1.0], [1.0])
        a = delta_gamma_self(ind, CFG)
        b = delta_gamma_self_boundary(ind, CFG)
        numeric = delta_gamma_numeric(ind, ind, cfg=CFG).richardson_value
        assert abs(a - b) / abs(a) < 1e-4
        assert abs(b - numeric) / abs(b) < 1e-3


class TestScalingIdentity:
    def test_identity_case_is_exact(self):
        assert scaling_identity_residual(PHI_V, PHI_V, 1.0, 0.0, CFG) == 0.0

    def test_scale_two_shift_one(self):
        assert scaling_identity_residual(PHI_V, PHI_V, 2.0, 1.0, CFG) <= 1e-6

    def test_random_affine_perturbations(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            alpha = rng.uniform(0.5, 2.0)
            beta = rng.uniform(-1.0, 1.0)
            assert scaling_identity_residual(PHI_V, PHI_V, alpha, beta, CFG) <= 1e-6

    def test_2d(self):
        assert scaling_identity_residual(PHI_2D, PHI_2D, 1.3, -0.4, CFG) <= 1e-6


class TestBermanDerivative:
    def test_identity_element(self):
        rep = berman_derivative_residual(PHI_V, pl_point_indicator([0.0]),
                                         [[0.5], [1.3], [-0.4]])
        assert rep.residual < 1e-9
        assert rep.filtered == []

    def test_pl_pair(self):
        rep = berman_derivative_residual(PHI_V, PSI_STEEP, [[0.5], [1.3], [-0.4]])
        assert rep.residual <= 1e-3

    def test_2d_pair(self):
        rep = berman_derivative_residual(PHI_2D, PSI_2D, [[0.5, 0.2], [-0.3, 0.6]])
        assert rep.residual <= 1e-3

    def test_kink_samples_filtered(self):
        rep = berman_derivative_residual(PHI_V, PSI_STEEP, [[0.0], [0.7]])
        assert rep.filtered == [0]
        assert rep.used == 1

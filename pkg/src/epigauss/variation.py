"""First variation of the Gaussian epigraph volume: numeric and closed forms.

The one-sided derivative of t -> volume(phi box (psi t)) at 0+ is estimated
by difference quotients with Richardson extrapolation (first-order error
model), and independently by the closed-form expression

    bulk     c_(n+1) * integral psi*(grad phi) e^(-phi^2/2) e^(-|x|^2/2) dx
    boundary c_(n+1) * integral over the domain boundary of
             h_(dom psi)(nu(x)) e^(-|x|^2/2) * tail-integral of phi(x)

valid when phi grows at least linearly, the origin is interior to its domain,
and the admissibility condition  -inf < inf psi* <= psi* <= alpha phi* + beta
holds for some alpha > 0, beta.  Both sides are exposed so they can audit one
another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _geometry as geom
from .convex_core import (
    GridFunction,
    NotDifferentiableError,
    PLConvexFunction,
    eval_function,
    gradient,
    is_coercive,
)
from .gauss_functionals import (
    epigraph_volume,
    gauss_coeff,
    pl_quadrature,
    total_moment_mass,
)
from .numerics import (
    INF,
    SQRT_2PI,
    QuadratureConfig,
    gauss_tail_array,
    pairwise_sum,
)
from .transform import (
    default_conjugate_grid,
    inf_convolution,
    inf_convolution_pl,
    legendre_nd,
    pl_conjugate,
    right_scale,
)

DEFAULT_T_SCHEDULE = tuple(0.1 * 0.5 ** k for k in range(7))


class ConditionViolatedError(ValueError):
    """The admissibility certificate failed; the closed form does not apply."""


@dataclass
class ConditionCertificate:
    """Witness (alpha, beta) for  -inf < inf psi* <= psi* <= alpha phi* + beta."""

    alpha: float
    beta: float
    inf_psi_star: float
    satisfied: bool
    worst_violation: float


@dataclass
class VariationReport:
    """Paired finite-difference and closed-form first-variation values."""

    t_schedule: list = field(default_factory=list)
    raw_quotients: list = field(default_factory=list)
    richardson_value: float | None = None
    closed_form_value: float | None = None
    boundary_term: float | None = None
    bulk_term: float | None = None
    abs_error: float | None = None
    rel_error: float | None = None
    unchecked: bool = False
    clamped_gradient_nodes: int = 0

    def finalize_errors(self):
        if self.richardson_value is not None and self.closed_form_value is not None:
            self.abs_error = abs(self.richardson_value - self.closed_form_value)
            self.rel_error = self.abs_error / max(abs(self.closed_form_value), 1e-300)

    def as_dict(self) -> dict:
        return {
            "t_schedule": list(self.t_schedule),
            "raw_quotients": list(self.raw_quotients),
            "richardson_value": self.richardson_value,
            "closed_form_value": self.closed_form_value,
            "boundary_term": self.boundary_term,
            "bulk_term": self.bulk_term,
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
            "unchecked": self.unchecked,
            "clamped_gradient_nodes": self.clamped_gradient_nodes,
        }


# ---------------------------------------------------------------------------
# Admissibility certificate
# ---------------------------------------------------------------------------


def _conjugate_samples(phi, psi, query_points=None):
    """phi*, psi* evaluated on a shared slope sample (exact for PL inputs)."""
    if isinstance(phi, PLConvexFunction) and isinstance(psi, PLConvexFunction):
        cphi, cpsi = pl_conjugate(phi), pl_conjugate(psi)
        if query_points is None:
            pts = _slope_box_samples(cphi, 65)
        else:
            pts = np.atleast_2d(np.asarray(query_points, dtype=np.float64))
        return pts, cphi(pts), cpsi(pts)
    if isinstance(phi, GridFunction) and isinstance(psi, GridFunction):
        dom = default_conjugate_grid(phi)
        shape = tuple(min(s, 65) for s in phi.shape)
        a = legendre_nd(phi, dom, shape)
        b = legendre_nd(psi, dom, shape)
        axes = a.axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.reshape(-1) for m in mesh])
        return pts, a.values.reshape(-1), b.values.reshape(-1)
    raise TypeError("check_condition needs two PL or two grid functions")


def _slope_box_samples(cphi: PLConvexFunction, per_axis: int) -> np.ndarray:
    if cphi.has_full_domain():
        box = np.vstack((-8.0 * np.ones(cphi.n), 8.0 * np.ones(cphi.n)))
    elif cphi.n == 1:
        lo, hi = cphi.domain_interval()
        box = np.array([[lo], [hi]])
    else:
        from .transform import _domain_vertices_2d

        verts = _domain_vertices_2d(cphi)
        box = np.vstack((verts.min(axis=0), verts.max(axis=0)))
    pad = 0.05 * (box[1] - box[0] + 1.0)
    axes = [np.linspace(box[0][k] - pad[k], box[1][k] + pad[k], per_axis)
            for k in range(cphi.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def condition_violation(phi, psi, alpha: float, beta: float, query_points=None) -> float:
    """Worst psi* - alpha phi* - beta over the sample (inf on domain mismatch)."""
    pts, a, b = _conjugate_samples(phi, psi, query_points)
    fin_a = np.isfinite(a)
    if np.any(fin_a & ~np.isfinite(b)):
        return INF
    sel = fin_a
    if not sel.any():
        return INF
    return float(np.max(b[sel] - alpha * a[sel] - beta))


def check_condition(phi, psi, query_points=None) -> ConditionCertificate:
    """Search (alpha, beta) certifying the admissibility condition.

    beta is set per alpha as the tight majorant max(psi* - alpha phi*) over
    the slope sample; the returned pair minimizes |beta| over a logarithmic
    alpha sweep.  ``satisfied`` additionally requires psi* to be finite
    wherever phi* is, and psi(o) < +inf (equivalently inf psi* > -inf).
    """
    psi_at_o = float(eval_function(psi, np.zeros((1, psi.n)))[0])
    inf_psi_star = -psi_at_o if np.isfinite(psi_at_o) else -INF
    if inf_psi_star == -INF:
        return ConditionCertificate(math.nan, math.nan, inf_psi_star, False, INF)

    pts, a, b = _conjugate_samples(phi, psi, query_points)
    fin_a = np.isfinite(a)
    domain_ok = bool(fin_a.any()) and not np.any(fin_a & ~np.isfinite(b))
    if not domain_ok or inf_psi_star == -INF:
        return ConditionCertificate(math.nan, math.nan, inf_psi_star, False, INF)

    av, bv = a[fin_a], b[fin_a]
    best_alpha, best_beta = None, None
    for alpha in np.logspace(-3, 3, 121):
        beta = float(np.max(bv - alpha * av))
        if best_beta is None or abs(beta) < abs(best_beta) - 1e-12:
            best_alpha, best_beta = float(alpha), beta
    worst = float(np.max(bv - best_alpha * av - best_beta))
    return ConditionCertificate(best_alpha, best_beta, inf_psi_star, True, max(worst, 0.0))


# ---------------------------------------------------------------------------
# Numeric side: difference quotients of the volume along the perturbation
# ---------------------------------------------------------------------------


def _infconv_dispatch(phi, psi, t: float):
    if isinstance(phi, PLConvexFunction) and isinstance(psi, PLConvexFunction):
        return inf_convolution_pl(phi, psi, t)
    if isinstance(phi, GridFunction) and isinstance(psi, GridFunction):
        return inf_convolution(phi, psi, t)
    raise TypeError("need two PL or two grid functions")


def _richardson(ts, qs):
    """Extrapolate quotients to t = 0 assuming a first-order error model."""
    vals = [
        (ts[k] * qs[k + 1] - ts[k + 1] * qs[k]) / (ts[k] - ts[k + 1])
        for k in range(len(ts) - 1)
    ]
    return vals[-1] if vals else qs[-1]


def delta_gamma_numeric(phi, psi, t_schedule=None,
                        cfg: QuadratureConfig | None = None) -> VariationReport:
    """One-sided difference quotients of the epigraph volume, extrapolated to 0+."""
    cfg = cfg or QuadratureConfig()
    ts = list(t_schedule) if t_schedule is not None else list(DEFAULT_T_SCHEDULE)
    if any(t <= 0 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_schedule must be positive decreasing")
    base = epigraph_volume(phi, cfg)
    quotients = []
    for t in ts:
        chi = _infconv_dispatch(phi, psi, t)
        quotients.append((epigraph_volume(chi, cfg) - base) / t)
    report = VariationReport(t_schedule=ts, raw_quotients=quotients,
                             richardson_value=_richardson(ts, quotients))
    return report


# ---------------------------------------------------------------------------
# Closed-form side
# ---------------------------------------------------------------------------


def _support_of_domain(psi, direction: np.ndarray) -> float:
    """Support function of the effective domain of psi in one direction."""
    if isinstance(psi, PLConvexFunction):
        if psi.has_full_domain():
            return INF
        if psi.n == 1:
            lo, hi = psi.domain_interval()
            return hi * direction[0] if direction[0] > 0 else lo * direction[0]
        from .transform import _domain_vertices_2d

        verts = _domain_vertices_2d(psi)
        return float((verts @ direction).max())
    # grid function: effective domain inside its box; support of the box
    lo, hi = psi.domain.lo, psi.domain.hi
    return float(np.sum(np.where(direction > 0, direction * hi, direction * lo)))


def _boundary_term(phi, psi, cfg, integrand_weight) -> float:
    """Boundary integral with per-point weight(x, nu) supplied by the caller."""
    coeff = (2.0 * math.pi) ** (-phi.n / 2.0)  # c_(n+1) * sqrt(2 pi)
    if isinstance(phi, PLConvexFunction):
        if phi.has_full_domain():
            return 0.0
        if phi.n == 1:
            lo, hi = phi.domain_interval()
            total = 0.0
            for point, nrm in ((hi, np.array([1.0])), (lo, np.array([-1.0]))):
                if not np.isfinite(point):
                    continue
                x = np.array([point])
                val = float(phi.piece_values(x[None, :]).max())
                wgt = integrand_weight(x[None, :], nrm)[0]
                total += coeff * wgt * math.exp(-0.5 * point * point) * float(
                    gauss_tail_array([val])[0])
            return total
        verts, artificial = phi.domain_polygon(cfg.truncation_radius)
        if len(verts) < 3:
            return 0.0
        parts = []
        for p, q, nrm in geom.polygon_boundary_edges(verts, artificial):
            nodes, w = geom.edge_quadrature(p, q, order=20, max_len=0.5)
            vals = phi.piece_values(nodes).max(axis=1)
            wgt = integrand_weight(nodes, nrm)
            dens = np.exp(-0.5 * np.einsum("ij,ij->i", nodes, nodes)) * gauss_tail_array(vals)
            parts.append(coeff * pairwise_sum(wgt * dens * w))
        return pairwise_sum(parts) if parts else 0.0
    # grid function: boundary of the sample box (requires a fully finite grid)
    if not np.isfinite(phi.values).all():
        raise NotImplementedError(
            "closed-form boundary terms for grids with interior +inf are not supported; "
            "use the exact PL representation")
    if phi.n == 1:
        total = 0.0
        for point, nrm in ((phi.domain.hi[0], np.array([1.0])),
                           (phi.domain.lo[0], np.array([-1.0]))):
            val = float(eval_function(phi, np.array([[point]]))[0])
            wgt = integrand_weight(np.array([[point]]), nrm)[0]
            total += coeff * wgt * math.exp(-0.5 * point * point) * float(
                gauss_tail_array([val])[0])
        return total
    box = geom.box_polygon(1.0)
    lo, hi = phi.domain.lo, phi.domain.hi
    verts = np.column_stack((np.where(box[:, 0] > 0, hi[0], lo[0]),
                             np.where(box[:, 1] > 0, hi[1], lo[1])))
    parts = []
    for p, q, nrm in geom.polygon_boundary_edges(verts):
        nodes, w = geom.edge_quadrature(p, q, order=20, max_len=0.5)
        vals = eval_function(phi, nodes)
        wgt = integrand_weight(nodes, nrm)
        dens = np.exp(-0.5 * np.einsum("ij,ij->i", nodes, nodes)) * gauss_tail_array(vals)
        parts.append(coeff * pairwise_sum(wgt * dens * w))
    return pairwise_sum(parts) if parts else 0.0


def _bulk_term(phi, star_evaluator, cfg) -> tuple[float, int]:
    """c_(n+1) * integral star(grad phi) e^(-phi^2/2) e^(-|x|^2/2) dx.

    Returns the value and the count of gradient nodes clamped into the
    conjugate grid (always 0 on the exact PL path).
    """
    coeff = gauss_coeff(phi.n)
    if isinstance(phi, PLConvexFunction):
        star_at = star_evaluator(phi.slopes)
        if not np.all(np.isfinite(star_at)):
            raise ConditionViolatedError(
                "psi* is infinite at a gradient value of phi; bulk integral diverges")
        q = pl_quadrature(phi, cfg)
        dens = np.exp(-0.5 * q.values ** 2) * np.exp(
            -0.5 * np.einsum("ij,ij->i", q.points, q.points))
        return coeff * pairwise_sum(star_at[q.piece_id] * dens * q.weights), 0
    from .gauss_functionals import _grid_density

    pts, grads, masses = _grid_density(phi)
    star_at = star_evaluator(grads)
    clamped = int(np.sum(~np.isfinite(star_at)))
    star_at = np.where(np.isfinite(star_at), star_at, 0.0)
    return pairwise_sum(star_at * masses), clamped


def _make_star_evaluator(psi, cfg):
    """Evaluator of psi* (exact for PL; interpolated conjugate grid otherwise)."""
    if isinstance(psi, PLConvexFunction):
        cpsi = pl_conjugate(psi)
        return lambda pts: cpsi(pts)
    dom = default_conjugate_grid(psi)
    conj = legendre_nd(psi, dom, psi.shape)

    def evaluator(pts):
        pts = np.atleast_2d(pts)
        clip = np.clip(pts, dom.lo[None, :] + 1e-12, dom.hi[None, :] - 1e-12)
        vals = eval_function(conj, clip)
        vals = np.where(np.all(np.abs(clip - pts) < 1e-9, axis=1), vals, INF)
        return vals

    return evaluator


def delta_gamma_closed(phi, psi, cfg: QuadratureConfig | None = None,
                       unchecked: bool = False,
                       certificate: ConditionCertificate | None = None) -> VariationReport:
    """Closed-form first variation (boundary + bulk terms).

    Requires linear growth of phi, the origin interior to its domain, and a
    satisfied admissibility certificate; pass ``unchecked=True`` to skip the
    certificate (recorded in the report).
    """
    cfg = cfg or QuadratureConfig()
    if isinstance(phi, PLConvexFunction):
        if not is_coercive(phi):
            raise ConditionViolatedError("phi must grow at least linearly")
        if phi.n == 1:
            lo, hi = phi.domain_interval()
            if not (lo < 0.0 < hi):
                raise ConditionViolatedError("origin must be interior to the domain of phi")
        elif not phi.has_full_domain():
            verts, _ = phi.domain_polygon(cfg.truncation_radius)
            normals, offsets = geom.polygon_halfspaces(verts)
            if not np.all(offsets > 1e-12):
                raise ConditionViolatedError("origin must be interior to the domain of phi")
    if not unchecked:
        cert = certificate or check_condition(phi, psi)
        if not cert.satisfied:
            raise ConditionViolatedError(
                "admissibility condition not satisfied (no finite alpha, beta certificate)")
    boundary = _boundary_term(
        phi, psi, cfg,
        lambda pts, nrm: np.full(len(np.atleast_2d(pts)), _support_of_domain(psi, nrm)),
    )
    bulk, clamped = _bulk_term(phi, _make_star_evaluator(psi, cfg), cfg)
    report = VariationReport(
        closed_form_value=boundary + bulk, boundary_term=boundary, bulk_term=bulk,
        unchecked=unchecked, clamped_gradient_nodes=clamped,
    )
    return report


def variation_report(phi, psi, cfg: QuadratureConfig | None = None,
                     t_schedule=None, unchecked: bool = False) -> VariationReport:
    """Certificate + numeric quotients + closed form in one report."""
    cfg = cfg or QuadratureConfig()
    closed = delta_gamma_closed(phi, psi, cfg, unchecked=unchecked)
    numeric = delta_gamma_numeric(phi, psi, t_schedule, cfg)
    closed.t_schedule = numeric.t_schedule
    closed.raw_quotients = numeric.raw_quotients
    closed.richardson_value = numeric.richardson_value
    closed.finalize_errors()
    return closed


# ---------------------------------------------------------------------------
# Self-variation formulas (two independent routes)
# ---------------------------------------------------------------------------


def _phi_exp_density(vals: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vals)
    fin = np.isfinite(vals)
    out[fin] = vals[fin] * np.exp(-0.5 * vals[fin] ** 2)
    return out


def delta_gamma_self(phi, cfg: QuadratureConfig | None = None) -> float:
    """Self variation via the scaling route:

    n * volume(phi) - c_(n+1) * ( integral |x|^2 e^(-|x|^2/2) tail-int(phi) dx
                                 + integral phi e^(-|x|^2/2) e^(-phi^2/2) dx ).
    """
    cfg = cfg or QuadratureConfig()
    n = phi.n
    coeff = gauss_coeff(n)
    vol = epigraph_volume(phi, cfg)
    if isinstance(phi, PLConvexFunction) and n <= 2:
        q = pl_quadrature(phi, cfg)
        r2 = np.einsum("ij,ij->i", q.points, q.points)
        gx = np.exp(-0.5 * r2)
        i1 = SQRT_2PI * pairwise_sum(r2 * gx * gauss_tail_array(q.values) * q.weights)
        i2 = pairwise_sum(_phi_exp_density(q.values) * gx * q.weights)
        return n * vol - coeff * (i1 + i2)
    from .numerics import box_integral

    def integrand(pts):
        vals = eval_function(phi, pts)
        r2 = np.einsum("ij,ij->i", pts, pts)
        gx = np.exp(-0.5 * r2)
        return (SQRT_2PI * r2 * gauss_tail_array(vals) + _phi_exp_density(vals)) * gx

    return n * vol - coeff * box_integral(integrand, n, cfg)


def delta_gamma_self_boundary(phi, cfg: QuadratureConfig | None = None) -> float:
    """Self variation via the divergence route:

    boundary integral of <x, nu(x)> e^(-|x|^2/2) tail-int(phi)
    plus bulk integral of phi*(grad phi) e^(-phi^2/2) e^(-|x|^2/2).
    """
    cfg = cfg or QuadratureConfig()
    boundary = _boundary_term(
        phi, phi, cfg,
        lambda pts, nrm: np.atleast_2d(pts) @ nrm,
    )
    bulk, _ = _bulk_term(phi, _make_star_evaluator(phi, cfg), cfg)
    return boundary + bulk


def scaling_identity_residual(phi, psi, alpha: float, beta: float,
                              cfg: QuadratureConfig | None = None) -> float:
    """Residual of the affine-perturbation identity.

    Compares the closed form at psi~ = (psi alpha) - beta against
    alpha * closed(phi, psi) + beta * c_(n+1) * integral e^(-phi^2/2) e^(-|x|^2/2),
    with the conjugate of psi~ recomputed from its own pieces.
    """
    cfg = cfg or QuadratureConfig()
    psi_tilde = right_scale(psi, alpha).shifted(-beta) if isinstance(psi, PLConvexFunction) \
        else _shift_grid(right_scale(psi, alpha), -beta)
    lhs = delta_gamma_closed(phi, psi_tilde, cfg).closed_form_value
    base = delta_gamma_closed(phi, psi, cfg).closed_form_value
    mass = total_moment_mass(phi, cfg)
    return abs(lhs - alpha * base - beta * mass)


def _shift_grid(f: GridFunction, delta: float) -> GridFunction:
    return GridFunction(f.domain, f.values + delta, convex=f.convex)


# ---------------------------------------------------------------------------
# Pointwise derivative of the perturbed function
# ---------------------------------------------------------------------------


@dataclass
class BermanReport:
    """Worst pointwise derivative residual and the filtered sample indices."""

    residual: float
    used: int
    filtered: list


def _pl_gradient_at(phi: PLConvexFunction, x: np.ndarray, tol: float = 1e-10):
    vals = phi.piece_values(x[None, :])[0]
    order = np.argsort(vals)
    if len(vals) > 1 and vals[order[-1]] - vals[order[-2]] <= tol * (1.0 + abs(vals[order[-1]])):
        distinct = not np.allclose(phi.slopes[order[-1]], phi.slopes[order[-2]], atol=1e-12)
        if distinct:
            raise NotDifferentiableError("piece tie at the sample point")
    return phi.slopes[order[-1]]


def berman_derivative_residual(phi, psi, x_samples, t_schedule=None,
                               cfg: QuadratureConfig | None = None) -> BermanReport:
    """Residual of  d/dt (phi box (psi t))(x) at 0+  against  -psi*(grad phi(x)).

    Samples where phi is not differentiable are filtered and reported.
    """
    ts = list(t_schedule) if t_schedule is not None else list(DEFAULT_T_SCHEDULE)
    xs = np.atleast_2d(np.asarray(x_samples, dtype=np.float64))
    star = _make_star_evaluator(psi, cfg or QuadratureConfig())
    chis = [_infconv_dispatch(phi, psi, t) for t in ts]
    base = eval_function(phi, xs)
    worst, used, filtered = 0.0, 0, []
    for i, x in enumerate(xs):
        try:
            if isinstance(phi, PLConvexFunction):
                g = _pl_gradient_at(phi, x)
            else:
                idx = np.round((x - phi.domain.lo) / phi.spacings()).astype(int)
                g = gradient(phi, idx)
        except NotDifferentiableError:
            filtered.append(i)
            continue
        target = -float(star(g[None, :])[0])
        qs = [(float(eval_function(chi, x[None, :])[0]) - base[i]) / t
              for chi, t in zip(chis, ts)]
        worst = max(worst, abs(_richardson(ts, qs) - target))
        used += 1
    return BermanReport(residual=worst, used=used, filtered=filtered)

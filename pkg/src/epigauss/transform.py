"""Legendre-Fenchel conjugation and infimal convolution.

Grid functions go through the factorized discrete transform (1-D conjugate
sweeps applied per axis), which matches the brute-force supremum exactly.
Piecewise-linear functions go through an exact polyhedral route: conjugates of
max-of-affine data are lower envelopes of the lifted slope points, conjugates
of functions on bounded domains are maxima over the subdivision vertices, and
the infimal convolution is recovered from the identity
``phi box (psi t) = (phi* + t psi*)*``.
"""

from __future__ import annotations

import numpy as np

from . import _geometry as geom
from .convex_core import (
    BoxDomain,
    DegenerateInputError,
    GridFunction,
    PLConvexFunction,
    lower_convex_envelope,
    pl_point_indicator,
)
from .numerics import INF, UnsupportedDimensionError, as_extreal_array


class ImproperFunctionError(ValueError):
    """An operation produced (or received) a function with empty domain."""


# ---------------------------------------------------------------------------
# Fast discrete transform
# ---------------------------------------------------------------------------


def _lower_hull_indices(xs: np.ndarray, vs: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (xs[i2] - xs[i1]) * (vs[i] - vs[i1]) - (vs[i2] - vs[i1]) * (xs[i] - xs[i1])
            if cross <= 0.0:  # collinear ties keep the earlier point, drop the later
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def llt_1d(x, v, y) -> np.ndarray:
    """Conjugate of sampled data: max_i(x_i * y_j - v_i) for every query slope.

    ``x`` must be strictly increasing and ``y`` nondecreasing; +inf sample
    values are skipped (at least one must be finite).  The lower convex hull
    of the finite samples is extracted first and queries are then merged
    against the hull slopes, so the cost is linear in samples plus queries up
    to the sortedness checks; the result equals the dense maximum exactly.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    v = as_extreal_array(v).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != v.size:
        raise ValueError("x and v must have equal length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("sample abscissae must be strictly increasing")
    if np.any(np.diff(y) < 0):
        raise ValueError("query slopes must be sorted")
    finite = np.isfinite(v)
    if not finite.any():
        raise ImproperFunctionError("all sample values are +inf")
    xf, vf = x[finite], v[finite]
    hull = _lower_hull_indices(xf, vf)
    hx, hv = xf[hull], vf[hull]
    if len(hull) == 1:
        return hx[0] * y - hv[0]
    # slope of hull segment k separates the queries maximized at vertex k vs k+1
    seg = np.diff(hv) / np.diff(hx)
    k = np.searchsorted(seg, y, side="left")
    return hx[k] * y - hv[k]


def default_conjugate_grid(f: GridFunction, shape=None, pad: float = 0.1,
                           jump_margin: float = 4.0) -> BoxDomain:
    """Slope box covering the finite-difference slopes of ``f``, padded 10%.

    Axes on which the finiteness region has a boundary (finite values adjacent
    to +inf) get an extra ``jump_margin`` of slope range: the conjugate keeps
    growing there with boundary-supported slopes that finite differences
    cannot see.  Pass an explicit query grid for sharper control.
    """
    lo, hi = [], []
    axes = f.axes()
    for k in range(f.n):
        vals = np.moveaxis(f.values, k, -1)
        h = axes[k][1] - axes[k][0]
        with np.errstate(invalid="ignore"):  # inf - inf in all-inf stretches
            d = np.diff(vals, axis=-1) / h
        jumps = bool(np.isinf(d).any() or (~np.isfinite(vals)).any())
        d = d[np.isfinite(d)]
        if d.size == 0:
            a, b = -1.0, 1.0
        else:
            span = max(float(d.max() - d.min()), 1e-6)
            a = float(d.min()) - pad * span
            b = float(d.max()) + pad * span
        if jumps:
            a -= jump_margin
            b += jump_margin
        lo.append(a)
        hi.append(b)
    return BoxDomain(np.array(lo), np.array(hi))


def legendre_nd(f: GridFunction, out_domain: BoxDomain | None = None,
                out_shape=None) -> GridFunction:
    """Conjugate of a grid function sampled on a query grid (n in {1, 2}).

    Applies :func:`llt_1d` along each axis in sequence; the result equals the
    dense supremum over all grid nodes.
    """
    if f.n not in (1, 2):
        raise UnsupportedDimensionError("legendre_nd supports n in {1, 2}")
    if out_domain is None:
        out_domain = default_conjugate_grid(f)
    if out_shape is None:
        out_shape = f.shape
    out_shape = tuple(int(s) for s in np.atleast_1d(out_shape))
    ys = [np.linspace(out_domain.lo[k], out_domain.hi[k], out_shape[k])
          for k in range(f.n)]
    axes = f.axes()
    if f.n == 1:
        vals = llt_1d(axes[0], f.values, ys[0])
        return GridFunction(out_domain, vals, convex=True)

    m1 = f.shape[0]
    inter = np.full((m1, out_shape[1]), -INF)
    row_ok = np.zeros(m1, dtype=bool)
    for i in range(m1):
        if np.isfinite(f.values[i]).any():
            inter[i] = llt_1d(axes[1], f.values[i], ys[1])
            row_ok[i] = True
    out = np.empty(out_shape)
    neg = np.where(row_ok[:, None], -inter, INF)
    for j in range(out_shape[1]):
        out[:, j] = llt_1d(axes[0], neg[:, j], ys[0])
    return GridFunction(out_domain, out, convex=True)


# ---------------------------------------------------------------------------
# Exact piecewise-linear conjugation
# ---------------------------------------------------------------------------


def conjugate_pl(points, values) -> PLConvexFunction:
    """Conjugate of the discrete data function: pieces (x_i, -v_i) on all of R^n."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 1 and np.asarray(values).size > 1:
        pts = pts.T
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    return PLConvexFunction(pts, -vals)


def _domain_vertices_2d(f: PLConvexFunction) -> np.ndarray:
    """Exact vertices of a bounded 2-d effective domain."""
    normals, offsets = f.normals, f.offsets
    cand = []
    k = len(normals)
    for i in range(k):
        for j in range(i + 1, k):
            p = geom.line_intersection(normals[i], offsets[i], normals[j], offsets[j])
            if p is not None:
                cand.append(p)
    if not cand:
        raise ImproperFunctionError("domain has no vertices")
    cand = np.array(cand)
    scale = 1e-9 * (1.0 + np.abs(offsets))
    ok = np.all(cand @ normals.T <= offsets[None, :] + scale[None, :], axis=1)
    verts = cand[ok]
    if len(verts) == 0:
        raise ImproperFunctionError("empty effective domain")
    return geom.dedupe_points(verts, tol=1e-12)


def pl_subdivision_vertices(f: PLConvexFunction) -> np.ndarray:
    """Vertices of the linearity subdivision of ``f`` over its bounded domain."""
    if f.n == 1:
        lo, hi = f.domain_interval()
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("subdivision vertices need a bounded domain")
        if hi - lo <= 1e-14:
            return np.array([[lo]])
        cells = geom.max_affine_cells_1d(f.slopes[:, 0], f.intercepts, lo, hi)
        pts = sorted({a for _, a, _ in cells} | {b for _, _, b in cells})
        return np.array(pts).reshape(-1, 1)
    if f.n == 2:
        verts = _domain_vertices_2d(f)
        hull = geom.convex_hull_2d(verts)
        if len(hull) == 1:
            return hull
        if len(hull) < 3:
            raise UnsupportedDimensionError("degenerate (segment) domains are not supported")
        cells = geom.max_affine_cells_2d(f.slopes, f.intercepts, hull)
        pts = np.vstack([poly for _, poly in cells]) if cells else hull
        return geom.dedupe_points(pts, tol=1e-11)
    raise UnsupportedDimensionError("subdivision vertices support n in {1, 2}")


def pl_conjugate(f: PLConvexFunction) -> PLConvexFunction:
    """Exact conjugate of a PL convex function (n in {1, 2}).

    Full-domain max-of-affine input yields the lower envelope of the lifted
    slope points (domain: convex hull of the slopes).  Input on a bounded
    domain yields a full-domain max-of-affine function whose pieces sit at the
    subdivision vertices.
    """
    if f.has_full_domain():
        if f.num_pieces == 1:
            return pl_point_indicator(f.slopes[0], -f.intercepts[0])
        return lower_convex_envelope(f.slopes, -f.intercepts)
    verts = pl_subdivision_vertices(f)
    vals = f.piece_values(verts).max(axis=1)
    return PLConvexFunction(verts, -vals)


def _scale_values(f: PLConvexFunction, t: float) -> PLConvexFunction:
    """The function t * f (values scaled, domain unchanged)."""
    return PLConvexFunction(t * f.slopes, t * f.intercepts, f.normals, f.offsets)


def right_scale(f, t: float):
    """(phi t)(x) = t * phi(x / t): exact for PL, node-exact for grids."""
    if not t > 0:
        raise ValueError("right scaling needs t > 0")
    if isinstance(f, PLConvexFunction):
        normals = f.normals
        offsets = None if f.offsets is None else t * f.offsets
        return PLConvexFunction(f.slopes, t * f.intercepts, normals, offsets)
    if isinstance(f, GridFunction):
        dom = BoxDomain(t * f.domain.lo, t * f.domain.hi)
        return GridFunction(dom, t * f.values, convex=f.convex)
    raise TypeError(f"cannot right-scale {type(f).__name__}")


def _raw_max(f: PLConvexFunction, pts: np.ndarray) -> np.ndarray:
    return f.piece_values(pts).max(axis=1)


def _interval_of(f: PLConvexFunction) -> tuple[float, float]:
    if f.has_full_domain():
        return -INF, INF
    return f.domain_interval()


def inf_convolution_pl(phi: PLConvexFunction, psi: PLConvexFunction,
                       t: float = 1.0) -> PLConvexFunction:
    """Exact infimal convolution phi box (psi t) of PL convex functions.

    Routed through conjugates when at least one input has full domain (the
    sum ``phi* + t psi*`` then lives on a bounded slope region whose
    refinement vertices generate the result), and through Minkowski sums
    of epigraph generators when both domains are bounded.
    """
    if not t > 0:
        raise ValueError("inf convolution needs t > 0")
    if phi.n != psi.n:
        raise ValueError("dimension mismatch")
    if phi.n not in (1, 2):
        raise UnsupportedDimensionError("PL inf convolution supports n in {1, 2}")
    if phi.has_full_domain() or psi.has_full_domain():
        return _infconv_conjugate_route(phi, psi, t)
    return _infconv_generator_route(phi, psi, t)


def _infconv_generator_route(phi, psi, t):
    gp = pl_subdivision_vertices(phi)
    gq = pl_subdivision_vertices(psi)
    vp = _raw_max(phi, gp)
    vq = _raw_max(psi, gq)
    pts = (gp[:, None, :] + t * gq[None, :, :]).reshape(-1, phi.n)
    vals = (vp[:, None] + t * vq[None, :]).reshape(-1)
    if phi.n == 1:
        distinct = np.unique(np.round(pts[:, 0], 12)).size
        if distinct < 2:
            return pl_point_indicator(pts[0], vals.min())
        return lower_convex_envelope(pts, vals)
    try:
        return lower_convex_envelope(pts, vals)
    except DegenerateInputError:
        if len(geom.dedupe_points(pts, 1e-11)) == 1:
            return pl_point_indicator(pts[0], float(vals.min()))
        raise


def _infconv_conjugate_route(phi, psi, t):
    cphi = pl_conjugate(phi)
    cpsi = _scale_values(pl_conjugate(psi), t)

    if phi.n == 1:
        lo = max(_interval_of(cphi)[0], _interval_of(cpsi)[0])
        hi = min(_interval_of(cphi)[1], _interval_of(cpsi)[1])
        if hi < lo - 1e-12:
            raise ImproperFunctionError("incompatible recession slopes (empty conjugate overlap)")
        hi = max(hi, lo)
        breaks = {lo, hi}
        for g in (cphi, cpsi):
            for _, a, b in geom.max_affine_cells_1d(g.slopes[:, 0], g.intercepts, lo, hi):
                breaks.add(a)
                breaks.add(b)
        verts = np.array(sorted(breaks)).reshape(-1, 1)
    else:
        polys = []
        for g in (cphi, cpsi):
            if not g.has_full_domain():
                polys.append(geom.convex_hull_2d(_domain_vertices_2d(g)))
        if len(polys) == 2:
            p_region = geom.clip_polygon_polygon(polys[0], polys[1])
        else:
            p_region = polys[0]
        if len(p_region) < 3:
            if len(p_region) == 0:
                raise ImproperFunctionError("incompatible recession slopes (empty conjugate overlap)")
            verts = geom.dedupe_points(p_region, 1e-12)
        else:
            cells_a = geom.max_affine_cells_2d(cphi.slopes, cphi.intercepts, p_region)
            cells_b = geom.max_affine_cells_2d(cpsi.slopes, cpsi.intercepts, p_region)
            pieces = []
            for _, pa in cells_a:
                for _, pb in cells_b:
                    inter = geom.clip_polygon_polygon(pa, pb)
                    if len(inter):
                        pieces.append(inter)
            if not pieces:
                verts = p_region
            else:
                verts = geom.dedupe_points(np.vstack(pieces), 1e-11)

    hvals = _raw_max(cphi, verts) + _raw_max(cpsi, verts)
    return PLConvexFunction(verts, -hvals)


# ---------------------------------------------------------------------------
# Grid infimal convolution through duality
# ---------------------------------------------------------------------------


def inf_convolution(phi: GridFunction, psi: GridFunction, t: float = 1.0,
                    out_domain: BoxDomain | None = None, out_shape=None) -> GridFunction:
    """phi box (psi t) for grid functions via ``(phi* + t psi*)*``.

    Conjugates are sampled on a shared slope grid covering both inputs; the
    direct infimum formula is kept only as a test oracle.
    """
    if not t > 0:
        raise ValueError("inf convolution needs t > 0")
    if phi.n != psi.n:
        raise ValueError("dimension mismatch")
    ga = default_conjugate_grid(phi)
    gb = default_conjugate_grid(psi)
    slope_dom = BoxDomain(np.minimum(ga.lo, gb.lo), np.maximum(ga.hi, gb.hi))
    slope_shape = tuple(max(a, b) for a, b in zip(phi.shape, psi.shape))
    fa = legendre_nd(phi, slope_dom, slope_shape)
    fb = legendre_nd(psi, slope_dom, slope_shape)
    h = fa.values + t * fb.values
    if not np.isfinite(h).any():
        raise ImproperFunctionError("conjugate domains do not overlap")
    if out_domain is None:
        out_domain = BoxDomain(phi.domain.lo + t * psi.domain.lo,
                               phi.domain.hi + t * psi.domain.hi)
    if out_shape is None:
        out_shape = slope_shape
    return legendre_nd(GridFunction(slope_dom, h), out_domain, out_shape)


def inf_convolution_direct(phi: GridFunction, psi: GridFunction, t: float,
                           points) -> np.ndarray:
    """O(N^2) direct infimum inf_y phi(x - y) + t psi(y / t); test oracle only."""
    from .convex_core import eval_function

    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    axes = psi.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    ys = np.column_stack([m.reshape(-1) for m in mesh]) * t
    psi_vals = t * psi.values.reshape(-1)
    out = np.empty(len(pts))
    for i, x in enumerate(pts):
        tot = eval_function(phi, x[None, :] - ys) + psi_vals
        out[i] = tot.min()
    return out

"""Representations of convex functions, discrete measures, and elementary evaluations.

Two function representations are used throughout:

* :class:`GridFunction` -- extended-real samples on a uniform box grid, +inf
  marking the complement of the effective domain (the function is +inf outside
  its box as well).
* :class:`PLConvexFunction` -- exact max-of-finitely-many-affine-pieces form,
  optionally restricted to an intersection of halfspaces.  This is the natural
  output of conjugating discrete data and the representation on which all
  exact (cell-based) integrations operate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _geometry as geom
from .numerics import INF, as_extreal_array

_HS_TOL = 1e-9  # slack for halfspace membership so boundary points evaluate finite


class DegenerateInputError(ValueError):
    """Affinely dependent input where full-dimensional data is required."""


class NotDifferentiableError(ValueError):
    """No finite difference stencil exists at the requested node."""


class MeasureValidationError(ValueError):
    """A raw point/weight list violates a membership condition; see ``reason``."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lo, hi] in R^n."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("BoxDomain requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return self.lo.size

    def origin_interior(self) -> bool:
        return bool(np.all(self.lo < 0.0) and np.all(self.hi > 0.0))


class GridFunction:
    """Extended-real values on a uniform grid over a box; +inf outside the box.

    When ``convex=True`` the samples are audited for midpoint convexity along
    axis-parallel and diagonal grid lines (tolerance 1e-9).  The finiteness
    region must always form a contiguous run along every axis-parallel line.
    """

    def __init__(self, domain: BoxDomain, values, convex: bool = False):
        self.domain = domain
        vals = as_extreal_array(values)
        if vals.ndim != domain.n:
            raise ValueError(f"values must have {domain.n} axes, got {vals.ndim}")
        if any(s < 2 for s in vals.shape):
            raise ValueError("need at least 2 samples per axis")
        self.values = vals
        self.convex = bool(convex)
        if not np.isfinite(vals).any():
            raise ValueError("GridFunction must be proper (some finite value)")
        _check_finite_runs(vals)
        if convex:
            worst = convexity_violation(self)
            if worst > 1e-9:
                raise ValueError(f"convex flag set but midpoint convexity violated by {worst:.3e}")

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axes(self) -> list[np.ndarray]:
        return [
            np.linspace(self.domain.lo[k], self.domain.hi[k], self.shape[k])
            for k in range(self.n)
        ]

    def spacings(self) -> np.ndarray:
        return (self.domain.hi - self.domain.lo) / (np.array(self.shape) - 1)

    def node_point(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        return self.domain.lo + idx * self.spacings()

    @classmethod
    def sample(cls, fn, lo, hi, shape, convex: bool = False) -> "GridFunction":
        """Sample a vectorized callable on the grid (points given as (N, n))."""
        dom = BoxDomain(np.atleast_1d(lo), np.atleast_1d(hi))
        shape = tuple(np.atleast_1d(shape).astype(int))
        axes = [np.linspace(dom.lo[k], dom.hi[k], shape[k]) for k in range(dom.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.reshape(-1) for m in mesh])
        vals = np.asarray(fn(pts), dtype=np.float64).reshape(shape)
        return cls(dom, vals, convex=convex)


def _check_finite_runs(vals: np.ndarray):
    finite = np.isfinite(vals)
    n = vals.ndim
    for axis in range(n):
        f = np.moveaxis(finite, axis, -1).reshape(-1, vals.shape[axis])
        starts = np.argmax(f, axis=1)
        counts = f.sum(axis=1)
        rev = np.argmax(f[:, ::-1], axis=1)
        spans = vals.shape[axis] - rev - starts
        bad = (counts > 0) & (spans != counts)
        if bad.any():
            raise ValueError("finiteness region is not contiguous along an axis line")


def _line_directions(n: int):
    dirs = []
    for d in itertools.product((-1, 0, 1), repeat=n):
        arr = np.array(d)
        if not arr.any():
            continue
        first = arr[np.nonzero(arr)[0][0]]
        if first < 0:
            continue
        dirs.append(arr)
    return dirs


def convexity_violation(f: GridFunction) -> float:
    """Worst midpoint-convexity defect along axis-parallel and diagonal lines.

    Returns max(2 v0 - v- - v+) over finite triples; <= 0 means convex samples.
    """
    worst = -INF
    vals = f.values
    for d in _line_directions(f.n):
        lo_sl, mid_sl, hi_sl = [], [], []
        for k, dk in enumerate(d):
            m = vals.shape[k]
            if dk == 0:
                lo_sl.append(slice(None)), mid_sl.append(slice(None)), hi_sl.append(slice(None))
            elif dk > 0:
                lo_sl.append(slice(0, m - 2)), mid_sl.append(slice(1, m - 1)), hi_sl.append(slice(2, m))
            else:
                lo_sl.append(slice(2, m)), mid_sl.append(slice(1, m - 1)), hi_sl.append(slice(0, m - 2))
        a, b, c = vals[tuple(lo_sl)], vals[tuple(mid_sl)], vals[tuple(hi_sl)]
        ok = np.isfinite(a) & np.isfinite(b) & np.isfinite(c)
        if ok.any():
            defect = 2.0 * b[ok] - a[ok] - c[ok]
            worst = max(worst, float(defect.max()))
    return worst


class PLConvexFunction:
    """max_i(<a_i, x> + b_i) inside an intersection of halfspaces, +inf outside."""

    def __init__(self, slopes, intercepts, normals=None, offsets=None):
        slopes = np.atleast_2d(np.asarray(slopes, dtype=np.float64))
        intercepts = np.atleast_1d(np.asarray(intercepts, dtype=np.float64))
        if len(slopes) != len(intercepts) or len(slopes) == 0:
            raise ValueError("need matching, nonempty slopes and intercepts")
        rows = np.column_stack((slopes, intercepts))
        _, idx = np.unique(rows, axis=0, return_index=True)
        idx = np.sort(idx)
        self.slopes = slopes[idx]
        self.intercepts = intercepts[idx]
        if normals is None:
            self.normals = None
            self.offsets = None
        else:
            self.normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
            self.offsets = np.atleast_1d(np.asarray(offsets, dtype=np.float64))
            if len(self.normals) != len(self.offsets):
                raise ValueError("need matching normals and offsets")

    @property
    def n(self) -> int:
        return self.slopes.shape[1]

    @property
    def num_pieces(self) -> int:
        return len(self.slopes)

    def has_full_domain(self) -> bool:
        return self.normals is None or len(self.normals) == 0

    def inside(self, points: np.ndarray, tol: float = _HS_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.has_full_domain():
            return np.ones(len(pts), dtype=bool)
        slack = self.offsets[None, :] + tol * (1.0 + np.abs(self.offsets))[None, :]
        return np.all(pts @ self.normals.T <= slack, axis=1)

    def piece_values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts @ self.slopes.T + self.intercepts[None, :]

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.n:
            raise ValueError(f"dimension mismatch: function is {self.n}-d, points are {pts.shape[1]}-d")
        vals = self.piece_values(pts).max(axis=1)
        out = np.where(self.inside(pts), vals, INF)
        return out

    def value(self, x) -> float:
        return float(self(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def active_piece(self, points) -> np.ndarray:
        """Index of the max-attaining piece (lowest index on exact ties)."""
        return np.argmax(self.piece_values(points), axis=1)

    def domain_interval(self) -> tuple[float, float]:
        """Effective-domain interval for n = 1 (allows +-inf endpoints)."""
        if self.n != 1:
            raise ValueError("domain_interval is 1-d only")
        lo, hi = -INF, INF
        if not self.has_full_domain():
            for nrm, off in zip(self.normals[:, 0], self.offsets):
                if nrm > 0:
                    hi = min(hi, off / nrm)
                elif nrm < 0:
                    lo = max(lo, off / nrm)
        return lo, hi

    def domain_polygon(self, clip_radius: float):
        """Effective domain as a polygon, clipped to a box (n = 2)."""
        if self.n != 2:
            raise ValueError("domain_polygon is 2-d only")
        if self.has_full_domain():
            return geom.box_polygon(clip_radius), np.ones(4, dtype=bool)
        return geom.halfspace_polygon(self.normals, self.offsets, clip_radius)

    def shifted(self, delta: float) -> "PLConvexFunction":
        """The function plus a constant."""
        return PLConvexFunction(self.slopes, self.intercepts + delta, self.normals, self.offsets)


def pl_point_indicator(point, value: float = 0.0) -> PLConvexFunction:
    """Indicator-type function: ``value`` at one point, +inf elsewhere."""
    p = np.atleast_1d(np.asarray(point, dtype=np.float64))
    n = p.size
    eye = np.eye(n)
    normals = np.vstack((eye, -eye))
    offsets = np.concatenate((p, -p))
    return PLConvexFunction(np.zeros((1, n)), [float(value)], normals, offsets)


def pl_box_indicator(lo, hi, value: float = 0.0) -> PLConvexFunction:
    """Indicator of an axis-aligned box, shifted by ``value``."""
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    n = lo.size
    eye = np.eye(n)
    normals = np.vstack((eye, -eye))
    offsets = np.concatenate((hi, -lo))
    return PLConvexFunction(np.zeros((1, n)), [float(value)], normals, offsets)


def pl_polygon_indicator(verts, value: float = 0.0) -> PLConvexFunction:
    """Indicator of a convex polygon given by its vertices (n = 2)."""
    normals, offsets = geom.polygon_halfspaces(verts)
    return PLConvexFunction(np.zeros((1, 2)), [float(value)], normals, offsets)


# ---------------------------------------------------------------------------
# Evaluation and differentiation
# ---------------------------------------------------------------------------


def eval_function(f, points) -> np.ndarray:
    """Evaluate a GridFunction (multilinear, +inf-propagating) or PL function."""
    if isinstance(f, PLConvexFunction):
        return f(points)
    if isinstance(f, GridFunction):
        return _eval_grid(f, points)
    raise TypeError(f"cannot evaluate {type(f).__name__}")


def _eval_grid(f: GridFunction, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != f.n:
        raise ValueError(f"dimension mismatch: function is {f.n}-d, points are {pts.shape[1]}-d")
    n = f.n
    h = f.spacings()
    rel = (pts - f.domain.lo[None, :]) / h[None, :]
    eps = 1e-12
    inside = np.all((rel >= -eps) & (rel <= np.array(f.shape)[None, :] - 1 + eps), axis=1)
    base = np.clip(np.floor(rel).astype(np.int64), 0, np.array(f.shape) - 2)
    frac = np.clip(rel - base, 0.0, 1.0)
    out = np.zeros(len(pts))
    bad = np.zeros(len(pts), dtype=bool)
    for corner in itertools.product((0, 1), repeat=n):
        idx = tuple(base[:, k] + corner[k] for k in range(n))
        v = f.values[idx]
        w = np.ones(len(pts))
        for k in range(n):
            w = w * (frac[:, k] if corner[k] else 1.0 - frac[:, k])
        contrib = np.where(np.isfinite(v), v * w, 0.0)
        # any +inf stencil corner with positive or zero weight poisons the value
        bad |= ~np.isfinite(v)
        out += contrib
    out = np.where(bad | ~inside, INF, out)
    return out


def gradient(f: GridFunction, idx) -> np.ndarray:
    """Finite-difference gradient at a grid node (central; one-sided at edges).

    Raises :class:`NotDifferentiableError` when an axis has no finite stencil.
    """
    idx = tuple(int(i) for i in np.atleast_1d(idx))
    vals = f.values
    if not np.isfinite(vals[idx]):
        raise NotDifferentiableError(f"node {idx} is not in the effective domain")
    h = f.spacings()
    g = np.zeros(f.n)
    for k in range(f.n):
        lo = list(idx)
        hi = list(idx)
        lo[k] -= 1
        hi[k] += 1
        has_lo = lo[k] >= 0 and np.isfinite(vals[tuple(lo)])
        has_hi = hi[k] < f.shape[k] and np.isfinite(vals[tuple(hi)])
        if has_lo and has_hi:
            g[k] = (vals[tuple(hi)] - vals[tuple(lo)]) / (2.0 * h[k])
        elif has_hi:
            g[k] = (vals[tuple(hi)] - vals[idx]) / h[k]
        elif has_lo:
            g[k] = (vals[idx] - vals[tuple(lo)]) / h[k]
        else:
            raise NotDifferentiableError(f"no finite stencil along axis {k} at node {idx}")
    return g


def support_function(points, y) -> float:
    """sup over the point list of <x, y> (support function of the convex hull)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(pts) == 0:
        raise ValueError("support_function needs a nonempty point list")
    return float((pts @ np.asarray(y, dtype=np.float64)).max())


def fenchel_young_residual(f: GridFunction, f_star, idx) -> float:
    """|phi*(grad phi(x)) + phi(x) - <x, grad phi(x)>| at a grid node.

    ``f_star`` is any evaluator of the conjugate (exact PL or interpolating).
    """
    g = gradient(f, idx)
    x = f.node_point(idx)
    val = float(f.values[tuple(int(i) for i in np.atleast_1d(idx))])
    if isinstance(f_star, PLConvexFunction):
        star = f_star.value(g)
    else:
        star = float(f_star(g))
    return abs(star + val - float(x @ g))


# ---------------------------------------------------------------------------
# Lower convex envelope
# ---------------------------------------------------------------------------


def lower_convex_envelope(points, values) -> PLConvexFunction:
    """Greatest convex function below the samples on conv{x_i} (n in {1, 2}).

    The envelope is computed from the lower hull of the lifted points and
    returned as a PL function whose pieces are the facet planes and whose
    domain is the convex hull of the sample sites.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 1 and pts.shape[1] > 2:
        pts = pts.T  # accept a column of 1-d samples
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(pts) != len(vals):
        raise ValueError("points and values must have equal length")
    n = pts.shape[1]
    if n == 1:
        return _envelope_1d(pts[:, 0], vals)
    if n == 2:
        return _envelope_2d(pts, vals)
    raise DegenerateInputError("lower_convex_envelope supports n in {1, 2}")


def _envelope_1d(xs, vs) -> PLConvexFunction:
    order = np.argsort(xs, kind="stable")
    xs, vs = xs[order], vs[order]
    keep_x, keep_v = [], []
    for x, v in zip(xs, vs):
        if keep_x and abs(x - keep_x[-1]) <= 1e-14 * (1.0 + abs(x)):
            keep_v[-1] = min(keep_v[-1], v)
        else:
            keep_x.append(x)
            keep_v.append(v)
    xs, vs = np.array(keep_x), np.array(keep_v)
    if len(xs) < 2:
        raise DegenerateInputError("need >= 2 distinct abscissae in 1-d")
    hull = []
    for x, v in zip(xs, vs):
        while len(hull) >= 2:
            (x1, v1), (x2, v2) = hull[-2], hull[-1]
            if (x2 - x1) * (v - v1) - (v2 - v1) * (x - x1) <= 0.0:
                hull.pop()
            else:
                break
        hull.append((x, v))
    slopes, intercepts = [], []
    for (x1, v1), (x2, v2) in zip(hull[:-1], hull[1:]):
        s = (v2 - v1) / (x2 - x1)
        slopes.append([s])
        intercepts.append(v1 - s * x1)
    if not slopes:  # single hull vertex cannot happen after the distinct check
        raise DegenerateInputError("degenerate 1-d envelope")
    normals = np.array([[1.0], [-1.0]])
    offsets = np.array([hull[-1][0], -hull[0][0]])
    return PLConvexFunction(slopes, intercepts, normals, offsets)


def _envelope_2d(pts, vals) -> PLConvexFunction:
    from scipy.spatial import ConvexHull, QhullError

    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-10) < 2:
        raise DegenerateInputError("sample sites are affinely dependent")
    dom = geom.convex_hull_2d(pts)
    normals, offsets = geom.polygon_halfspaces(dom)

    # coplanar lifted points: the envelope is a single affine function
    A = np.column_stack((pts, np.ones(len(pts))))
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = np.abs(A @ coef - vals)
    scale = 1.0 + np.abs(vals).max()
    if resid.max() <= 1e-12 * scale:
        return PLConvexFunction(coef[:2][None, :], [coef[2]], normals, offsets)

    lifted = np.column_stack((pts, vals))
    try:
        hull = ConvexHull(lifted)
    except QhullError as exc:  # pragma: no cover - guarded by the checks above
        raise DegenerateInputError(f"degenerate lifted hull: {exc}") from exc
    slopes, intercepts = [], []
    for eq in hull.equations:
        nx, ny, nz, off = eq
        if nz < -1e-12:
            slopes.append([-nx / nz, -ny / nz])
            intercepts.append(-off / nz)
    if not slopes:
        raise DegenerateInputError("no lower facets found")
    return PLConvexFunction(np.array(slopes), np.array(intercepts), normals, offsets)


def is_coercive(f: PLConvexFunction) -> bool:
    """Membership in the linear-growth class: liminf phi(x)/|x| > 0 at infinity.

    For a bounded effective domain this is automatic; for a full-domain
    max-of-affine function it is equivalent to the origin lying in the
    interior of the convex hull of the slopes.
    """
    if not f.has_full_domain():
        if f.n == 1:
            lo, hi = f.domain_interval()
            return np.isfinite(lo) and np.isfinite(hi)
        return origin_in_interior(f.normals)  # normals positively span => bounded
    return origin_in_interior(f.slopes)


def origin_in_interior(points: np.ndarray, tol: float = 1e-12) -> bool:
    """Is the origin in the interior of conv{points}?"""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = pts.shape[1]
    if n == 1:
        return pts.min() < -tol and pts.max() > tol
    if n == 2:
        hull = geom.convex_hull_2d(pts)
        if len(hull) < 3:
            return False
        normals, offsets = geom.polygon_halfspaces(hull)
        return bool(np.all(offsets > tol))
    # higher dimensions: origin is interior iff no direction u != 0 has
    # max_i <a_i, u> <= 0; scan each face of the sup-norm sphere with an LP
    from scipy.optimize import linprog

    for k in range(n):
        for sgn in (1.0, -1.0):
            # variables: u (free within [-1,1], u_k fixed to sgn) and s
            c = np.zeros(n + 1)
            c[-1] = 1.0
            a_ub = np.column_stack((pts, -np.ones(len(pts))))
            b_ub = np.zeros(len(pts))
            bounds = [(-1, 1)] * n + [(None, None)]
            bounds[k] = (sgn, sgn)
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status == 0 and res.fun <= tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Discrete measures
# ---------------------------------------------------------------------------


@dataclass
class DiscreteMeasure:
    """Finitely-supported weighted point set on R^n."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if len(self.points) != len(self.weights) or len(self.points) == 0:
            raise ValueError("need matching, nonempty points and weights")
        if np.isnan(self.points).any() or np.isnan(self.weights).any():
            raise ValueError("NaN in measure data")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass
class ValidatedMeasure(DiscreteMeasure):
    """Even, spanning measure in canonical pair order.

    Points are stored pair-major (x_p, -x_p, x_q, -x_q, ..., possibly a final
    origin atom); ``pair_members`` lists the index pair of each +- pair (equal
    indices for an origin atom) and ``pair_weights`` the total weight per pair.
    """

    pair_members: list = field(default_factory=list)

    @property
    def num_pairs(self) -> int:
        return len(self.pair_members)

    @property
    def pair_points(self) -> np.ndarray:
        return np.array([self.points[i] for i, _ in self.pair_members])

    @property
    def pair_weights(self) -> np.ndarray:
        return np.array(
            [self.weights[i] if i == j else self.weights[i] + self.weights[j]
             for i, j in self.pair_members]
        )


def validate_measure(mu: DiscreteMeasure, pair_tol: float = 1e-12,
                     rank_tol: float = 1e-10) -> ValidatedMeasure:
    """Check the membership conditions for the solver's input class.

    Raises :class:`MeasureValidationError` with reason ``nonpositive_weight``,
    ``not_even`` (points must pair as x, -x with equal weights; an origin atom
    is its own pair), or ``lower_dimensional`` (the support must span R^n).
    Returns the canonicalized, pair-major measure.
    """
    pts, w = mu.points, mu.weights
    if np.any(w <= 0):
        bad = int(np.argmax(w <= 0))
        raise MeasureValidationError(
            "nonpositive_weight", f"weight {w[bad]} at index {bad} is not positive",
        )
    m, n = pts.shape
    used = np.zeros(m, dtype=bool)
    new_pts, new_w, members = [], [], []
    origin = None
    for i in range(m):
        if used[i]:
            continue
        used[i] = True
        if np.all(np.abs(pts[i]) <= pair_tol):
            if origin is not None:
                raise MeasureValidationError("not_even", "multiple atoms at the origin")
            origin = (pts[i], w[i])
            continue
        partner = -1
        for j in range(i + 1, m):
            if used[j]:
                continue
            if np.all(np.abs(pts[j] + pts[i]) <= pair_tol) and abs(w[j] - w[i]) <= pair_tol:
                partner = j
                break
        if partner < 0:
            raise MeasureValidationError(
                "not_even", f"point index {i} at {pts[i]} has no -x partner of equal weight",
            )
        used[partner] = True
        rep, neg = pts[i], pts[partner]
        # canonical representative: first nonzero coordinate positive
        nz = np.nonzero(np.abs(rep) > pair_tol)[0][0]
        if rep[nz] < 0:
            rep, neg = neg, rep
        k = len(new_pts)
        new_pts.extend([rep, neg])
        new_w.extend([w[i], w[partner]])
        members.append((k, k + 1))
    if origin is not None:
        members.append((len(new_pts), len(new_pts)))
        new_pts.append(origin[0])
        new_w.append(origin[1])
    pts_arr = np.array(new_pts)
    sv = np.linalg.svd(pts_arr, compute_uv=False)
    if len(sv) < n or sv[-1] <= rank_tol * sv[0]:
        raise MeasureValidationError(
            "lower_dimensional", "support does not span the ambient space",
        )
    return ValidatedMeasure(pts_arr, np.array(new_w), pair_members=members)


# ---------------------------------------------------------------------------
# Weight descriptors for the generalized epigraph volumes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightPair:
    """Spatial weight omega on R^n and height weight eta on R.

    omega: ``gaussian`` ((2 pi)^(-n/2) e^(-|x|^2/2)), ``unit`` (1), or
    ``power`` (|x|^(q-n), requires ``q``).  eta: ``gaussian``
    ((2 pi)^(-1/2) e^(-s^2/2)), ``exponential`` (e^(-s)), or ``alpha_concave``
    ((1 - alpha s)^(1/alpha - 1) with -1/n < alpha < 0).
    """

    omega: str = "gaussian"
    eta: str = "gaussian"
    q: float | None = None
    alpha: float | None = None

    def validate(self, n: int):
        if self.omega not in ("gaussian", "unit", "power"):
            raise ValueError(f"unknown omega family {self.omega!r}")
        if self.eta not in ("gaussian", "exponential", "alpha_concave"):
            raise ValueError(f"unknown eta family {self.eta!r}")
        if self.omega == "power" and self.q is None:
            raise ValueError("power omega needs q")
        if self.eta == "alpha_concave":
            if self.alpha is None or not (-1.0 / n < self.alpha < 0.0):
                raise ValueError("alpha_concave needs -1/n < alpha < 0")

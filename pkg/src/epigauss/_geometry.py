"""Planar polyhedral helpers: hulls, halfspace clipping, cells, triangle rules.

Everything here is 2-D (the 1-D analogues are simple enough to live next to
their callers).  Polygons are (k, 2) arrays of counterclockwise vertices;
halfspaces are pairs (normal, offset) meaning ``<normal, x> <= offset``.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import pairwise_sum, _leggauss


def convex_hull_2d(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Counterclockwise convex hull via monotone chain; collinear points dropped."""
    pts = np.asarray(points, dtype=np.float64)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > tol, axis=1)
    pts = pts[keep]
    if len(pts) == 1:
        return pts.copy()
    if len(pts) == 2:
        return pts.copy()

    def chain(seq):
        hull = []
        for p in seq:
            while len(hull) >= 2:
                o, a = hull[-2], hull[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= tol:
                    hull.pop()
                else:
                    break
            hull.append(p)
        return hull

    lower = chain(pts)
    upper = chain(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(verts: np.ndarray) -> float:
    """Signed area (positive for counterclockwise orientation)."""
    v = np.asarray(verts, dtype=np.float64)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def ensure_ccw(verts: np.ndarray) -> np.ndarray:
    return verts if polygon_area(verts) >= 0.0 else verts[::-1].copy()


def box_polygon(radius: float) -> np.ndarray:
    r = float(radius)
    return np.array([[-r, -r], [r, -r], [r, r], [-r, r]])


def clip_polygon_halfspace(verts, normal, offset, tol: float = 1e-12) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by ``<normal, x> <= offset``."""
    v = np.asarray(verts, dtype=np.float64)
    if len(v) == 0:
        return v
    d = v @ np.asarray(normal, dtype=np.float64) - float(offset)
    if np.all(d <= tol):
        return v
    out = []
    m = len(v)
    for i in range(m):
        p, q = v[i], v[(i + 1) % m]
        dp, dq = d[i], d[(i + 1) % m]
        pin, qin = dp <= tol, dq <= tol
        if pin:
            out.append(p)
            if not qin:
                s = dp / (dp - dq)
                out.append(p + s * (q - p))
        elif qin:
            s = dp / (dp - dq)
            out.append(p + s * (q - p))
    if not out:
        return np.empty((0, 2))
    arr = np.array(out)
    # drop consecutive duplicates introduced by clipping through vertices
    keep = np.ones(len(arr), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(arr, axis=0)) > tol, axis=1)
    if len(arr) > 1 and np.all(np.abs(arr[0] - arr[-1]) <= tol):
        keep[-1] = False
    arr = arr[keep]
    return arr if len(arr) >= 3 else np.empty((0, 2))


def clip_polygon_polygon(a_verts, b_verts, tol: float = 1e-12) -> np.ndarray:
    """Intersection of two convex polygons (clip ``a`` against ``b``'s edges)."""
    res = np.asarray(a_verts, dtype=np.float64)
    normals, offsets = polygon_halfspaces(b_verts)
    for nrm, off in zip(normals, offsets):
        res = clip_polygon_halfspace(res, nrm, off, tol)
        if len(res) == 0:
            return res
    return res


def polygon_halfspaces(verts) -> tuple[np.ndarray, np.ndarray]:
    """Outward halfspaces of a counterclockwise convex polygon."""
    v = ensure_ccw(np.asarray(verts, dtype=np.float64))
    d = np.roll(v, -1, axis=0) - v
    normals = np.column_stack((d[:, 1], -d[:, 0]))
    lens = np.linalg.norm(normals, axis=1)
    good = lens > 1e-300
    normals = normals[good] / lens[good, None]
    offsets = np.einsum("ij,ij->i", normals, v[good])
    return normals, offsets


def halfspace_polygon(normals, offsets, clip_radius: float, tol: float = 1e-12):
    """Vertices of the (clipped) intersection of halfspaces.

    Returns ``(verts, artificial)`` where ``artificial[i]`` is True when the
    edge starting at vertex ``i`` comes from the clip box rather than one of
    the supplied halfspaces.
    """
    verts = box_polygon(clip_radius)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 2)
    offsets = np.asarray(offsets, dtype=np.float64).reshape(-1)
    for nrm, off in zip(normals, offsets):
        verts = clip_polygon_halfspace(verts, nrm, off, tol)
        if len(verts) == 0:
            return verts, np.zeros(0, dtype=bool)
    mids = 0.5 * (verts + np.roll(verts, -1, axis=0))
    artificial = np.ones(len(verts), dtype=bool)
    if len(normals):
        resid = np.abs(mids @ normals.T - offsets[None, :])
        scale = 1e-9 * (1.0 + np.abs(offsets))[None, :]
        artificial = ~np.any(resid <= scale, axis=1)
    return verts, artificial


def max_affine_cells_2d(slopes, intercepts, domain_verts, area_tol: float = 1e-14):
    """Cells where each affine piece attains the max of a max-of-affine function.

    Returns a list of ``(piece_index, polygon)`` covering ``domain_verts`` up
    to null sets; pieces never active on a full-dimensional cell are omitted.
    """
    slopes = np.asarray(slopes, dtype=np.float64)
    intercepts = np.asarray(intercepts, dtype=np.float64)
    m = len(slopes)
    cells = []
    for i in range(m):
        poly = np.asarray(domain_verts, dtype=np.float64)
        for j in range(m):
            if j == i:
                continue
            poly = clip_polygon_halfspace(poly, slopes[j] - slopes[i], intercepts[i] - intercepts[j])
            if len(poly) == 0:
                break
        if len(poly) >= 3 and abs(polygon_area(poly)) > area_tol:
            cells.append((i, ensure_ccw(poly)))
    return cells


def max_affine_cells_1d(slopes, intercepts, lo: float, hi: float):
    """Intervals of maximality for 1-D affine pieces on [lo, hi].

    Returns a list of ``(piece_index, a, b)`` with a < b partitioning [lo, hi].
    """
    slopes = np.asarray(slopes, dtype=np.float64).reshape(-1)
    intercepts = np.asarray(intercepts, dtype=np.float64).reshape(-1)
    m = slopes.size
    if hi <= lo:
        return []
    breaks = {lo, hi}
    for i in range(m):
        for j in range(i + 1, m):
            ds = slopes[i] - slopes[j]
            if abs(ds) < 1e-14:
                continue
            x = (intercepts[j] - intercepts[i]) / ds
            if lo < x < hi:
                breaks.add(float(x))
    xs = np.array(sorted(breaks))
    cells = []
    for a, b in zip(xs[:-1], xs[1:]):
        if b - a <= 1e-14:
            continue
        mid = 0.5 * (a + b)
        k = int(np.argmax(slopes * mid + intercepts))
        if cells and cells[-1][0] == k and abs(cells[-1][2] - a) < 1e-14:
            cells[-1] = (k, cells[-1][1], float(b))
        else:
            cells.append((k, float(a), float(b)))
    return cells


def line_intersection(a1, c1, a2, c2, tol: float = 1e-12):
    """Intersection point of two lines ``<a, x> = c``, or None if parallel."""
    det = a1[0] * a2[1] - a1[1] * a2[0]
    scale = max(abs(a1[0]), abs(a1[1]), 1.0) * max(abs(a2[0]), abs(a2[1]), 1.0)
    if abs(det) <= tol * scale:
        return None
    x = (c1 * a2[1] - c2 * a1[1]) / det
    y = (a1[0] * c2 - a2[0] * c1) / det
    return np.array([x, y])


def dedupe_points(points: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Collapse near-duplicate points (grid rounding; adequate for vertex sets)."""
    if len(points) == 0:
        return points
    key = np.round(np.asarray(points, dtype=np.float64) / tol).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    return points[np.sort(idx)]


def minkowski_sum_hull(p_verts, q_verts) -> np.ndarray:
    """Vertices of P + Q for convex polygons (hull of pairwise vertex sums)."""
    p = np.asarray(p_verts, dtype=np.float64)
    q = np.asarray(q_verts, dtype=np.float64)
    sums = (p[:, None, :] + q[None, :, :]).reshape(-1, 2)
    return convex_hull_2d(sums)


# ---------------------------------------------------------------------------
# Quadrature on polygons and polygon boundaries
# ---------------------------------------------------------------------------


def _subdivide_triangle(tri, max_edge, depth=0):
    a, b, c = tri
    longest = max(np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c))
    if longest <= max_edge or depth >= 10:
        yield tri
        return
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    for sub in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)):
        yield from _subdivide_triangle(np.array(sub), max_edge, depth + 1)


def polygon_quadrature(verts, order: int = 12, max_edge: float = 1.2):
    """Gauss-Legendre nodes/weights integrating smooth functions over a polygon.

    The polygon is fanned into triangles, each refined to edges <= max_edge,
    and a collapsed tensor Gauss rule is mapped onto every patch.
    """
    v = ensure_ccw(np.asarray(verts, dtype=np.float64))
    if len(v) < 3:
        return np.empty((0, 2)), np.empty(0)
    x, w = _leggauss(order)
    u01 = 0.5 * (x + 1.0)
    w01 = 0.5 * w
    uu, ww = np.meshgrid(u01, u01, indexing="ij")
    wgt = np.outer(w01, w01)
    tris = []
    for i in range(1, len(v) - 1):
        tris.extend(_subdivide_triangle(np.array([v[0], v[i], v[i + 1]]), max_edge))
    tris = np.array(tris)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    area2 = np.abs(
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )
    # collapsed map p(u, t) = a + u*(b - a) + u*t*(c - b), |J| = u * area2
    u = uu.reshape(-1)
    t = ww.reshape(-1)
    pts = (
        a[:, None, :]
        + u[None, :, None] * (b - a)[:, None, :]
        + (u * t)[None, :, None] * (c - b)[:, None, :]
    )
    weights = area2[:, None] * (u * wgt.reshape(-1))[None, :]
    return pts.reshape(-1, 2), weights.reshape(-1)


def edge_quadrature(p, q, order: int = 20, max_len: float = 0.5):
    """Composite Gauss-Legendre nodes/arclength-weights along segment [p, q]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    length = float(np.linalg.norm(q - p))
    if length <= 1e-300:
        return np.empty((0, 2)), np.empty(0)
    x, w = _leggauss(order)
    k = max(1, int(math.ceil(length / max_len)))
    edges = np.linspace(0.0, 1.0, k + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    taus = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    wts = (half[:, None] * w[None, :]).reshape(-1) * length
    nodes = p[None, :] + taus[:, None] * (q - p)[None, :]
    return nodes, wts


def polygon_boundary_edges(verts, artificial=None):
    """Edges (p, q, outward unit normal) of a ccw polygon, skipping artificial ones."""
    v = ensure_ccw(np.asarray(verts, dtype=np.float64))
    m = len(v)
    out = []
    for i in range(m):
        if artificial is not None and artificial[i]:
            continue
        p, q = v[i], v[(i + 1) % m]
        d = q - p
        ln = np.linalg.norm(d)
        if ln <= 1e-300:
            continue
        out.append((p, q, np.array([d[1], -d[0]]) / ln))
    return out


def gaussian_polygon_mass(verts, order: int = 20, max_len: float = 0.5) -> float:
    """(2*pi)**-1 * integral over the polygon of exp(-|x|^2/2).

    Uses the divergence reduction with the flux F = (2*pi)**-1/2 *
    exp(-x^2/2) * Phi(y): only the y-extent of each edge contributes, and each
    edge integral is a smooth 1-D quadrature.
    """
    from .numerics import gauss_tail_array, INV_SQRT_2PI

    v = ensure_ccw(np.asarray(verts, dtype=np.float64))
    if len(v) < 3:
        return 0.0
    total = []
    m = len(v)
    for i in range(m):
        p, q = v[i], v[(i + 1) % m]
        dx = q[0] - p[0]
        if abs(dx) <= 1e-300:
            continue
        nodes, wts = edge_quadrature(p, q, order=order, max_len=max_len)
        length = np.linalg.norm(q - p)
        f = INV_SQRT_2PI * np.exp(-0.5 * nodes[:, 0] ** 2) * (1.0 - gauss_tail_array(nodes[:, 1]))
        # n_y ds = -dx dtau; wts carry ds = length dtau
        total.append(pairwise_sum(f * wts) * (-dx / length))
    return pairwise_sum(total)

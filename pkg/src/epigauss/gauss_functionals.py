"""Gaussian epigraph volumes, moment measures, and spherical boundary measures.

The Gaussian volume of the region on or above the graph of a convex function
phi reduces to ``(2 pi)^(-n/2) * integral exp(-|x|^2/2) * tail(phi(x)) dx``
where ``tail`` is the normalized Gaussian upper tail; +inf function values
contribute nothing through ``tail(+inf) = 0``.

Two quadrature paths coexist:

* a cell path for piecewise-linear functions (n <= 2): the integrand is
  analytic on every maximality cell of the affine pieces, so composite Gauss
  panels per cell deliver near machine accuracy;
* a node path: tensor-product nodes of a :class:`QuadratureConfig`, each node
  attributed to the max-attaining piece, exact ties split evenly so even
  functions produce exactly even estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _geometry as geom
from .convex_core import GridFunction, PLConvexFunction, WeightPair, eval_function
from .numerics import (
    INF,
    QuadratureConfig,
    UnsupportedDimensionError,
    box_integral,
    gauss_tail_array,
    pairwise_sum,
    panel_rule_1d,
)


class DivergentTailError(ValueError):
    """The selected height weight has a divergent tail for the given function."""


def gauss_coeff(n: int) -> float:
    """The product-measure normalization (2 pi)^(-(n+1)/2)."""
    return (2.0 * math.pi) ** (-(n + 1) / 2.0)


# ---------------------------------------------------------------------------
# Quadrature node construction
# ---------------------------------------------------------------------------


@dataclass
class PLQuadrature:
    """Cell-resolved quadrature nodes for a PL function on its truncated domain."""

    points: np.ndarray     # (N, n)
    weights: np.ndarray    # (N,)
    values: np.ndarray     # (N,) function values (affine per cell, hence exact)
    piece_id: np.ndarray   # (N,) active piece per node


def pl_cells(f: PLConvexFunction, radius: float):
    """Maximality cells of ``f`` on its domain intersected with [-R, R]^n."""
    if f.n == 1:
        lo, hi = f.domain_interval()
        lo, hi = max(lo, -radius), min(hi, radius)
        if hi <= lo:
            return []
        return geom.max_affine_cells_1d(f.slopes[:, 0], f.intercepts, lo, hi)
    if f.n == 2:
        verts, _ = f.domain_polygon(radius)
        if len(verts) < 3:
            return []
        return geom.max_affine_cells_2d(f.slopes, f.intercepts, verts)
    raise UnsupportedDimensionError("cell quadrature supports n in {1, 2}")


def pl_quadrature(f: PLConvexFunction, cfg: QuadratureConfig,
                  order_1d: int = 24, order_2d: int = 10,
                  max_edge: float = 1.5) -> PLQuadrature:
    """Composite Gauss panels on every maximality cell of a PL function."""
    cells = pl_cells(f, cfg.truncation_radius)
    pts_list, w_list, pid_list = [], [], []
    if f.n == 1:
        for k, a, b in cells:
            nodes, w = panel_rule_1d(a, b, max_len=0.5, order=order_1d)
            pts_list.append(nodes.reshape(-1, 1))
            w_list.append(w)
            pid_list.append(np.full(nodes.size, k))
    else:
        for k, poly in cells:
            nodes, w = geom.polygon_quadrature(poly, order=order_2d, max_edge=max_edge)
            pts_list.append(nodes)
            w_list.append(w)
            pid_list.append(np.full(len(nodes), k))
    if not pts_list:
        return PLQuadrature(np.empty((0, f.n)), np.empty(0), np.empty(0), np.empty(0, dtype=int))
    pts = np.vstack(pts_list)
    piece = np.concatenate(pid_list)
    vals = np.einsum("ij,ij->i", pts, f.slopes[piece]) + f.intercepts[piece]
    return PLQuadrature(pts, np.concatenate(w_list), vals, piece)


def node_quadrature(f: PLConvexFunction, cfg: QuadratureConfig):
    """Tensor nodes with per-node function values and tie-split piece shares.

    Returns ``(points, weights, values, share)`` where ``share`` is an
    (N, pieces) sparse-ish 0/1-normalized matrix of argmax attributions: exact
    ties are split evenly so even inputs yield exactly even attributions.
    """
    nodes, w = cfg.axis_nodes_weights()
    if f.n == 1:
        pts = nodes.reshape(-1, 1)
        weights = w
    elif f.n == 2:
        a, b = np.meshgrid(nodes, nodes, indexing="ij")
        pts = np.column_stack((a.reshape(-1), b.reshape(-1)))
        weights = np.outer(w, w).reshape(-1)
    else:
        raise UnsupportedDimensionError("node attribution supports n in {1, 2}")
    piece_vals = f.piece_values(pts)
    vals = piece_vals.max(axis=1)
    tol = 1e-12 * (1.0 + np.abs(vals))
    ties = piece_vals >= (vals - tol)[:, None]
    share = ties / ties.sum(axis=1)[:, None]
    inside = f.inside(pts)
    vals = np.where(inside, vals, INF)
    return pts, weights, vals, share


# ---------------------------------------------------------------------------
# Epigraph volumes
# ---------------------------------------------------------------------------


def epigraph_volume(f, cfg: QuadratureConfig | None = None) -> float:
    """Gaussian measure of the epigraph of ``f`` in R^(n+1); always in [0, 1]."""
    cfg = cfg or QuadratureConfig()
    if isinstance(f, PLConvexFunction):
        if f.n <= 2:
            q = pl_quadrature(f, cfg)
            dens = np.exp(-0.5 * np.einsum("ij,ij->i", q.points, q.points))
            integrand = dens * gauss_tail_array(q.values)
            return (2.0 * math.pi) ** (-f.n / 2.0) * pairwise_sum(integrand * q.weights)
        if f.n == 3:
            return _epigraph_volume_callable(lambda p: f(p), 3, cfg)
        raise UnsupportedDimensionError("epigraph_volume supports n <= 3")
    if isinstance(f, GridFunction):
        if f.n > 3:
            raise UnsupportedDimensionError("epigraph_volume supports n <= 3")
        return _epigraph_volume_callable(lambda p: eval_function(f, p), f.n, cfg)
    raise TypeError(f"cannot integrate {type(f).__name__}")


def _epigraph_volume_callable(evaluate, n, cfg):
    coeff = (2.0 * math.pi) ** (-n / 2.0)

    def integrand(pts):
        vals = evaluate(pts)
        return np.exp(-0.5 * np.einsum("ij,ij->i", pts, pts)) * gauss_tail_array(vals)

    return coeff * box_integral(integrand, n, cfg)


def _eta_tail(eta: str, alpha, values: np.ndarray) -> np.ndarray:
    """H(t) = integral_t^inf eta(s) ds in closed form per height-weight family."""
    out = np.zeros_like(values)
    finite = np.isfinite(values)
    t = values[finite]
    if eta == "gaussian":
        out[finite] = gauss_tail_array(t)
    elif eta == "exponential":
        out[finite] = np.exp(-t)
    else:  # alpha_concave: eta(s) = (1 - alpha s)^(1/alpha - 1), H(t) = (1 - alpha t)^(1/alpha)
        base = 1.0 - alpha * t
        if np.any(base <= 0.0):
            raise DivergentTailError("alpha-concave tail diverges: function reaches 1/alpha")
        out[finite] = base ** (1.0 / alpha)
    return out


def _omega_weight(omega: str, q, n: int, pts: np.ndarray) -> np.ndarray:
    if omega == "gaussian":
        return (2.0 * math.pi) ** (-n / 2.0) * np.exp(-0.5 * np.einsum("ij,ij->i", pts, pts))
    if omega == "unit":
        return np.ones(len(pts))
    r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    with np.errstate(divide="ignore"):
        w = r ** (q - n)
    return np.where(np.isfinite(w), w, 0.0)  # the origin node is a null set


def weighted_epigraph_volume(f, weights: WeightPair, cfg: QuadratureConfig | None = None) -> float:
    """Generalized weighted volume: integral of omega(x) * H_eta(f(x)) dx.

    For the exponential and alpha-concave height weights the function must
    grow at least linearly (coercive) when its domain is unbounded, otherwise
    the integral diverges.
    """
    from .convex_core import is_coercive

    cfg = cfg or QuadratureConfig()
    n = f.n
    weights.validate(n)
    if weights.eta in ("exponential", "alpha_concave") and isinstance(f, PLConvexFunction):
        if f.has_full_domain() and not is_coercive(f):
            raise DivergentTailError(
                f"{weights.eta} height weight needs linear growth on an unbounded domain")
    if isinstance(f, PLConvexFunction) and n <= 2:
        q = pl_quadrature(f, cfg)
        vals = _omega_weight(weights.omega, weights.q, n, q.points)
        vals = vals * _eta_tail(weights.eta, weights.alpha, q.values)
        return pairwise_sum(vals * q.weights)

    def integrand(pts):
        fv = eval_function(f, pts) if isinstance(f, GridFunction) else f(pts)
        return _omega_weight(weights.omega, weights.q, n, pts) * _eta_tail(
            weights.eta, weights.alpha, fv)

    return box_integral(integrand, n, cfg)


# ---------------------------------------------------------------------------
# Euclidean Gaussian moment measure
# ---------------------------------------------------------------------------


@dataclass
class MomentMeasureEstimate:
    """Push-forward of the Gaussian-weighted density under the gradient map.

    ``atomic`` estimates carry one atom per affine piece (locations are the
    piece slopes); ``histogram`` estimates bin per-node gradients of a grid
    function.
    """

    kind: str
    locations: np.ndarray = field(default_factory=lambda: np.empty((0, 1)))
    masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    bin_edges: list = field(default_factory=list)
    bin_masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    total_mass: float = 0.0

    def as_measure_dict(self) -> dict:
        if self.kind != "atomic":
            raise ValueError("only atomic estimates serialize to the measure schema")
        return {
            "n": int(self.locations.shape[1]),
            "points": self.locations.tolist(),
            "weights": self.masses.tolist(),
            "total_mass": self.total_mass,
        }


def moment_measure(f, cfg: QuadratureConfig | None = None, method: str = "auto",
                   bins: int = 32) -> MomentMeasureEstimate:
    """Gaussian moment measure of ``f``: density c_(n+1) e^(-f^2/2) e^(-|x|^2/2)
    pushed forward by the gradient.

    PL functions produce an exactly atomic estimate on their slope set
    (``method`` selects per-cell integration, the default, or tensor-node
    attribution); grid functions produce a histogram over gradient space.
    """
    cfg = cfg or QuadratureConfig()
    if isinstance(f, PLConvexFunction):
        if method == "auto":
            method = "cells" if f.n <= 2 else "nodes"
        coeff = gauss_coeff(f.n)
        if method == "cells":
            q = pl_quadrature(f, cfg)
            dens = coeff * np.exp(-0.5 * q.values ** 2) * np.exp(
                -0.5 * np.einsum("ij,ij->i", q.points, q.points)) * q.weights
            masses = np.zeros(f.num_pieces)
            for k in range(f.num_pieces):
                sel = q.piece_id == k
                if sel.any():
                    masses[k] = pairwise_sum(dens[sel])
        else:
            pts, w, vals, share = node_quadrature(f, cfg)
            finite = np.isfinite(vals)
            dens = np.zeros(len(pts))
            dens[finite] = coeff * np.exp(-0.5 * vals[finite] ** 2) * np.exp(
                -0.5 * np.einsum("ij,ij->i", pts[finite], pts[finite])) * w[finite]
            masses = share[finite].T @ dens[finite]
        return MomentMeasureEstimate(
            kind="atomic", locations=f.slopes.copy(), masses=masses,
            total_mass=pairwise_sum(masses),
        )
    if isinstance(f, GridFunction):
        return _grid_moment_histogram(f, bins)
    raise TypeError(f"cannot form a moment measure of {type(f).__name__}")


def _grid_density(f: GridFunction):
    """Nodes of ``f``'s own grid with gradients, density weights, and masses.

    Only nodes with a finite difference stencil participate; isolated finite
    points are null sets and contribute nothing.
    """
    from .convex_core import NotDifferentiableError, gradient

    coeff = gauss_coeff(f.n)
    h = f.spacings()
    axes = f.axes()
    grads, masses, points = [], [], []
    for idx in np.ndindex(f.shape):
        v = f.values[idx]
        if not np.isfinite(v):
            continue
        try:
            g = gradient(f, idx)
        except NotDifferentiableError:
            continue
        x = np.array([axes[k][idx[k]] for k in range(f.n)])
        w = 1.0
        for k in range(f.n):
            w *= h[k] * (0.5 if idx[k] in (0, f.shape[k] - 1) else 1.0)
        grads.append(g)
        points.append(x)
        masses.append(coeff * math.exp(-0.5 * v * v) * math.exp(-0.5 * float(x @ x)) * w)
    if not grads:
        return np.empty((0, f.n)), np.empty((0, f.n)), np.empty(0)
    return np.array(points), np.array(grads), np.array(masses)


def _grid_moment_histogram(f: GridFunction, bins: int) -> MomentMeasureEstimate:
    _, grads, masses = _grid_density(f)
    if len(grads) == 0:
        return MomentMeasureEstimate(kind="histogram", total_mass=0.0)
    edges = []
    for k in range(f.n):
        lo, hi = grads[:, k].min(), grads[:, k].max()
        pad = 0.05 * max(hi - lo, 1e-9)
        edges.append(np.linspace(lo - pad, hi + pad, bins + 1))
    hist, _ = np.histogramdd(grads, bins=edges, weights=masses)
    return MomentMeasureEstimate(
        kind="histogram", bin_edges=edges, bin_masses=hist,
        total_mass=pairwise_sum(masses),
    )


def total_moment_mass(f, cfg: QuadratureConfig | None = None, method: str = "auto") -> float:
    """c_(n+1) * integral e^(-f^2/2) e^(-|x|^2/2) dx (the measure's total mass)."""
    cfg = cfg or QuadratureConfig()
    if isinstance(f, PLConvexFunction):
        if method == "auto":
            method = "cells" if f.n <= 2 else "nodes"
        coeff = gauss_coeff(f.n)
        if method == "cells":
            q = pl_quadrature(f, cfg)
            dens = np.exp(-0.5 * q.values ** 2) * np.exp(
                -0.5 * np.einsum("ij,ij->i", q.points, q.points))
            return coeff * pairwise_sum(dens * q.weights)
        pts, w, vals, _ = node_quadrature(f, cfg)
        finite = np.isfinite(vals)
        dens = np.exp(-0.5 * vals[finite] ** 2) * np.exp(
            -0.5 * np.einsum("ij,ij->i", pts[finite], pts[finite]))
        return coeff * pairwise_sum(dens * w[finite])
    if isinstance(f, GridFunction):
        _, _, masses = _grid_density(f)
        return pairwise_sum(masses)
    raise TypeError(f"cannot integrate {type(f).__name__}")


# ---------------------------------------------------------------------------
# Spherical Gaussian measure (boundary push-forward, n <= 2)
# ---------------------------------------------------------------------------


@dataclass
class SphericalMeasureEstimate:
    """Boundary measure: mass per outer unit normal of the effective domain."""

    normals: np.ndarray
    masses: np.ndarray
    total_mass: float


def spherical_measure(f: PLConvexFunction, cfg: QuadratureConfig | None = None) -> SphericalMeasureEstimate:
    """Gaussian-weighted tail density on the domain boundary, pushed to normals.

    Full-space domains have empty boundary and return the zero measure;
    contributions beyond the truncation radius are neglected (they carry
    Gaussian weight below 1e-13).
    """
    cfg = cfg or QuadratureConfig()
    if not isinstance(f, PLConvexFunction):
        raise TypeError("spherical_measure needs the exact PL form")
    if f.n > 2:
        raise UnsupportedDimensionError("spherical_measure supports n in {1, 2}")
    coeff = (2.0 * math.pi) ** (-f.n / 2.0)  # c_(n+1) * sqrt(2 pi)
    if f.has_full_domain():
        return SphericalMeasureEstimate(np.empty((0, f.n)), np.empty(0), 0.0)
    if f.n == 1:
        normals, masses = [], []
        lo, hi = f.domain_interval()
        for point, nrm in ((hi, 1.0), (lo, -1.0)):
            if not np.isfinite(point):
                continue
            val = float(f.piece_values(np.array([[point]])).max())
            masses.append(coeff * math.exp(-0.5 * point * point) * float(gauss_tail_array([val])[0]))
            normals.append([nrm])
        return SphericalMeasureEstimate(
            np.array(normals).reshape(-1, 1), np.array(masses),
            pairwise_sum(masses) if masses else 0.0,
        )
    verts, artificial = f.domain_polygon(cfg.truncation_radius)
    if len(verts) < 3:
        return SphericalMeasureEstimate(np.empty((0, 2)), np.empty(0), 0.0)
    normals, masses = [], []
    for p, q, nrm in geom.polygon_boundary_edges(verts, artificial):
        nodes, w = geom.edge_quadrature(p, q, order=20, max_len=0.5)
        vals = f.piece_values(nodes).max(axis=1)
        dens = np.exp(-0.5 * np.einsum("ij,ij->i", nodes, nodes)) * gauss_tail_array(vals)
        normals.append(nrm)
        masses.append(coeff * pairwise_sum(dens * w))
    if not normals:
        return SphericalMeasureEstimate(np.empty((0, 2)), np.empty(0), 0.0)
    return SphericalMeasureEstimate(np.array(normals), np.array(masses), pairwise_sum(masses))


# ---------------------------------------------------------------------------
# Gaussian volume of bodies (intervals and polygons)
# ---------------------------------------------------------------------------


def gaussian_body_volume(body, cfg: QuadratureConfig | None = None) -> float:
    """(2 pi)^(-n/2) * integral over the body of e^(-|x|^2/2), n <= 2.

    1-D bodies are (lo, hi) intervals; 2-D bodies are polygon vertex arrays.
    Polygon volumes go through a divergence reduction to smooth edge
    integrals, so no area quadrature of a discontinuous indicator occurs.
    """
    arr = np.asarray(body, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        lo, hi = float(arr[0]), float(arr[1])
        return float(gauss_tail_array([lo])[0] - gauss_tail_array([hi])[0])
    if arr.ndim == 2 and arr.shape[1] == 2:
        return geom.gaussian_polygon_mass(arr)
    raise UnsupportedDimensionError("gaussian_body_volume supports intervals and polygons")


def regular_polygon(k: int, radius: float = 1.0) -> np.ndarray:
    """Vertices of the regular k-gon inscribed in a circle (ccw)."""
    ang = 2.0 * math.pi * np.arange(k) / k
    return radius * np.column_stack((np.cos(ang), np.sin(ang)))

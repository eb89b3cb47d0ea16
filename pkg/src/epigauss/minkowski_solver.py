"""Semi-discrete solver for the Gaussian moment-measure prescription problem.

Given an even, spanning, finitely-supported measure mu, find a convex phi with
linear growth whose Gaussian moment measure is proportional to mu.  The
variational scheme parameterizes candidates by one nonnegative height per
+- pair of support points: the conjugate of the height data is the
max-of-affine function phi*(y) = max_i(<x_i, y> - v_i), which is even by
construction, and the optimization

    minimize sum of weights * heights
    subject to epigraph-volume(phi*) = 1/2

is solved by projected gradient descent.  The constraint is restored after
every step by a uniform shift of the heights (a shift by t moves phi* by -t,
so the volume is monotone in t and the feasible shift is found by bisection),
and the gradient of the volume with respect to the heights is exactly the
vector of per-pair moment-measure masses, so the stationarity condition is
mass proportionality: w_p / |mu| = m_p / sum(m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex_core import (
    DiscreteMeasure,
    GridFunction,
    PLConvexFunction,
    ValidatedMeasure,
    validate_measure,
)
from .gauss_functionals import (
    epigraph_volume,
    gauss_coeff,
    moment_measure,
    pl_quadrature,
)
from .numerics import (
    QuadratureConfig,
    UnsupportedDimensionError,
    gauss_tail_array,
    pairwise_sum,
)


class BracketFailureError(RuntimeError):
    """The shift bisection could not bracket the feasible volume 1/2."""


@dataclass
class MinkowskiProblem:
    """A validated even, spanning input measure in pair-major order."""

    mu: ValidatedMeasure

    @classmethod
    def from_measure(cls, raw: DiscreteMeasure) -> "MinkowskiProblem":
        return cls(validate_measure(raw))

    @property
    def n(self) -> int:
        return self.mu.n

    @property
    def num_pairs(self) -> int:
        return self.mu.num_pairs

    @property
    def total_mass(self) -> float:
        return self.mu.total_mass

    @property
    def pair_weights(self) -> np.ndarray:
        return self.mu.pair_weights

    def pieces(self, v: np.ndarray):
        """Slopes/intercepts of phi* for per-pair heights v, plus pair ids."""
        slopes, intercepts, pair_of = [], [], []
        for p, (i, j) in enumerate(self.mu.pair_members):
            slopes.append(self.mu.points[i])
            intercepts.append(-v[p])
            pair_of.append(p)
            if j != i:
                slopes.append(self.mu.points[j])
                intercepts.append(-v[p])
                pair_of.append(p)
        return np.array(slopes), np.array(intercepts), np.array(pair_of)


@dataclass
class SolverConfig:
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    step_size: float = 0.5
    max_iterations: int = 2000
    residual_tol: float = 1e-3
    bisection_tol: float = 1e-10
    v_init: np.ndarray | None = None

    def __post_init__(self):
        if self.step_size <= 0 or self.residual_tol <= 0 or self.bisection_tol <= 0:
            raise ValueError("tolerances and step size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class SolverResult:
    v: np.ndarray
    phi: PLConvexFunction
    masses: np.ndarray
    lam: float
    residual: float
    constraint_value: float
    iterations: int
    converged: bool
    objective: float
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "v": self.v.tolist(),
            "phi_pieces": np.column_stack((self.phi.slopes, self.phi.intercepts)).tolist(),
            "masses": self.masses.tolist(),
            "lambda": self.lam,
            "residual": self.residual,
            "constraint_value": self.constraint_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective": self.objective,
            "history": self.history,
        }


def phi_star_of(v, problem: MinkowskiProblem) -> PLConvexFunction:
    """The candidate phi* for heights v: max_i(<x_i, y> - v_pair(i)), even."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != problem.num_pairs:
        raise ValueError("one height per pair required")
    if np.any(v < -1e-12):
        raise ValueError("heights must be nonnegative")
    slopes, intercepts, _ = problem.pieces(np.maximum(v, 0.0))
    return PLConvexFunction(slopes, intercepts)


class _ShiftedEvaluator:
    """Volume and per-pair masses of phi*(.; v) - t, sharing one cell quadrature.

    A uniform shift of the heights moves phi* by a constant, so the cell
    decomposition is t-invariant and only the scalar offset enters the
    integrands.
    """

    def __init__(self, problem: MinkowskiProblem, v: np.ndarray, cfg: QuadratureConfig):
        self.problem = problem
        self.n = problem.n
        slopes, intercepts, pair_of = problem.pieces(v)
        self.pair_of = pair_of
        self.phi = PLConvexFunction(slopes, intercepts)
        if self.n > 2:
            raise UnsupportedDimensionError("the solver supports n in {1, 2}")
        q = pl_quadrature(self.phi, cfg)
        self._vals = q.values
        self._gauss = np.exp(-0.5 * np.einsum("ij,ij->i", q.points, q.points)) * q.weights
        self._piece = q.piece_id
        self._vol_coeff = (2.0 * math.pi) ** (-self.n / 2.0)
        self._mass_coeff = gauss_coeff(self.n)

    def volume(self, t: float = 0.0) -> float:
        return self._vol_coeff * pairwise_sum(self._gauss * gauss_tail_array(self._vals - t))

    def pair_masses(self, t: float = 0.0) -> np.ndarray:
        dens = self._mass_coeff * self._gauss * np.exp(-0.5 * (self._vals - t) ** 2)
        piece_mass = np.zeros(len(self.phi.slopes))
        for k in range(len(piece_mass)):
            sel = self._piece == k
            if sel.any():
                piece_mass[k] = pairwise_sum(dens[sel])
        out = np.zeros(self.problem.num_pairs)
        np.add.at(out, self.pair_of, piece_mass)
        return out


def constraint_value(v, problem: MinkowskiProblem,
                     cfg: QuadratureConfig | None = None) -> float:
    """Epigraph volume of phi*(.; v); nondecreasing in every height."""
    cfg = cfg or QuadratureConfig()
    return epigraph_volume(phi_star_of(v, problem), cfg)


def constraint_gradient(v, problem: MinkowskiProblem,
                        cfg: QuadratureConfig | None = None) -> np.ndarray:
    """Per-pair moment-measure masses of phi*(.; v) (= volume gradient in v)."""
    cfg = cfg or QuadratureConfig()
    ev = _ShiftedEvaluator(problem, np.maximum(np.asarray(v, float), 0.0), cfg)
    return ev.pair_masses(0.0)


def project_shift(v, problem: MinkowskiProblem, cfg: QuadratureConfig | None = None,
                  bisection_tol: float = 1e-10):
    """Uniform-shift projection onto the volume-1/2 constraint.

    Finds t with volume(clamp(v + t, 0)) = 1/2 by bisection; the volume is
    nondecreasing in t so the root is unique up to flat clamped stretches.
    Returns (shifted heights, t).
    """
    cfg = cfg or QuadratureConfig()
    v = np.maximum(np.asarray(v, dtype=np.float64).reshape(-1), 0.0)
    base = _ShiftedEvaluator(problem, v, cfg)
    vmin = float(v.min())

    def value(t: float) -> float:
        if t >= -vmin:
            return base.volume(t)
        ev = _ShiftedEvaluator(problem, np.maximum(v + t, 0.0), cfg)
        return ev.volume(0.0)

    lo = -float(v.max()) if v.max() > 0 else -1.0
    f_lo = value(lo)
    if f_lo >= 0.5:
        raise BracketFailureError(
            "volume at fully clamped heights is >= 1/2; check the quadrature setup")
    hi, f_hi = 10.0, value(10.0)
    grow = 0
    while f_hi < 0.5:
        hi *= 2.0
        f_hi = value(hi)
        grow += 1
        if grow > 8:
            raise BracketFailureError("could not bracket the feasible shift")
    t, f_t = hi, f_hi
    for _ in range(300):
        t = 0.5 * (lo + hi)
        f_t = value(t)
        if abs(f_t - 0.5) <= bisection_tol:
            break
        if f_t < 0.5:
            lo = t
        else:
            hi = t
    return np.maximum(v + t, 0.0), float(t)


def solve(problem: MinkowskiProblem, cfg: SolverConfig | None = None) -> SolverResult:
    """Projected gradient descent on the heights with shift projection.

    Each iteration restores feasibility, computes the per-pair masses, and
    steps along the reduced gradient w_p - |mu| m_p / sum(m); the step halves
    when the (post-projection) objective would increase.  Returns a result
    with ``converged=False`` and the full history when the budget runs out.
    """
    cfg = cfg or SolverConfig()
    quad = cfg.quadrature
    P = problem.num_pairs
    W = problem.pair_weights
    total = problem.total_mass
    v = np.zeros(P) if cfg.v_init is None else np.asarray(cfg.v_init, float).reshape(-1).copy()
    if v.size != P:
        raise ValueError("v_init must have one entry per pair")

    v, _ = project_shift(v, problem, quad, cfg.bisection_tol)
    objective = float(W @ v)
    step = cfg.step_size
    history = []
    converged = False
    iterations = 0
    ev = _ShiftedEvaluator(problem, v, quad)
    masses = ev.pair_masses(0.0)

    for it in range(1, cfg.max_iterations + 1):
        iterations = it
        msum = float(masses.sum())
        residual = float(np.max(np.abs(W / total - masses / msum)))
        history.append({"iteration": it, "residual": residual,
                        "objective": objective, "step": step})
        if residual <= cfg.residual_tol:
            converged = True
            break
        g = W - total * masses / msum
        while True:
            v_trial = np.maximum(v - step * g, 0.0)
            v_trial, _ = project_shift(v_trial, problem, quad, cfg.bisection_tol)
            obj_trial = float(W @ v_trial)
            if obj_trial <= objective + 1e-12 or step <= 1e-12:
                break
            step *= 0.5
        v, objective = v_trial, obj_trial
        step = min(step * 1.2, cfg.step_size)
        ev = _ShiftedEvaluator(problem, v, quad)
        masses = ev.pair_masses(0.0)

    msum = float(masses.sum())
    return SolverResult(
        v=v,
        phi=ev.phi,
        masses=masses,
        lam=total / msum,
        residual=float(np.max(np.abs(W / total - masses / msum))),
        constraint_value=ev.volume(0.0),
        iterations=iterations,
        converged=converged,
        objective=objective,
        history=history,
    )


@dataclass
class VerificationReport:
    tv_distance: float
    lam: float
    constraint_value: float
    masses: np.ndarray
    passed: bool

    def as_dict(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "lambda": self.lam,
            "constraint_value": self.constraint_value,
            "masses": self.masses.tolist(),
            "passed": self.passed,
        }


def verify_solution(result: SolverResult, problem: MinkowskiProblem,
                    cfg: QuadratureConfig | None = None,
                    tv_tol: float = 2e-3) -> VerificationReport:
    """Recompute masses at higher resolution by node attribution and compare.

    Reports the total-variation distance between the normalized weights and
    the recomputed normalized masses, the refreshed proportionality constant,
    and the constraint value.
    """
    if cfg is None:
        base = QuadratureConfig()
        cfg = QuadratureConfig(base.truncation_radius, 2 * base.points_per_axis + 1, base.rule)
    est = moment_measure(result.phi, cfg, method="nodes")
    _, _, pair_of = problem.pieces(result.v)
    masses = np.zeros(problem.num_pairs)
    np.add.at(masses, pair_of, est.masses)
    w_hat = problem.pair_weights / problem.total_mass
    m_hat = masses / masses.sum()
    tv = 0.5 * float(np.abs(w_hat - m_hat).sum())
    lam = problem.total_mass / float(masses.sum())
    constraint = epigraph_volume(result.phi, cfg)
    return VerificationReport(
        tv_distance=tv, lam=lam, constraint_value=constraint,
        masses=masses, passed=bool(tv <= tv_tol),
    )


# ---------------------------------------------------------------------------
# Pointwise Monge-Ampere residual of a smooth candidate
# ---------------------------------------------------------------------------


@dataclass
class MAResidualReport:
    field: np.ndarray       # full grid shape; NaN where the stencil is invalid
    max_residual: float
    excluded: int


def monge_ampere_residual(phi: GridFunction, g, tau: float,
                          cfg: QuadratureConfig | None = None) -> MAResidualReport:
    """Pointwise |g(grad phi) det(hess phi) - tau c_(n+1) e^(-phi^2/2) e^(-|y|^2/2)|.

    Derivatives use central differences; interior nodes lacking a fully finite
    second-difference stencil are excluded from the max and counted.
    """
    if phi.n not in (1, 2):
        raise UnsupportedDimensionError("the residual check supports n in {1, 2}")
    vals = phi.values
    h = phi.spacings()
    coeff = tau * gauss_coeff(phi.n)
    out = np.full(phi.shape, np.nan)
    axes = phi.axes()
    if phi.n == 1:
        v = vals
        core = slice(1, -1)
        ok = np.isfinite(v[:-2]) & np.isfinite(v[1:-1]) & np.isfinite(v[2:])
        with np.errstate(invalid="ignore"):  # inf stencils are masked via `ok`
            grad = (v[2:] - v[:-2]) / (2 * h[0])
            det = (v[2:] - 2 * v[1:-1] + v[:-2]) / h[0] ** 2
        grad = np.where(ok, grad, 0.0)
        x = axes[0][core]
        with np.errstate(invalid="ignore", over="ignore"):
            rhs = coeff * np.exp(-0.5 * v[core] ** 2) * np.exp(-0.5 * x ** 2)
        gv = np.asarray(g(grad.reshape(-1, 1)), dtype=np.float64)
        res = np.abs(gv * det - rhs)
        out[core] = np.where(ok, res, np.nan)
        excluded = int(np.sum(~ok))
    else:
        v = vals
        c = (slice(1, -1), slice(1, -1))
        stencils = [v[:-2, 1:-1], v[2:, 1:-1], v[1:-1, :-2], v[1:-1, 2:],
                    v[:-2, :-2], v[2:, 2:], v[:-2, 2:], v[2:, :-2], v[c]]
        ok = np.logical_and.reduce([np.isfinite(s) for s in stencils])
        with np.errstate(invalid="ignore"):  # inf stencils are masked via `ok`
            gx = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h[0])
            gy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h[1])
            fxx = (v[2:, 1:-1] - 2 * v[c] + v[:-2, 1:-1]) / h[0] ** 2
            fyy = (v[1:-1, 2:] - 2 * v[c] + v[1:-1, :-2]) / h[1] ** 2
            fxy = (v[2:, 2:] + v[:-2, :-2] - v[2:, :-2] - v[:-2, 2:]) / (4 * h[0] * h[1])
            det = fxx * fyy - fxy ** 2
        gx = np.where(ok, gx, 0.0)
        gy = np.where(ok, gy, 0.0)
        xx, yy = np.meshgrid(axes[0][1:-1], axes[1][1:-1], indexing="ij")
        with np.errstate(invalid="ignore", over="ignore"):
            rhs = coeff * np.exp(-0.5 * v[c] ** 2) * np.exp(-0.5 * (xx ** 2 + yy ** 2))
        pts = np.column_stack((gx.reshape(-1), gy.reshape(-1)))
        gv = np.asarray(g(pts), dtype=np.float64).reshape(gx.shape)
        res = np.abs(gv * det - rhs)
        out[c] = np.where(ok, res, np.nan)
        excluded = int(np.sum(~ok))
    finite = np.isfinite(out)
    max_res = float(out[finite].max()) if finite.any() else math.nan
    return MAResidualReport(field=out, max_residual=max_res, excluded=excluded)

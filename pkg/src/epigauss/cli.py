"""Command-line surface: file ingestion, dispatch, and report/figure emission.

Every command is deterministic given its flags and inputs; numeric console
output uses 12 significant digits while file outputs keep full precision.
Exit codes encode verification outcomes so CI can drive the toolkit through
the CLI alone; report paths write matplotlib figures next to the delimited
output unless ``--no-figures`` is passed.
"""

from __future__ import annotations

import json
import math
import os

import click
import numpy as np

from . import io as eio
from .convex_core import (
    GridFunction,
    MeasureValidationError,
    PLConvexFunction,
    WeightPair,
    convexity_violation,
)
from .gauss_functionals import (
    epigraph_volume,
    moment_measure,
    spherical_measure,
    total_moment_mass,
    weighted_epigraph_volume,
)
from .minkowski_solver import (
    MinkowskiProblem,
    SolverConfig,
    monge_ampere_residual,
    solve,
    verify_solution,
)
from .numerics import QuadratureConfig, set_threads
from .transform import inf_convolution, inf_convolution_pl, legendre_nd, pl_conjugate
from .variation import ConditionViolatedError, check_condition, variation_report


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _quad_options(fn):
    fn = click.option("--radius", type=float, default=8.0, show_default=True,
                      help="Quadrature truncation radius.")(fn)
    fn = click.option("--points", "points_per_axis", type=int, default=513,
                      show_default=True, help="Quadrature points per axis.")(fn)
    fn = click.option("--rule", type=click.Choice(["trapezoid", "simpson"]),
                      default="trapezoid", show_default=True)(fn)
    return fn


def _cfg(radius, points_per_axis, rule) -> QuadratureConfig:
    return QuadratureConfig(truncation_radius=radius,
                            points_per_axis=points_per_axis, rule=rule)


@click.group()
@click.option("--threads", type=int, default=None,
              help="Worker count for shardable loops (EPIGAUSS_THREADS); results are identical for any value.")
def main(threads):
    """Gaussian epigraph calculus toolkit."""
    set_threads(threads)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--query-points", type=int, default=None,
              help="Query-grid resolution per axis (grid inputs).")
@click.option("--pad", type=float, default=0.1, show_default=True,
              help="Relative padding of the default slope range.")
def legendre(input_path, output_path, query_points, pad):
    """Conjugate a function file (exact for PL inputs, grid transform otherwise)."""
    f = eio.load_function(input_path)
    if isinstance(f, PLConvexFunction):
        conj = pl_conjugate(f)
        eio.save_function(output_path, conj)
        sample = conj.piece_values(np.zeros((1, conj.n)))
        click.echo(f"pl conjugate: {conj.num_pieces} pieces, "
                   f"value at origin {_fmt(float(sample.max()))}")
        return
    from .transform import default_conjugate_grid

    dom = default_conjugate_grid(f, pad=pad)
    shape = f.shape if query_points is None else (query_points,) * f.n
    conj = legendre_nd(f, dom, shape)
    eio.save_function(output_path, conj)
    finite = conj.values[np.isfinite(conj.values)]
    click.echo(f"grid conjugate on {list(conj.shape)} nodes: "
               f"min {_fmt(finite.min())}, max {_fmt(finite.max())}, "
               f"convexity defect {_fmt(max(convexity_violation(conj), 0.0))}")


@main.command()
@click.option("--phi", "phi_path", required=True, type=click.Path(exists=True))
@click.option("--psi", "psi_path", required=True, type=click.Path(exists=True))
@click.option("-t", "scale", type=float, default=1.0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path())
def infconv(phi_path, psi_path, scale, output_path):
    """Infimal convolution phi box (psi t), exact when both inputs are PL."""
    phi = eio.load_function(phi_path)
    psi = eio.load_function(psi_path)
    if isinstance(phi, PLConvexFunction) and isinstance(psi, PLConvexFunction):
        out = inf_convolution_pl(phi, psi, scale)
    elif isinstance(phi, GridFunction) and isinstance(psi, GridFunction):
        out = inf_convolution(phi, psi, scale)
    else:
        raise click.ClickException("phi and psi must both be PL or both be grids")
    eio.save_function(output_path, out)
    click.echo(f"wrote {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--omega", type=click.Choice(["gaussian", "unit", "power"]), default="gaussian",
              show_default=True)
@click.option("--eta", type=click.Choice(["gaussian", "exponential", "alpha_concave"]),
              default="gaussian", show_default=True)
@click.option("--q", type=float, default=None, help="Moment order for the power weight.")
@click.option("--alpha", type=float, default=None, help="Concavity parameter in (-1/n, 0).")
@_quad_options
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON report.")
def gamma(input_path, omega, eta, q, alpha, radius, points_per_axis, rule, as_json):
    """Weighted epigraph volume (Gaussian volume by default)."""
    f = eio.load_function(input_path)
    cfg = _cfg(radius, points_per_axis, rule)
    if omega == "gaussian" and eta == "gaussian":
        value = epigraph_volume(f, cfg)
    else:
        value = weighted_epigraph_volume(f, WeightPair(omega, eta, q, alpha), cfg)
    if as_json:
        click.echo(json.dumps({
            "value": value, "omega": omega, "eta": eta, "q": q, "alpha": alpha,
            "radius": radius, "points_per_axis": points_per_axis, "rule": rule,
        }))
    else:
        click.echo(f"volume {_fmt(value)}  (omega={omega}, eta={eta}, "
                   f"R={_fmt(radius)}, {points_per_axis} pts/axis, {rule})")


def _figures_enabled(output_dir, no_figures) -> bool:
    return output_dir is not None and not no_figures


def _variation_figure(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(report.t_schedule, report.raw_quotients, "o-", label="difference quotients")
    if report.closed_form_value is not None:
        ax.axhline(report.closed_form_value, color="k", ls="--", lw=1, label="closed form")
    if report.richardson_value is not None:
        ax.axhline(report.richardson_value, color="C3", ls=":", lw=1, label="extrapolated")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("quotient")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


@main.command()
@click.option("--phi", "phi_path", required=True, type=click.Path(exists=True))
@click.option("--psi", "psi_path", required=True, type=click.Path(exists=True))
@click.option("--tol", type=float, default=1e-3, show_default=True,
              help="Relative numeric/closed-form agreement required for exit 0.")
@click.option("--unchecked", is_flag=True, help="Skip the admissibility certificate.")
@_quad_options
@click.option("--json", "json_path", type=click.Path(), default=None,
              help="Write the full report as JSON.")
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True)
@click.pass_context
def variation(ctx, phi_path, psi_path, tol, unchecked, radius, points_per_axis, rule,
              json_path, output_dir, no_figures):
    """First variation: certificate, difference quotients, closed form."""
    phi = eio.load_function(phi_path)
    psi = eio.load_function(psi_path)
    cfg = _cfg(radius, points_per_axis, rule)
    cert = check_condition(phi, psi)
    click.echo(f"certificate: satisfied={cert.satisfied} "
               f"alpha={_fmt(cert.alpha) if cert.satisfied else 'n/a'} "
               f"beta={_fmt(cert.beta) if cert.satisfied else 'n/a'} "
               f"inf psi*={_fmt(cert.inf_psi_star)}")
    try:
        report = variation_report(phi, psi, cfg, unchecked=unchecked)
    except ConditionViolatedError as exc:
        click.echo(f"condition_violated: {exc}", err=True)
        ctx.exit(2)
    click.echo("      t          quotient")
    for t, qv in zip(report.t_schedule, report.raw_quotients):
        click.echo(f"  {t:<12.6g} {_fmt(qv)}")
    click.echo(f"extrapolated {_fmt(report.richardson_value)}")
    click.echo(f"closed form  {_fmt(report.closed_form_value)} "
               f"(boundary {_fmt(report.boundary_term)}, bulk {_fmt(report.bulk_term)})")
    click.echo(f"rel error    {_fmt(report.rel_error)}")
    if json_path:
        eio.save_json(json_path, report.as_dict())
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        eio.save_json(os.path.join(output_dir, "variation.json"), report.as_dict())
        if _figures_enabled(output_dir, no_figures):
            _variation_figure(report, os.path.join(output_dir, "quotients.png"))
    if report.rel_error > tol:
        ctx.exit(1)


@main.command("moment-measure")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--spherical", is_flag=True, help="Boundary measure instead of the gradient push-forward.")
@click.option("--bins", type=int, default=32, show_default=True,
              help="Histogram bins per axis for grid inputs.")
@_quad_options
@click.option("--output", "output_path", type=click.Path(), default=None)
def moment_measure_cmd(input_path, spherical, bins, radius, points_per_axis, rule, output_path):
    """Gaussian moment measure (or spherical boundary measure) of a function."""
    f = eio.load_function(input_path)
    cfg = _cfg(radius, points_per_axis, rule)
    if spherical:
        if not isinstance(f, PLConvexFunction):
            raise click.ClickException("the spherical measure needs the exact PL form")
        est = spherical_measure(f, cfg)
        if len(est.masses) == 0:
            click.echo("empty boundary: zero measure")
        payload = {
            "n": f.n,
            "normals": est.normals.tolist(),
            "masses": est.masses.tolist(),
            "total_mass": est.total_mass,
        }
        if output_path:
            eio.save_json(output_path, payload)
        click.echo(f"spherical total mass {_fmt(est.total_mass)} over {len(est.masses)} normals")
        return
    est = moment_measure(f, cfg, bins=bins)
    if est.kind == "atomic":
        if output_path:
            eio.save_json(output_path, est.as_measure_dict())
        click.echo(f"atomic estimate: {len(est.masses)} atoms, "
                   f"total mass {_fmt(est.total_mass)}")
        for loc, m in zip(est.locations, est.masses):
            click.echo("  atom " + np.array2string(loc, precision=6) + f"  mass {_fmt(m)}")
    else:
        if output_path:
            eio.save_json(output_path, {
                "kind": "histogram",
                "bin_edges": [e.tolist() for e in est.bin_edges],
                "bin_masses": est.bin_masses.tolist(),
                "total_mass": est.total_mass,
            })
        click.echo(f"histogram estimate: total mass {_fmt(est.total_mass)} "
                   f"(vs node total {_fmt(total_moment_mass(f, cfg))})")


def _solver_figures(result, problem, verification, out_dir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    its = [row["iteration"] for row in result.history]
    res = [row["residual"] for row in result.history]
    ax.plot(its, res, "o-")
    if any(r > 0 for r in res):
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mass residual")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "residual_history.png"), dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    idx = np.arange(problem.num_pairs)
    w_hat = problem.pair_weights / problem.total_mass
    m_hat = verification.masses / verification.masses.sum()
    ax.bar(idx - 0.18, w_hat, width=0.36, label="target weights")
    ax.bar(idx + 0.18, m_hat, width=0.36, label="recovered masses")
    ax.set_xlabel("pair")
    ax.set_ylabel("normalized mass")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "measure_match.png"), dpi=150)
    plt.close(fig)


@main.command("solve")
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--output-dir", required=True, type=click.Path())
@click.option("--step", type=float, default=0.5, show_default=True)
@click.option("--max-iter", type=int, default=2000, show_default=True)
@click.option("--tol", type=float, default=1e-3, show_default=True)
@click.option("--tv-tol", type=float, default=None,
              help="Verification TV tolerance (default 2x the residual tolerance).")
@_quad_options
@click.option("--no-figures", is_flag=True)
@click.pass_context
def solve_cmd(ctx, measure_path, output_dir, step, max_iter, tol, tv_tol,
              radius, points_per_axis, rule, no_figures):
    """Solve the moment-measure prescription problem for an even measure."""
    raw = eio.load_measure(measure_path)
    try:
        problem = MinkowskiProblem.from_measure(raw)
    except MeasureValidationError as exc:
        click.echo(f"invalid measure ({exc.reason}): {exc}", err=True)
        ctx.exit(3)
    cfg = SolverConfig(quadrature=_cfg(radius, points_per_axis, rule),
                       step_size=step, max_iterations=max_iter, residual_tol=tol)
    result = solve(problem, cfg)
    hi_cfg = QuadratureConfig(radius, 2 * points_per_axis + 1, rule)
    verification = verify_solution(result, problem, hi_cfg,
                                   tv_tol=tv_tol if tv_tol is not None else 2 * tol)
    os.makedirs(output_dir, exist_ok=True)
    payload = result.as_dict()
    payload["verification"] = verification.as_dict()
    eio.save_json(os.path.join(output_dir, "solution.json"), payload)
    eio.save_residual_history(os.path.join(output_dir, "residual_history.csv"),
                              result.history)
    if _figures_enabled(output_dir, no_figures):
        _solver_figures(result, problem, verification, output_dir)
    click.echo(f"converged={result.converged} iterations={result.iterations} "
               f"residual={_fmt(result.residual)}")
    click.echo(f"constraint {_fmt(result.constraint_value)}  lambda {_fmt(result.lam)}")
    click.echo(f"verification TV {_fmt(verification.tv_distance)} "
               f"(passed={verification.passed})")
    if not (result.converged and verification.passed):
        ctx.exit(1)


@main.command("verify")
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--result", "result_path", required=True, type=click.Path(exists=True),
              help="solution.json written by the solve command.")
@click.option("--tv-tol", type=float, default=2e-3, show_default=True)
@_quad_options
@click.pass_context
def verify_cmd(ctx, measure_path, result_path, tv_tol, radius, points_per_axis, rule):
    """Re-verify a stored solution at the given quadrature resolution."""
    from .minkowski_solver import SolverResult

    raw = eio.load_measure(measure_path)
    problem = MinkowskiProblem.from_measure(raw)
    with open(result_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    pieces = np.atleast_2d(np.asarray(doc["phi_pieces"], dtype=np.float64))
    result = SolverResult(
        v=np.asarray(doc["v"], float), phi=PLConvexFunction(pieces[:, :-1], pieces[:, -1]),
        masses=np.asarray(doc["masses"], float), lam=doc["lambda"],
        residual=doc["residual"], constraint_value=doc["constraint_value"],
        iterations=doc["iterations"], converged=doc["converged"],
        objective=doc["objective"],
    )
    verification = verify_solution(result, problem, _cfg(radius, points_per_axis, rule),
                                   tv_tol=tv_tol)
    click.echo(f"TV {_fmt(verification.tv_distance)}  lambda {_fmt(verification.lam)}  "
               f"constraint {_fmt(verification.constraint_value)}")
    if not verification.passed:
        ctx.exit(1)


def _ma_figure(report, phi, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if phi.n == 1:
        ax.plot(phi.axes()[0], report.field, lw=1)
        ax.set_xlabel("y")
        ax.set_ylabel("residual")
        if np.nanmax(report.field) > 0:
            ax.set_yscale("log")
    else:
        im = ax.imshow(report.field.T, origin="lower", aspect="auto",
                       extent=(phi.domain.lo[0], phi.domain.hi[0],
                               phi.domain.lo[1], phi.domain.hi[1]))
        fig.colorbar(im, ax=ax, label="residual")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


@main.command("ma-residual")
@click.option("--phi", "phi_path", required=True, type=click.Path(exists=True),
              help="Grid function file (must be twice differentiable inside).")
@click.option("--g", "g_expr", required=True,
              help="Density g as a numpy expression in x (an (N, n) array), e.g. "
                   "'np.exp(-x[:,0]**2)'.")
@click.option("--tau", type=float, default=1.0, show_default=True)
@click.option("--tol", type=float, default=None,
              help="Exit 1 when the max residual exceeds this bound.")
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True)
@click.pass_context
def ma_residual_cmd(ctx, phi_path, g_expr, tau, tol, output_dir, no_figures):
    """Pointwise Monge-Ampere residual field of a grid candidate."""
    phi = eio.load_function(phi_path)
    if not isinstance(phi, GridFunction):
        raise click.ClickException("the residual check needs a grid function")

    def g(x):
        return np.asarray(eval(g_expr, {"np": np, "math": math, "x": np.asarray(x)}),
                          dtype=np.float64)

    report = monge_ampere_residual(phi, g, tau)
    click.echo(f"max interior residual {_fmt(report.max_residual)} "
               f"({report.excluded} nodes excluded)")
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        np.savetxt(os.path.join(output_dir, "residual_field.csv"),
                   report.field.reshape(report.field.shape[0], -1), delimiter=",")
        if _figures_enabled(output_dir, no_figures):
            _ma_figure(report, phi, os.path.join(output_dir, "residual.png"))
    if tol is not None and not (report.max_residual <= tol):
        ctx.exit(1)


if __name__ == "__main__":
    main()

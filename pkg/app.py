import functools
import logging
import math
import os
import sys

import click
import colorama
import numpy as np
import pandas as pd

from fundtone.bounds import FormulaConstants, problem_kind
from fundtone.config import Config
from fundtone.curvature import estimate_curvature
from fundtone.discretization import PhiField, apply_dirichlet, assemble, export_matrix_market
from fundtone.eigensolve import ProblemKind, expand, smallest_eigenpairs
from fundtone.errors import DomainError, EllipticityError, FundToneError, SolverError
from fundtone.formats import read_off, read_phi_csv, write_curvature_csv, write_eigenfunctions_csv, write_off
from fundtone.geometry import check_ellipticity
from fundtone.reports import eigen_payload, mesh_stats, to_json, write_reports, write_text
from fundtone.suite import VerificationSuite, default_suite, reference_eigenvalue, run_suite
from fundtone.surfaces import SurfaceFamily, builtin_surface

logger = logging.getLogger("fundtone")

EXIT_VIOLATION = 1


def _emit(ctx, payload):
    click.echo(to_json(payload, ctx.obj.FLOAT_DIGITS), nl=False)


def _report(ctx, exc):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    if isinstance(exc, EllipticityError):
        payload.update({"which": exc.which, "ellipticity_margin": exc.margin})
    if exc.__cause__ is not None and not isinstance(exc.__cause__, FundToneError):
        payload["cause"] = type(exc.__cause__).__name__
    click.echo(to_json(payload), nl=False)
    click.secho(f"{type(exc).__name__}: {exc}", fg="red", err=True)
    ctx.exit(exc.exit_code)


def as_library_error(exc):
    """Wrap an exception from outside the library so it never exits with EXIT_VIOLATION"""
    if isinstance(exc, (np.linalg.LinAlgError, ArithmeticError)):
        wrapped = SolverError(f"numerical failure: {exc}")
    else:
        wrapped = FundToneError(f"unexpected {type(exc).__name__}: {exc}")
    wrapped.__cause__ = exc
    return wrapped


def handles_errors(command):
    """Map library errors to their exit codes with a JSON error report on stdout"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except FundToneError as exc:
            _report(ctx, exc)
        except Exception as exc:
            logger.error("%s escaped the library", type(exc).__name__, exc_info=True)
            _report(ctx, as_library_error(exc))
    return wrapper


def surface_options(command):
    for option in reversed([
        click.option("--level", type=int, default=3, show_default=True, help="Refinement level"),
        click.option("--radius", type=float, help="Sphere/disk/cap radius"),
        click.option("--semi-axes", type=float, nargs=3, help="Ellipsoid semi-axes"),
        click.option("--major", type=float, help="Torus major radius"),
        click.option("--minor", type=float, help="Torus minor radius"),
        click.option("--theta", type=float, help="Cap angular radius"),
        click.option("--ambient", type=click.Choice(["0", "1"]), help="Ambient curvature of a cap"),
        click.option("--curvature", type=click.Choice(["1", "0", "-1"]), help="Model of a 4-coordinate OFF"),
    ]):
        command = option(command)
    return command


def _params(radius, semi_axes, major, minor, theta, ambient):
    params = {"radius": radius, "semi_axes": semi_axes or None, "major": major, "minor": minor,
              "theta": theta, "ambient": None if ambient is None else int(ambient)}
    return {k: v for k, v in params.items() if v is not None}


def load_surface(source, level, params, curvature=None):
    """(mesh, curvature field, family) from a family name or an OFF path"""
    if source in [f.value for f in SurfaceFamily]:
        mesh, cf = builtin_surface(source, level, **params)
        return mesh, cf, source
    if not os.path.exists(source):
        raise DomainError(f"'{source}' is neither a surface family nor an existing OFF file")
    mesh = read_off(source, None if curvature is None else int(curvature))
    return mesh, None, None


def _phi(operator, r, phi_csv, mesh, cf):
    if operator == "laplace":
        return PhiField.identity(mesh.n_vertices), cf
    cf = cf if cf is not None else estimate_curvature(mesh)
    if operator == "lr":
        ok, margin = check_ellipticity(mesh, cf, r)
        if not ok:
            raise EllipticityError(f"P_{r} is not positive definite (mu = {margin:.6g})", which=f"P_{r}",
                                   margin=margin)
        return PhiField.newton(cf, r), cf
    if phi_csv is None:
        raise DomainError("--phi-csv is required for the phi operator")
    phi = read_phi_csv(phi_csv, cf.frames, mesh.n_vertices)
    phi.require_positive_definite()
    return phi, cf


def operator_options(command):
    for option in reversed([
        click.option("--operator", type=click.Choice(["laplace", "lr", "phi"]), default="laplace",
                     show_default=True),
        click.option("-r", "--r", "r", type=int, default=1, show_default=True, help="Order of L_r"),
        click.option("--phi-csv", type=click.Path(dir_okay=False), help="Per-vertex Phi (p11, p12, p22)"),
        click.option("--kind", type=click.Choice([k.value for k in ProblemKind]),
                     help="Problem kind (default: closed for closed meshes, dirichlet otherwise)"),
    ]):
        command = option(command)
    return command


def _solve(mesh, phi, kind, k, config):
    op = assemble(mesh, phi)
    if kind is ProblemKind.DIRICHLET:
        op = apply_dirichlet(op, mesh)
    return smallest_eigenpairs(op, k=k, kind=kind, config=config), op


@click.group()
@click.option("--seed", type=int, help="Seed of the eigensolver start block")
@click.option("--workers", type=int, help="Worker processes for suite runs")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG")
@click.pass_context
def cli(ctx, seed, workers, verbose):
    """Fundamental tones of divergence-form operators on surfaces in space forms."""
    colorama.just_fix_windows_console()
    try:
        if isinstance(ctx.obj, Config):
            config = ctx.obj
            for key, value in (("SEED", seed), ("WORKERS", workers)):
                if value is not None:
                    setattr(config, key, value)
            config.validate()
        else:
            config = Config.from_env(SEED=seed, WORKERS=workers)
    except FundToneError as exc:
        click.secho(f"{type(exc).__name__}: {exc}", fg="red", err=True)
        ctx.exit(exc.exit_code)
    level = config.LOG_LEVEL.upper()
    if verbose:
        level = "DEBUG" if verbose > 1 else "INFO"
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    ctx.obj = config


@cli.command()
@click.argument("family", type=click.Choice([f.value for f in SurfaceFamily]))
@surface_options
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="OFF output path")
@click.pass_context
@handles_errors
def generate(ctx, family, level, radius, semi_axes, major, minor, theta, ambient, curvature, out_path):
    """Write a built-in surface as OFF plus a curvature CSV sidecar."""
    mesh, cf = builtin_surface(family, level, **_params(radius, semi_axes, major, minor, theta, ambient))
    out_path = out_path or f"{family}_l{level}.off"
    write_off(mesh, out_path)
    sidecar = os.path.splitext(out_path)[0] + "_curvature.csv"
    write_curvature_csv(cf, sidecar)
    _emit(ctx, {"off": out_path, "curvature_csv": sidecar, "mesh": mesh_stats(mesh)})


@cli.command()
@click.argument("source")
@surface_options
@operator_options
@click.option("-k", "k", type=int, default=1, show_default=True, help="Number of eigenpairs")
@click.option("--eigenfunctions", type=click.Path(dir_okay=False), help="Write eigenfunctions as CSV")
@click.pass_context
@handles_errors
def solve(ctx, source, level, radius, semi_axes, major, minor, theta, ambient, curvature, operator, r,
          phi_csv, kind, k, eigenfunctions):
    """Smallest eigenvalues of L_Phi on a built-in family or an OFF mesh."""
    config = ctx.obj
    mesh, cf, _ = load_surface(source, level, _params(radius, semi_axes, major, minor, theta, ambient),
                               curvature)
    phi, cf = _phi(operator, r, phi_csv, mesh, cf)
    kind = problem_kind(mesh) if kind is None else ProblemKind(kind)
    result, op = _solve(mesh, phi, kind, k, config)
    extra = {"operator": phi.name}
    if cf is not None:
        extra["ellipticity_margin"] = check_ellipticity(mesh, cf, r if operator == "lr" else 0)[1]
    if eigenfunctions:
        write_eigenfunctions_csv(expand(result, op), eigenfunctions)
        extra["eigenfunctions_csv"] = eigenfunctions
    _emit(ctx, eigen_payload(result, mesh, extra))


@cli.command()
@click.option("--suite", "suite_path", type=click.Path(dir_okay=False), help="Suite description (JSON)")
@click.option("--levels", type=int, multiple=True, help="Refinement levels of the default suite")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Report directory")
@click.option("--mutate", type=click.Choice(FormulaConstants.names()),
              help="Multiply one bound constant by 10 (self-test)")
@click.pass_context
@handles_errors
def verify(ctx, suite_path, levels, out_dir, mutate):
    """Run a verification suite and check every bound against computed eigenvalues."""
    config = ctx.obj
    suite = VerificationSuite.load(suite_path) if suite_path else default_suite(levels or (3,))
    constants = FormulaConstants().mutated(mutate) if mutate else FormulaConstants()
    logger.info("suite %s: %d tasks, %d worker(s)", suite.suite_name, len(suite.tasks()), config.WORKERS)
    reports = run_suite(suite, config, constants)
    write_reports(reports, out_dir or suite.output_dir, suite.suite_name, config.FLOAT_DIGITS)
    failures = [r for r in reports if r.is_failure]
    counts = pd.Series([r.status for r in reports], dtype=object).value_counts().to_dict()
    _emit(ctx, {"suite": suite.suite_name, "reports": len(reports), "status_counts": counts,
                "failures": [r.to_dict() for r in failures], "mutated": mutate})
    if failures:
        click.secho(f"{len(failures)} bound violation(s)", fg="red", err=True)
        ctx.exit(EXIT_VIOLATION)
    click.secho(f"all {len(reports)} checks passed or skipped", fg="green", err=True)


def observed_orders(values, reference=None):
    """log2 error ratios against ``reference``, else successive Richardson ratios"""
    values = np.asarray(values, dtype=float)
    if reference is not None:
        errors = np.abs(values - reference)
        orders = [math.nan] + [math.log2(a / b) if b > 0 and a > 0 else math.nan
                               for a, b in zip(errors[:-1], errors[1:])]
        return errors, orders
    diffs = np.abs(np.diff(values))
    orders = [math.nan, math.nan] + [math.log2(a / b) if b > 0 and a > 0 else math.nan
                                     for a, b in zip(diffs[:-1], diffs[1:])]
    return [math.nan] * len(values), orders


@cli.command("refine-study")
@click.argument("family", type=click.Choice([f.value for f in SurfaceFamily]))
@click.option("--levels", type=int, multiple=True, required=True, help="At least three levels")
@click.option("--radius", type=float)
@click.option("--semi-axes", type=float, nargs=3)
@click.option("--major", type=float)
@click.option("--minor", type=float)
@click.option("--theta", type=float)
@click.option("--ambient", type=click.Choice(["0", "1"]))
@click.option("--operator", type=click.Choice(["laplace", "lr"]), default="laplace", show_default=True)
@click.option("-r", "--r", "r", type=int, default=1, show_default=True)
@click.option("--curvature-study", is_flag=True, help="Study estimated against analytic curvature instead")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write the table as CSV")
@click.pass_context
@handles_errors
def refine_study(ctx, family, levels, radius, semi_axes, major, minor, theta, ambient, operator, r,
                 curvature_study, out_path):
    """Convergence table of lambda_1 (or of curvature estimation) over refinement levels."""
    config = ctx.obj
    levels = sorted(set(levels))
    if len(levels) < 3:
        raise DomainError("a refinement study needs at least three levels")
    params = _params(radius, semi_axes, major, minor, theta, ambient)
    rows = []
    for level in levels:
        mesh, cf = builtin_surface(family, level, **params)
        if curvature_study:
            estimated = estimate_curvature(mesh)
            value = float(np.abs(estimated.kappas - cf.kappas).max())
        else:
            phi, _ = _phi(operator, r, None, mesh, cf)
            result, _ = _solve(mesh, phi, problem_kind(mesh), 1, config)
            value = result.fundamental_tone
        rows.append({"level": level, "h_max": mesh.h_max(), "value": value})
    values = [row["value"] for row in rows]
    if curvature_study:
        errors, orders = observed_orders(values, 0.0)
    else:
        reference = reference_eigenvalue(family, params) if operator == "laplace" else None
        errors, orders = observed_orders(values, reference)
    for row, error, order in zip(rows, errors, orders):
        row.update({"error": error, "order": order})
    table = pd.DataFrame(rows, columns=["level", "h_max", "value", "error", "order"])
    if out_path:
        write_text(table.to_csv(index=False, float_format=f"%.{config.FLOAT_DIGITS}g"), out_path)
    _emit(ctx, {"family": family, "quantity": "max curvature error" if curvature_study else "lambda_1",
                "table": table.to_dict(orient="records")})


@cli.command()
@click.argument("source")
@surface_options
@operator_options
@click.option("--out-dir", type=click.Path(file_okay=False), default="matrices", show_default=True)
@click.pass_context
@handles_errors
def export(ctx, source, level, radius, semi_axes, major, minor, theta, ambient, curvature, operator, r,
           phi_csv, kind, out_dir):
    """Write K and M in MatrixMarket format."""
    mesh, cf, _ = load_surface(source, level, _params(radius, semi_axes, major, minor, theta, ambient),
                               curvature)
    phi, _ = _phi(operator, r, phi_csv, mesh, cf)
    op = assemble(mesh, phi)
    kind = problem_kind(mesh) if kind is None else ProblemKind(kind)
    if kind is ProblemKind.DIRICHLET:
        op = apply_dirichlet(op, mesh)
    paths = export_matrix_market(op, out_dir)
    _emit(ctx, {"files": paths, "size": op.size, "kind": kind, "operator": phi.name})


if __name__ == "__main__":
    cli()

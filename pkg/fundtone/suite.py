"""Verification suites: surface configurations, the checks run on them, and the runner."""
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from fundtone.bounds import (BoundName, BoundReport, FormulaConstants, Status, barta_bound,
                             canonical_test_field, cheeger_lower_bound_check, comparison_bound,
                             eigenfunction_field, extrinsic_radius_floor, fundamental_tone, phi_sandwich,
                             solve_problem, thm32_bound, tolerance)
from fundtone.config import Config
from fundtone.discretization import PhiField
from fundtone.eigensolve import ProblemKind, expand
from fundtone.errors import ConfigError, DomainError, EllipticityError, MeshIOError
from fundtone.geometry import ball_domain, extrinsic_radius, local_curvature_sup
from fundtone.surfaces import SurfaceFamily, anchor_point, builtin_surface, family_params

logger = logging.getLogger(__name__)

CHECKS = ("thm32", "barta", "barta_equality", "lambda_r", "comparison", "sandwich", "cheeger")
BALL_CHECKS = ("thm32", "barta", "barta_equality")
MAX_R = 1


@dataclass(frozen=True)
class SuiteConfig:
    """One surface configuration and the checks to run on it"""
    name: str
    family: str
    params: dict = field(default_factory=dict)
    checks: tuple = ()
    r: tuple = (0,)
    center: object = "anchor"
    radius: Optional[float] = None
    levels: Optional[tuple] = None
    h_exact: Optional[float] = None
    pair: tuple = (1, 0)

    def validate(self):
        try:
            family, _ = family_params(self.family, self.params)
        except DomainError as exc:
            raise ConfigError(f"configuration '{self.name}': {exc}") from exc
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"configuration '{self.name}': unknown checks {unknown}")
        for r in tuple(self.r) + tuple(self.pair):
            if not 0 <= r <= MAX_R:
                raise ConfigError(f"configuration '{self.name}': r = {r} outside [0, {MAX_R}]")
        if any(c in BALL_CHECKS for c in self.checks) and not (self.radius and self.radius > 0):
            raise ConfigError(f"configuration '{self.name}': ball checks need a positive radius")
        return family

    def ball_center(self):
        if isinstance(self.center, str):
            if self.center != "anchor":
                raise ConfigError(f"configuration '{self.name}': unknown centre '{self.center}'")
            return anchor_point(self.family, self.params)
        return np.asarray(self.center, dtype=float)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ("checks", "r", "levels", "pair"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid configuration entry: {exc}") from exc


@dataclass(frozen=True)
class VerificationSuite:
    suite_name: str
    configurations: tuple
    levels: tuple = (3,)
    output_dir: str = "reports"

    def __post_init__(self):
        for cfg in self.configurations:
            cfg.validate()

    @classmethod
    def from_dict(cls, data):
        try:
            configs = tuple(SuiteConfig.from_dict(c) for c in data["configurations"])
            return cls(data.get("suite_name", "suite"), configs, tuple(data.get("levels", (3,))),
                       data.get("output_dir", "reports"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid suite description: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise MeshIOError(f"cannot read suite {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def tasks(self):
        """(config, level) pairs in configuration order"""
        return [(cfg, level) for cfg in self.configurations for level in (cfg.levels or self.levels)]


def default_suite(levels=(3,)):
    levels = tuple(levels)
    cap_theta = 2.0 * math.asin(0.25)
    configs = [
        SuiteConfig("disk", "plane_disk", {"radius": 1.0}, ("thm32", "barta", "barta_equality"),
                    r=(0,), radius=1.0),
        SuiteConfig("unit_sphere_cap", "spherical_cap", {"theta": cap_theta, "ambient": 0, "radius": 1.0},
                    ("thm32", "barta", "barta_equality"), r=(0, 1), radius=0.5),
        SuiteConfig("s3_cap", "spherical_cap", {"theta": math.pi / 4, "ambient": 1},
                    ("thm32", "barta", "barta_equality"), r=(0, 1), radius=math.pi / 4),
        SuiteConfig("h3_sphere_ball", "geodesic_sphere_in_H3", {"radius": 1.0},
                    ("thm32", "barta", "barta_equality"), r=(0, 1), radius=0.4),
    ]
    for rho in (0.5, 1.0, 2.0):
        configs.append(SuiteConfig(f"sphere_{rho:g}", "round_sphere", {"radius": rho},
                                   ("lambda_r", "comparison", "sandwich", "cheeger"), r=(0, 1),
                                   h_exact=1.0 / rho))
    configs += [
        SuiteConfig("ellipsoid", "ellipsoid", {"semi_axes": (1.0, 1.0, 1.5)},
                    ("lambda_r", "comparison", "sandwich", "cheeger"), r=(0, 1)),
        SuiteConfig("h3_sphere_closed", "geodesic_sphere_in_H3", {"radius": 1.0}, ("lambda_r",), r=(0, 1)),
        SuiteConfig("great_sphere", "great_sphere", {}, ("lambda_r",), r=(0,)),
        SuiteConfig("torus", "torus", {"major": 2.0, "minor": 1.0}, ("comparison",), r=(1,)),
    ]
    return VerificationSuite("default", tuple(configs), levels)


# ----------------------------------------------------------------------
# closed-form references for refinement studies
# ----------------------------------------------------------------------
def reference_eigenvalue(family, params=None):
    """First nonzero closed eigenvalue or Dirichlet eigenvalue of the Laplacian, when known"""
    family, p = family_params(family, params)
    if family == SurfaceFamily.ROUND_SPHERE:
        return 2.0 / p["radius"] ** 2
    if family == SurfaceFamily.GEODESIC_SPHERE_IN_H3:
        return 2.0 / math.sinh(p["radius"]) ** 2
    if family == SurfaceFamily.GREAT_SPHERE:
        return 2.0
    if family == SurfaceFamily.PLANE_DISK:
        return float(special.jn_zeros(0, 1)[0]) ** 2 / p["radius"] ** 2
    return None


# ----------------------------------------------------------------------
# checks
# ----------------------------------------------------------------------
class _Run:
    """Per (configuration, level) state shared by the checks"""

    def __init__(self, cfg, level, config, constants):
        self.cfg = cfg
        self.level = level
        self.config = config
        self.constants = constants
        self.mesh, self.cf = builtin_surface(cfg.family, level, **cfg.params)
        self.c = self.mesh.space_form.curvature
        self.tol = tolerance(config)
        self._omega = None

    def tags(self):
        return {"mesh_level": self.level, "config": self.cfg.name}

    def omega(self):
        if self._omega is None:
            self._omega = ball_domain(self.mesh, self.cf, self.cfg.ball_center(), self.cfg.radius)
        return self._omega


def _skip(run, name, inputs, reason):
    logger.warning("%s level %d: %s skipped (%s)", run.cfg.name, run.level, name, reason)
    return BoundReport.skipped(name, inputs, reason, **run.tags())


def _check_thm32(run):
    omega, cf_o = run.omega()
    p, R = run.cfg.ball_center(), run.cfg.radius
    reports = []
    for r in run.cfg.r:
        inf_sr = float(cf_o.S(r).min())
        mu = float(cf_o.newton_eigenvalues(r).min())
        inputs = {"c": run.c, "r": r, "R": R, "inf_Sr": inf_sr, "mu": mu, "n": 2}
        if not (mu > 0 and inf_sr > 0):
            reports.append(_skip(run, BoundName.THM32_I if run.c == 1 else BoundName.THM32_II, inputs,
                                 "ellipticity"))
            continue
        h = local_curvature_sup(run.mesh, run.cf, p, R, r)
        ball = thm32_bound(run.c, r, R, inf_sr, h, 2, run.constants, guard=run.config.WINDOW_GUARD)
        inputs.update({"h_next": h, "window": ball.window})
        if not ball.admissible:
            reports.append(_skip(run, ball.item, inputs, "window"))
            continue
        lam = fundamental_tone(omega, PhiField.newton(cf_o, r), ProblemKind.DIRICHLET, run.config)
        reports.append(BoundReport.check(ball.item, inputs, ball.bound, lam, run.tol, **run.tags()))
    return reports


def _check_barta(run):
    omega, cf_o = run.omega()
    r = run.cfg.r[0]
    phi = PhiField.newton(cf_o, r)
    inputs = {"c": run.c, "r": r, "R": run.cfg.radius, "field": "canonical"}
    try:
        X = canonical_test_field(omega, cf_o, run.cfg.ball_center(), run.cfg.radius)
        value = barta_bound(omega, phi, X, run.constants)
    except EllipticityError:
        return [_skip(run, BoundName.BARTA, inputs, "ellipticity")]
    lam = fundamental_tone(omega, phi, ProblemKind.DIRICHLET, run.config)
    return [BoundReport.check(BoundName.BARTA, inputs, value, lam, run.tol, **run.tags())]


def _check_barta_equality(run):
    omega, cf_o = run.omega()
    r = run.cfg.r[0]
    phi = PhiField.newton(cf_o, r)
    inputs = {"c": run.c, "r": r, "R": run.cfg.radius, "field": "eigenfunction"}
    try:
        phi.require_positive_definite()
    except EllipticityError:
        return [_skip(run, BoundName.BARTA, inputs, "ellipticity")]
    result, op = solve_problem(omega, phi, ProblemKind.DIRICHLET, config=run.config)
    lam = result.fundamental_tone
    X0 = eigenfunction_field(omega, cf_o, expand(result, op)[:, 0])
    value = barta_bound(omega, phi, X0, run.constants)
    margin = lam - value
    passed = abs(margin) <= run.config.MESH_ALLOWANCE * lam
    status = Status.PASS if passed else Status.FAIL
    return [BoundReport(BoundName.BARTA.value, inputs, value, lam, margin, passed, status=status.value,
                        reason="equality case", **run.tags())]


def _check_lambda_r(run):
    if not run.mesh.is_closed:
        raise ConfigError(f"configuration '{run.cfg.name}': lambda_r needs a closed surface")
    S = run.cf.symmetric_functions()
    radius = None
    reports = []
    for r in run.cfg.r:
        inf_sr, sup_next, min_next = float(S[:, r].min()), float(S[:, r + 1].max()), float(S[:, r + 1].min())
        mu = float(run.cf.newton_eigenvalues(r).min())
        inputs = {"c": run.c, "r": r, "n": 2, "inf_Sr": inf_sr, "sup_Srnext": sup_next, "mu": mu}
        if not mu > 0:
            reports.append(_skip(run, BoundName.LAMBDA_R_CONST, inputs, "ellipticity"))
            continue
        if run.c == 1 and max(abs(sup_next), abs(min_next)) <= 1e-12:
            floor = extrinsic_radius_floor(run.c, r, 2, inf_sr, 0.0, run.constants)
        elif min_next > 0:
            floor = extrinsic_radius_floor(run.c, r, 2, inf_sr, sup_next, run.constants)
        else:
            reports.append(_skip(run, BoundName.LAMBDA_R_CONST, inputs, "H_(r+1) not positive"))
            continue
        if radius is None:
            radius, _ = extrinsic_radius(run.mesh)
        reports.append(BoundReport.check(BoundName.LAMBDA_R_CONST, inputs, floor, radius, run.tol,
                                         **run.tags()))
    return reports


def _check_comparison(run):
    r, s = run.cfg.pair
    inputs = {"c": run.c, "r": r, "s": s}
    try:
        result = comparison_bound(run.mesh, run.cf, r, s, run.config, run.constants)
    except EllipticityError as exc:
        inputs["margin"] = exc.margin
        return [_skip(run, BoundName.COMPARISON_RS, inputs, "ellipticity")]
    inputs.update({"factor": result.factor, "upper": result.upper})
    status = Status.PASS if result.passed else Status.FAIL
    return [BoundReport(BoundName.COMPARISON_RS.value, inputs, result.rhs, result.lhs, result.lhs - result.rhs,
                        result.passed, status=status.value, **run.tags())]


def _check_sandwich(run):
    r = run.cfg.r[-1]
    phi = PhiField.newton(run.cf, r)
    inputs = {"c": run.c, "phi": phi.name}
    try:
        result = phi_sandwich(run.mesh, phi, run.config, run.constants)
    except EllipticityError:
        return [_skip(run, BoundName.PHI_SANDWICH, inputs, "ellipticity")]
    lower = run.constants.sandwich * result.mu * result.lambda_delta
    inputs.update({"mu": result.mu, "nu": result.nu, "lambda_delta": result.lambda_delta})
    status = Status.PASS if result.passed else Status.FAIL
    return [BoundReport(BoundName.PHI_SANDWICH.value, inputs, lower, result.lambda_phi,
                        result.lambda_phi - lower, result.passed, status=status.value, **run.tags())]


def _check_cheeger(run):
    reports = []
    for r in run.cfg.r:
        try:
            reports.append(cheeger_lower_bound_check(run.mesh, run.cf, r, run.cfg.h_exact, run.config,
                                                     run.constants, mesh_level=run.level,
                                                     config_name=run.cfg.name))
        except EllipticityError:
            reports.append(_skip(run, BoundName.CHEEGER, {"c": run.c, "r": r}, "ellipticity"))
    return reports


_CHECK_FUNCTIONS = {
    "thm32": _check_thm32,
    "barta": _check_barta,
    "barta_equality": _check_barta_equality,
    "lambda_r": _check_lambda_r,
    "comparison": _check_comparison,
    "sandwich": _check_sandwich,
    "cheeger": _check_cheeger,
}


def run_configuration(cfg, level, config=None, constants=None):
    """All checks of one configuration at one refinement level"""
    config = config or Config()
    constants = constants or FormulaConstants()
    run = _Run(cfg, level, config, constants)
    reports = []
    for check in cfg.checks:
        reports.extend(_CHECK_FUNCTIONS[check](run))
    failed = sum(r.is_failure for r in reports)
    logger.info("%s level %d: %d reports, %d failures", cfg.name, level, len(reports), failed)
    return reports


def _run_task(args):
    cfg, level, config, constants = args
    return run_configuration(cfg, level, config, constants)


def run_suite(suite, config=None, constants=None):
    """BoundReports of every (configuration, level), in configuration order"""
    config = config or Config()
    constants = constants or FormulaConstants()
    tasks = [(cfg, level, config, constants) for cfg, level in suite.tasks()]
    if config.WORKERS > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.WORKERS) as pool:
            batches = list(pool.map(_run_task, tasks))
    else:
        batches = [_run_task(t) for t in tasks]
    return [report for batch in batches for report in batch]

"""Lower bounds for fundamental tones and their checks against computed eigenvalues.

Every bound returns its value; the ``*_report``/``*_check`` helpers compare
it with a computed eigenvalue and produce a BoundReport. A violated bound is
a failing report, never an exception.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from fundtone.config import Config
from fundtone.discretization import (PhiField, apply_dirichlet, assemble, element_geometry, element_phi,
                                     frame_transport, lumped_mass)
from fundtone.eigensolve import ProblemKind, expand, smallest_eigenpairs
from fundtone.errors import ConfigError, DegenerateSweepError, DomainError, EllipticityError
from fundtone.spaceform import coords
from fundtone.spectrum import elementary_symmetric

logger = logging.getLogger(__name__)


class BoundName(str, Enum):
    BARTA = "barta"
    THM32_I = "thm32_i"
    THM32_II = "thm32_ii"
    THM32_III = "thm32_iii"
    LAMBDA_R_CONST = "lambda_r_const"
    COMPARISON_RS = "comparison_rs"
    PHI_SANDWICH = "phi_sandwich"
    CHEEGER = "cheeger"


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INFO = "info"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class FormulaConstants:
    """Leading constant of each bound formula"""
    barta: float = 1
    thm32: float = 2
    lambda_r: float = 1
    comparison: float = 1
    sandwich: float = 1
    cheeger: float = 0.25

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def mutated(self, name):
        """Copy with one constant multiplied by 10"""
        if name not in self.names():
            raise ConfigError(f"unknown bound formula '{name}' (expected one of {', '.join(self.names())})")
        return replace(self, **{name: getattr(self, name) * 10})


@dataclass
class BoundReport:
    """One verification record"""
    bound_name: str
    inputs: dict
    bound_value: Optional[float]
    computed_lambda: Optional[float] = None
    margin: Optional[float] = None
    passed: Optional[bool] = True
    mesh_level: Optional[int] = None
    status: str = Status.PASS.value
    reason: Optional[str] = None
    config: Optional[str] = None

    @classmethod
    def check(cls, bound_name, inputs, bound_value, computed_lambda=None, tol=1e-6, **kwargs):
        """pass iff lambda is absent or lambda - bound >= -tol * lambda"""
        if computed_lambda is None:
            return cls(str(BoundName(bound_name).value), inputs, float(bound_value), **kwargs)
        margin = float(computed_lambda) - float(bound_value)
        passed = margin >= -tol * abs(float(computed_lambda))
        status = Status.PASS if passed else Status.FAIL
        return cls(BoundName(bound_name).value, inputs, float(bound_value), float(computed_lambda),
                   margin, bool(passed), status=status.value, **kwargs)

    @classmethod
    def skipped(cls, bound_name, inputs, reason, **kwargs):
        return cls(BoundName(bound_name).value, inputs, None, passed=None, status=Status.SKIPPED.value,
                   reason=reason, **kwargs)

    @property
    def is_failure(self):
        return self.status == Status.FAIL.value

    def to_dict(self):
        record = asdict(self)
        record["pass"] = record.pop("passed")
        return record


def tolerance(config, allowance=None):
    """tol_rel = REL_TOL plus the discretization allowance"""
    return config.REL_TOL + (config.MESH_ALLOWANCE if allowance is None else allowance)


# ----------------------------------------------------------------------
# fundamental tones
# ----------------------------------------------------------------------
def problem_kind(mesh):
    return ProblemKind.CLOSED if mesh.is_closed else ProblemKind.DIRICHLET


def solve_problem(mesh, phi, kind=None, k=1, config=None):
    """Assemble, reduce if Dirichlet, and solve; returns (EigenResult, OperatorPair)"""
    config = config or Config()
    kind = problem_kind(mesh) if kind is None else ProblemKind(kind)
    op = assemble(mesh, phi)
    if kind is ProblemKind.DIRICHLET:
        op = apply_dirichlet(op, mesh)
    return smallest_eigenpairs(op, k=k, kind=kind, config=config), op


def fundamental_tone(mesh, phi, kind=None, config=None):
    result, _ = solve_problem(mesh, phi, kind, config=config)
    return result.fundamental_tone


# ----------------------------------------------------------------------
# Barta bound
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class VertexVectorField:
    """Tangent vectors per vertex in the (e_1, e_2) frame given by ``frames``.

    ``potential`` is set when X = -grad log f for the stored vertex values f.
    """
    values: np.ndarray
    frames: np.ndarray
    potential: Optional[np.ndarray] = None
    name: str = "custom"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(values)):
            raise DomainError("vector field components must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, cf):
        return cls(np.zeros((len(cf), 2)), cf.frames, name="zero")

    def norms(self):
        return np.linalg.norm(self.values, axis=1)

    def __len__(self):
        return len(self.values)


def _radial_distance(mesh, p):
    sf = mesh.space_form
    p = sf.validate(coords(p))
    return p, sf._distance(p[None, :], mesh.vertices)


def canonical_test_field(mesh, cf, p, R):
    """X = -grad log(R^2 - rho^2) = 2 rho grad rho / (R^2 - rho^2), rho = dist(p, .)"""
    if R <= 0:
        raise DomainError(f"ball radius must be positive, got {R}")
    sf = mesh.space_form
    p, rho = _radial_distance(mesh, p)
    outside = np.flatnonzero((rho >= R) & ~mesh.boundary_vertex_flags)
    if outside.size:
        raise DomainError(f"interior vertices {outside[:10].tolist()} are not inside the ball of radius {R}")
    grad = sf.distance_gradient(p, mesh.vertices)
    tangential = sf.inner(grad[:, None, :], cf.frames)
    f = R * R - rho * rho
    inside = rho < R
    values = np.zeros((mesh.n_vertices, 2))
    values[inside] = (2.0 * rho[inside] / f[inside])[:, None] * tangential[inside]
    return VertexVectorField(values, cf.frames, potential=f, name="canonical")


def _vertex_gradients(mesh, frames, u, geometry):
    """Area-weighted vertex average of the P1 gradient of u, in the vertex frames"""
    grad_tri = np.einsum("fc,fca->fa", u[mesh.faces], geometry.gradients)
    q = frame_transport(mesh, frames, geometry)
    corner = np.einsum("fcab,fa->fcb", q, grad_tri)
    weights = geometry.areas[:, None]
    total = np.zeros((mesh.n_vertices, 2))
    np.add.at(total, mesh.faces.ravel(), (weights[:, :, None] * corner).reshape(-1, 2))
    area = np.bincount(mesh.faces.ravel(), weights=np.repeat(geometry.areas, 3), minlength=mesh.n_vertices)
    return total / area[:, None]


def eigenfunction_field(mesh, cf, v):
    """X_0 = -grad log v for the first Dirichlet eigenfunction v (made positive)"""
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != mesh.n_vertices:
        raise DomainError(f"eigenfunction has {v.shape[0]} entries, mesh has {mesh.n_vertices} vertices")
    interior = mesh.interior_vertices
    if v[interior].sum() < 0:
        v = -v
    if np.any(v[interior] <= 0):
        raise DomainError("first eigenfunction is not positive on the interior")
    grads = _vertex_gradients(mesh, cf.frames, v, element_geometry(mesh))
    values = np.zeros((mesh.n_vertices, 2))
    values[interior] = -grads[interior] / v[interior, None]
    return VertexVectorField(values, cf.frames, potential=v, name="eigenfunction")


def _phi_in_frames(mesh, phi, frames):
    """Vertex Phi matrices expressed in ``frames``"""
    if phi.frames is None:
        return phi.matrices
    w = mesh.space_form.weights
    rot = np.einsum("vid,d,vjd->vij", frames, w, phi.frames)
    return rot @ phi.matrices @ np.swapaxes(rot, 1, 2)


def barta_pointwise(mesh, phi, X):
    """div(Phi X) - <Phi X, X> at the interior vertices (ordered as mesh.interior_vertices).

    Potential fields use the flux form (K_Phi f)_i / (M f)_i; other fields
    use the element-wise weak divergence with lumped mass.
    """
    if len(X) != mesh.n_vertices:
        raise DomainError(f"vector field has {len(X)} vertices, mesh has {mesh.n_vertices}")
    phi.require_positive_definite()
    interior = mesh.interior_vertices
    if interior.size == 0:
        raise DomainError("mesh has no interior vertices")
    if X.potential is not None:
        op = assemble(mesh, phi)
        f = np.asarray(X.potential, dtype=float)
        flux = (op.K @ f)[interior]
        weight = (op.M @ f)[interior]
        if np.any(weight <= 0):
            raise DomainError("potential of the test field is not positive on the interior")
        return flux / weight
    geometry = element_geometry(mesh)
    q = frame_transport(mesh, X.frames, geometry)
    x_tri = np.einsum("fcab,fcb->fa", q, X.values[mesh.faces]) / 3.0
    phi_e = element_phi(mesh, phi, geometry)
    flux = np.einsum("fab,fb->fa", phi_e, x_tri)
    contrib = geometry.areas[:, None] * np.einsum("fa,fca->fc", flux, geometry.gradients)
    weak = np.bincount(mesh.faces.ravel(), weights=contrib.ravel(), minlength=mesh.n_vertices)
    m = lumped_mass(assemble(mesh, phi, lump=True))
    divergence = -weak / m
    phi_v = _phi_in_frames(mesh, phi, X.frames)
    quadratic = np.einsum("va,vab,vb->v", X.values, phi_v, X.values)
    return (divergence - quadratic)[interior]


def barta_bound(mesh, phi, X, constants=None):
    """inf over interior vertices of div(Phi X) - |Phi^(1/2) X|^2"""
    constants = constants or FormulaConstants()
    return constants.barta * float(np.min(barta_pointwise(mesh, phi, X)))


# ----------------------------------------------------------------------
# ball bounds
# ----------------------------------------------------------------------
class BallBound(NamedTuple):
    bound: float
    admissible: bool
    item: str
    window: float


def _arccot(x):
    return math.atan2(1.0, x)


def thm32_bound(c, r, R, inf_Sr, h_next, n=2, constants=None, guard=1e-9):
    """Ball bound for the L_r fundamental tone of M inside B(p, R).

    c = 1:          (2/R) [(n-r) cot R inf S_r - (r+1) h],  R < arccot((r+1) h / ((n-r) inf S_r))
    c <= 0, h > 0:  (2/R^2) [(n-r) inf S_r - (r+1) R h],     R < (n-r) inf S_r / ((r+1) h)
    c <= 0, h = 0:  2 (n-r) inf S_r / R^2,                   any R
    Windows are strict and shrunk by ``guard``.
    """
    constants = constants or FormulaConstants()
    if not 0 <= r <= n - 1:
        raise DomainError(f"r must lie in [0, {n - 1}], got {r}")
    if not R > 0:
        raise DomainError(f"ball radius must be positive, got {R}")
    if h_next < 0:
        raise DomainError(f"h_{{r+1}} must be nonnegative, got {h_next}")
    if not inf_Sr > 0:
        raise EllipticityError(f"inf S_{r} = {inf_Sr:.6g} is not positive", which=f"S_{r}", margin=inf_Sr)
    k = constants.thm32
    if c == 1:
        window = math.pi / 2 if h_next == 0 else _arccot((r + 1) * h_next / ((n - r) * inf_Sr))
        if R >= math.pi / 2:
            bound = -math.inf
        else:
            bound = k / R * ((n - r) * inf_Sr / math.tan(R) - (r + 1) * h_next)
        item = BoundName.THM32_I
    elif h_next > 0:
        window = (n - r) * inf_Sr / ((r + 1) * h_next)
        bound = k / R ** 2 * ((n - r) * inf_Sr - (r + 1) * R * h_next)
        item = BoundName.THM32_II
    else:
        window = math.inf
        bound = k * (n - r) * inf_Sr / R ** 2
        item = BoundName.THM32_III
    admissible = R < window - guard
    return BallBound(float(bound), bool(admissible), item.value, float(window))


def lambda_r_constant(c, r, n, inf_Sr, sup_Srnext, constants=None):
    """Lower bound for the extrinsic radius when H_{r+1} > 0.

    c = 1: arccot((r+1) sup S_{r+1} / ((n-r) inf S_r)); c <= 0: (n-r) inf S_r / ((r+1) sup S_{r+1}).
    Exact for Fraction inputs when c <= 0.
    """
    constants = constants or FormulaConstants()
    if not 0 <= r <= n - 1:
        raise DomainError(f"r must lie in [0, {n - 1}], got {r}")
    if not (inf_Sr > 0 and sup_Srnext > 0):
        raise DomainError("lambda_r needs inf S_r > 0 and sup S_{r+1} > 0")
    if c == 1:
        return constants.lambda_r * _arccot((r + 1) * sup_Srnext / ((n - r) * inf_Sr))
    return constants.lambda_r * (n - r) * inf_Sr / ((r + 1) * sup_Srnext)


def extrinsic_radius_floor(c, r, n, inf_Sr, sup_Srnext, constants=None):
    """pi/2 when S_{r+1} vanishes on a surface of the sphere, lambda_r otherwise"""
    constants = constants or FormulaConstants()
    if c == 1 and sup_Srnext == 0:
        if not inf_Sr > 0:
            raise EllipticityError("the pi/2 floor needs P_r positive definite", which=f"P_{r}", margin=inf_Sr)
        return constants.lambda_r * math.pi / 2
    return lambda_r_constant(c, r, n, inf_Sr, sup_Srnext, constants)


def best_extrinsic_floor(c, kappas, r, constants=None):
    """max over j = 0..r of lambda_j, using the j with S_{j+1} > 0 everywhere"""
    S = elementary_symmetric(np.atleast_2d(np.asarray(kappas)))
    n = S.shape[-1] - 1
    floors = []
    for j in range(r + 1):
        inf_j, sup_next = S[:, j].min(), S[:, j + 1].max()
        if S[:, j + 1].min() > 0 and inf_j > 0:
            floors.append(lambda_r_constant(c, j, n, inf_j, sup_next, constants))
    if not floors:
        raise DomainError(f"no j <= {r} has H_(j+1) > 0 everywhere")
    return max(floors)


# ----------------------------------------------------------------------
# comparison and sandwich
# ----------------------------------------------------------------------
class Comparison(NamedTuple):
    factor: float
    lhs: float
    rhs: float
    passed: bool
    upper: float


class Sandwich(NamedTuple):
    mu: float
    nu: float
    lambda_phi: float
    lambda_delta: float
    passed: bool


def _newton_extrema(cf, r):
    mu = cf.newton_eigenvalues(r)
    return float(mu.min()), float(mu.max())


def comparison_bound(mesh, cf, r, s, config=None, constants=None, allowance=None):
    """lambda^{L_r} >= mu(P_r) / nu(P_s) * lambda^{L_s}, and the matching upper estimate"""
    config = config or Config()
    constants = constants or FormulaConstants()
    mu_r, nu_r = _newton_extrema(cf, r)
    mu_s, nu_s = _newton_extrema(cf, s)
    for which, value in ((r, mu_r), (s, mu_s)):
        if not value > 0:
            raise EllipticityError(f"P_{which} is not positive definite (mu = {value:.6g})",
                                   which=f"P_{which}", margin=value)
    lam_r = fundamental_tone(mesh, PhiField.newton(cf, r), config=config)
    lam_s = lam_r if r == s else fundamental_tone(mesh, PhiField.newton(cf, s), config=config)
    factor = constants.comparison * mu_r / nu_s
    rhs = factor * lam_s
    upper = nu_r / mu_s * lam_s
    tol = tolerance(config, allowance)
    passed = lam_r >= rhs * (1 - tol) and lam_r <= upper * (1 + tol)
    return Comparison(factor, lam_r, rhs, bool(passed), upper)


def phi_sandwich(mesh, phi, config=None, constants=None, allowance=None):
    """mu(Phi) lambda^Delta <= lambda^Phi <= nu(Phi) lambda^Delta"""
    config = config or Config()
    constants = constants or FormulaConstants()
    phi.require_positive_definite()
    mu, nu = phi.extrema()
    lam_phi = fundamental_tone(mesh, phi, config=config)
    lam_delta = fundamental_tone(mesh, PhiField.identity(mesh.n_vertices), config=config)
    tol = tolerance(config, allowance)
    k = constants.sandwich
    passed = k * mu * lam_delta * (1 - tol) <= lam_phi <= nu * lam_delta / k * (1 + tol)
    return Sandwich(mu, nu, lam_phi, lam_delta, bool(passed))


# ----------------------------------------------------------------------
# Cheeger
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CheegerSweep:
    """Best level-set cut of a sweep; h_hat is an upper bound on h(M)"""
    h_hat: float
    threshold: float
    cut_length: float
    cut_edges: np.ndarray
    side_volumes: tuple = field(default=(0.0, 0.0))


def _cut_at(faces, areas, planar, s):
    below = s < 0
    count = below.sum(axis=1)
    mixed = (count == 1) | (count == 2)
    lone = np.where(count == 1, np.argmax(below, axis=1), np.argmin(below, axis=1))[mixed]
    idx = np.flatnonzero(mixed)
    o1, o2 = (lone + 1) % 3, (lone + 2) % 3
    s_l, s_1, s_2 = s[idx, lone], s[idx, o1], s[idx, o2]
    ta, tb = s_l / (s_l - s_1), s_l / (s_l - s_2)
    p_l, p_1, p_2 = planar[idx, lone], planar[idx, o1], planar[idx, o2]
    cut = np.linalg.norm(ta[:, None] * (p_1 - p_l) - tb[:, None] * (p_2 - p_l), axis=1).sum()
    lone_area = areas[idx] * ta * tb
    lone_below = count[idx] == 1
    below_area = (areas[count == 3].sum() + lone_area[lone_below].sum()
                  + (areas[idx][~lone_below] - lone_area[~lone_below]).sum())
    return float(cut), float(below_area)


def cheeger_sweep(mesh, u):
    """Sweep the level sets {u <= t} at midpoints between consecutive distinct values of u"""
    if not mesh.is_closed:
        raise DomainError("Cheeger sweep needs a closed mesh")
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != mesh.n_vertices:
        raise DomainError(f"function has {u.shape[0]} entries, mesh has {mesh.n_vertices} vertices")
    values = np.unique(u)
    if values.size < 2 or values[-1] - values[0] <= 1e-12 * max(1.0, np.abs(values).max()):
        raise DegenerateSweepError("sweep function is constant")
    geometry = element_geometry(mesh)
    total = float(geometry.areas.sum())
    corner_values = u[mesh.faces]
    best = None
    for t in 0.5 * (values[1:] + values[:-1]):
        cut, below = _cut_at(mesh.faces, geometry.areas, geometry.planar, corner_values - t)
        smaller = min(below, total - below)
        if smaller <= 0:
            continue
        ratio = cut / smaller
        if best is None or ratio < best[0]:
            best = (ratio, float(t), cut, (below, total - below))
    if best is None:
        raise DegenerateSweepError("no threshold separates the mesh")
    ratio, t, cut, sides = best
    edges = mesh.edges()
    crossed = edges[(u[edges[:, 0]] <= t) != (u[edges[:, 1]] <= t)]
    logger.debug("cheeger sweep: %d thresholds, best ratio %.6g at t = %.6g", values.size - 1, ratio, t)
    return CheegerSweep(float(ratio), t, cut, crossed, sides)


def cheeger_lower_bound_check(mesh, cf, r, h_exact=None, config=None, constants=None, allowance=None,
                              mesh_level=None, config_name=None):
    """lambda_1^{L_r} >= mu(P_r) h^2 / 4; informational when h is only estimated by the sweep"""
    config = config or Config()
    constants = constants or FormulaConstants()
    if not mesh.is_closed:
        raise DomainError("Cheeger check needs a closed mesh")
    mu, _ = _newton_extrema(cf, r)
    if not mu > 0:
        raise EllipticityError(f"P_{r} is not positive definite (mu = {mu:.6g})", which=f"P_{r}", margin=mu)
    lam = fundamental_tone(mesh, PhiField.newton(cf, r), kind=ProblemKind.CLOSED, config=config)
    inputs = {"r": r, "mu": mu}
    if h_exact is not None:
        inputs["h"] = float(h_exact)
        bound = constants.cheeger * mu * h_exact ** 2
        return BoundReport.check(BoundName.CHEEGER, inputs, bound, lam, tolerance(config, allowance),
                                 mesh_level=mesh_level, config=config_name)
    result, op = solve_problem(mesh, PhiField.identity(mesh.n_vertices), ProblemKind.CLOSED, config=config)
    sweep = cheeger_sweep(mesh, expand(result, op)[:, 0])
    inputs["h_hat"] = sweep.h_hat
    bound = constants.cheeger * mu * sweep.h_hat ** 2
    return BoundReport(BoundName.CHEEGER.value, inputs, float(bound), float(lam), float(lam - bound),
                       None, mesh_level, Status.INFO.value, "h estimated by sweep cut (upper bound on h)",
                       config_name)

"""Extrinsic quantities of a mesh carrying a curvature field.

Spectral extrema of the Newton tensors, ellipticity, the local bound
h_{r+1}(p, R) on |S_{r+1}| and the extrinsic radius (minimax centre).
"""
import logging

import numpy as np
from scipy import optimize

from fundtone.errors import DomainError, EmptyDomainError
from fundtone.spaceform import AmbientPoint

logger = logging.getLogger(__name__)

MINIMAX_TOL = 1e-6
DESCENT_STEPS = 400
POLISH_POINTS = 64
POLISH_ROUNDS = 6
_SEED = 7


def _check_field(mesh, cf):
    if mesh.n_vertices == 0 or len(cf) == 0:
        raise DomainError("mesh has no vertices")
    if len(cf) != mesh.n_vertices:
        raise DomainError(f"curvature field has {len(cf)} vertices, mesh has {mesh.n_vertices}")


def spectral_extrema(mesh, cf, r):
    """(mu, nu): inf of the smallest and sup of the largest eigenvalue of P_r"""
    _check_field(mesh, cf)
    mu = cf.newton_eigenvalues(r)
    return float(mu.min()), float(mu.max())


def check_ellipticity(mesh, cf, r):
    """(True, margin) when P_r is positive definite on every vertex; margin = mu(P_r)"""
    mu, _ = spectral_extrema(mesh, cf, r)
    return mu > 0, mu


def ball_domain(mesh, cf, p, R):
    """Omega = faces of M inside B(p, R), with the matching restriction of the curvature field"""
    sub, keep = mesh.restrict_to_ball(p, R)
    return sub, cf.subset(keep)


def local_curvature_sup(mesh, cf, p, R, r):
    """h_{r+1}(p, R): max |S_{r+1}| over the vertices in the closed ambient ball B(p, R)"""
    _check_field(mesh, cf)
    if R <= 0:
        raise DomainError(f"ball radius must be positive, got {R}")
    inside = mesh.space_form.in_ball(p, R, mesh.vertices)
    if not inside.any():
        raise EmptyDomainError(f"no vertex lies in the ball of radius {R}")
    values = np.abs(cf.S(r + 1)[inside])
    return float(values.max())


# ----------------------------------------------------------------------
# minimal enclosing ball, c = 0
# ----------------------------------------------------------------------
def _ball_from(fixed):
    pts = np.asarray(fixed)
    if len(pts) == 1:
        return pts[0], 0.0
    if len(pts) == 2:
        c = 0.5 * (pts[0] + pts[1])
        return c, float(np.sum((pts[0] - c) ** 2))
    if len(pts) == 3:
        a, b = pts[1] - pts[0], pts[2] - pts[0]
        axb = np.cross(a, b)
        denom = 2.0 * np.dot(axb, axb)
        if denom < 1e-24 * max(np.dot(a, a), np.dot(b, b)) ** 2:
            return _widest_pair(pts)
        offset = (np.dot(a, a) * np.cross(b, axb) + np.dot(b, b) * np.cross(axb, a)) / denom
        return pts[0] + offset, float(np.dot(offset, offset))
    rows = 2.0 * (pts[1:] - pts[0])
    rhs = np.sum(pts[1:] ** 2, axis=1) - np.sum(pts[0] ** 2)
    if abs(np.linalg.det(rows)) < 1e-14 * np.abs(rows).max() ** 3:
        return _smallest_containing(pts)
    c = np.linalg.solve(rows, rhs)
    return c, float(np.sum((pts[0] - c) ** 2))


def _widest_pair(pts):
    d = np.sum((pts[:, None] - pts[None]) ** 2, axis=-1)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    return _ball_from([pts[i], pts[j]])


def _smallest_containing(pts):
    best = None
    for drop in range(len(pts)):
        c, r2 = _ball_from(np.delete(pts, drop, axis=0))
        if np.all(np.sum((pts - c) ** 2, axis=1) <= r2 * (1 + 1e-10) + 1e-20):
            if best is None or r2 < best[1]:
                best = (c, r2)
    return best if best is not None else _widest_pair(pts)


def _welzl(points, n, fixed):
    if len(fixed) == 4:
        return _ball_from(fixed)
    if fixed:
        c, r2 = _ball_from(fixed)
        i = 0
    else:
        c, r2 = points[0], 0.0
        i = 1
    while i < n:
        d2 = np.sum((points[i:n] - c) ** 2, axis=1)
        outside = np.flatnonzero(d2 > r2 * (1 + 1e-10) + 1e-20)
        if outside.size == 0:
            break
        j = i + int(outside[0])
        c, r2 = _welzl(points, j, fixed + [points[j]])
        i = j + 1
    return c, r2


def minimal_enclosing_ball(points, seed=_SEED):
    """Exact smallest ball around a Euclidean point set (Welzl, randomized order)"""
    points = np.asarray(points, dtype=float)
    order = np.random.default_rng(seed).permutation(len(points))
    c, r2 = _welzl(points[order], len(points), [])
    return np.asarray(c, dtype=float), float(np.sqrt(r2))


# ----------------------------------------------------------------------
# minimax centre, c = +-1
# ----------------------------------------------------------------------
def _max_distance(sf, x, vertices):
    return float(sf._distance(x[None, :], vertices).max())


def _candidates(sf, vertices):
    cands = [v for v in vertices]
    mean = vertices.mean(axis=0)
    if sf.curvature == -1 or np.linalg.norm(mean) > 1e-8:
        cands.append(sf.normalize(mean))
    if sf.curvature == 1:
        _, _, vt = np.linalg.svd(vertices, full_matrices=False)
        pole = vt[-1] / np.linalg.norm(vt[-1])
        cands.extend([pole, -pole])
    return np.array(cands)


def _best_candidate(sf, vertices, chunk=256):
    cands = _candidates(sf, vertices)
    radii = np.empty(len(cands))
    for start in range(0, len(cands), chunk):
        block = cands[start:start + chunk]
        radii[start:start + chunk] = sf._distance(block[:, None, :], vertices[None, :, :]).max(axis=1)
    best = int(np.argmin(radii))
    return cands[best], float(radii[best])


def _descend(sf, x, radius, vertices):
    best_x, best_r = x, radius
    for k in range(DESCENT_STEPS):
        far = vertices[np.argmax(sf._distance(x[None, :], vertices))]
        x = sf.exp_map(x, sf.log_map(x, far) / (k + 2))
        r = _max_distance(sf, x, vertices)
        if r < best_r:
            best_x, best_r = x, r
    return best_x, best_r


def _polish(sf, x, radius, vertices):
    """SLSQP epigraph problem min s s.t. dist(exp_x(B z), y_j) <= s on the farthest points"""
    for _ in range(POLISH_ROUNDS):
        basis = sf.tangent_basis(x)
        dists = sf._distance(x[None, :], vertices)
        active = vertices[np.argsort(dists)[-POLISH_POINTS:]]
        centre = lambda z: sf.exp_map(x, z[:-1] @ basis)  # noqa: E731
        constraint = {"type": "ineq", "fun": lambda z: z[-1] - sf._distance(centre(z)[None, :], active)}
        start = np.concatenate([np.zeros(len(basis)), [radius]])
        res = optimize.minimize(lambda z: z[-1], start, method="SLSQP", constraints=[constraint],
                                options={"ftol": 1e-12, "maxiter": 200})
        candidate = centre(res.x)
        r = _max_distance(sf, candidate, vertices)
        if not r < radius - 1e-14:
            break
        x, radius = candidate, r
    return x, radius


def extrinsic_radius(mesh):
    """(R_e, centre): radius of the smallest ambient ball containing the closed mesh.

    c = 0 uses the exact minimal enclosing ball. For c = +-1 the best of the
    candidate centres seeds a descent stepping toward the farthest vertex with
    step 1/(k + 2), finished by an SLSQP polish.
    """
    if not mesh.is_closed:
        raise DomainError("extrinsic radius is defined for closed meshes only")
    sf = mesh.space_form
    vertices = np.asarray(mesh.vertices[mesh.used_vertices()])
    if sf.curvature == 0:
        centre, radius = minimal_enclosing_ball(vertices)
    else:
        centre, radius = _best_candidate(sf, vertices)
        centre, radius = _descend(sf, centre, radius, vertices)
        centre, radius = _polish(sf, centre, radius, vertices)
        centre = sf.normalize(centre)
    logger.info("extrinsic radius of %s: %.10g", mesh.name or "mesh", radius)
    return radius, AmbientPoint(tuple(centre), sf)

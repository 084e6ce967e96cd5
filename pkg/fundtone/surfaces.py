"""Built-in surface families with closed-form curvature.

Every family returns a ``TriMesh`` generated by icosphere subdivision or a
structured polar/periodic grid at refinement level ``level`` together with a
``CurvatureField`` filled from analytic formulas, so the finite element error
can be studied separately from curvature estimation error.
"""
import logging
import math
from enum import Enum

import numpy as np

from fundtone.curvature import CurvatureField
from fundtone.errors import DomainError
from fundtone.mesh import TriMesh
from fundtone.spaceform import SpaceForm

logger = logging.getLogger(__name__)

_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICOSAHEDRON_VERTICES = np.array([
    (-1, _T, 0), (1, _T, 0), (-1, -_T, 0), (1, -_T, 0),
    (0, -1, _T), (0, 1, _T), (0, -1, -_T), (0, 1, -_T),
    (_T, 0, -1), (_T, 0, 1), (-_T, 0, -1), (-_T, 0, 1),
], dtype=float)
_ICOSAHEDRON_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
], dtype=np.int64)


class SurfaceFamily(str, Enum):
    ROUND_SPHERE = "round_sphere"
    ELLIPSOID = "ellipsoid"
    TORUS = "torus"
    PLANE_DISK = "plane_disk"
    HALF_DISK = "half_disk"
    SPHERICAL_CAP = "spherical_cap"
    GEODESIC_SPHERE_IN_H3 = "geodesic_sphere_in_H3"
    GREAT_SPHERE = "great_sphere"


DEFAULT_PARAMS = {
    SurfaceFamily.ROUND_SPHERE: {"radius": 1.0},
    SurfaceFamily.ELLIPSOID: {"semi_axes": (1.0, 1.0, 2.0)},
    SurfaceFamily.TORUS: {"major": 2.0, "minor": 1.0},
    SurfaceFamily.PLANE_DISK: {"radius": 1.0},
    SurfaceFamily.HALF_DISK: {"radius": 1.0},
    SurfaceFamily.SPHERICAL_CAP: {"theta": math.pi / 4, "ambient": 1, "radius": 1.0},
    SurfaceFamily.GEODESIC_SPHERE_IN_H3: {"radius": 1.0},
    SurfaceFamily.GREAT_SPHERE: {},
}


# ----------------------------------------------------------------------
# mesh generators
# ----------------------------------------------------------------------
def _subdivide(vertices, faces):
    corners = faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    edges, inverse = np.unique(np.sort(corners, axis=1), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1, 3) + len(vertices)
    mids = vertices[edges].mean(axis=1)
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    a, b, c = faces.T
    m01, m12, m20 = inverse.T
    new_faces = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]),
        np.column_stack([m01, m12, m20]),
    ])
    return np.vstack([vertices, mids]), new_faces


def icosphere(level):
    """Unit icosphere with 10 * 4**level + 2 vertices, faces oriented outward"""
    if level < 0:
        raise DomainError(f"refinement level must be non-negative, got {level}")
    vertices = _ICOSAHEDRON_VERTICES / np.linalg.norm(_ICOSAHEDRON_VERTICES, axis=1, keepdims=True)
    faces = _ICOSAHEDRON_FACES.copy()
    for _ in range(level):
        vertices, faces = _subdivide(vertices, faces)
    return vertices, faces


def polar_disk(rings):
    """Hexagonal polar triangulation of the unit disk.

    Returns polar coordinates (s, phi) with s in [0, 1] (ring k sits at
    s = k / rings and carries 6k vertices) and faces counterclockwise in the
    (x, y) plane. V = 3 N (N + 1) + 1, F = 6 N**2.
    """
    if rings < 1:
        raise DomainError("a polar disk needs at least one ring")
    s = [0.0]
    phi = [0.0]
    start = [0]
    for k in range(1, rings + 1):
        start.append(len(s))
        for j in range(6 * k):
            s.append(k / rings)
            phi.append(2.0 * math.pi * j / (6 * k))
    faces = []
    for k in range(1, rings + 1):
        outer = lambda j: start[k] + j % (6 * k)  # noqa: E731
        inner = (lambda j: 0) if k == 1 else (lambda j: start[k - 1] + j % (6 * (k - 1)))  # noqa: E731
        for sector in range(6):
            o = sector * k
            i = sector * (k - 1)
            for t in range(k):
                faces.append((outer(o + t), outer(o + t + 1), inner(i + t)))
            for t in range(k - 1):
                faces.append((inner(i + t), outer(o + t + 1), inner(i + t + 1)))
    return np.array(s), np.array(phi), np.array(faces, dtype=np.int64)


def _disk_rings(level):
    return 5 * 2 ** level


def _torus_grid(level):
    return 6 * 2 ** level, 12 * 2 ** level


def _tangent_frames(normals):
    """Orthonormal e1, e2 completing 3d unit normals"""
    helper = np.eye(3)[np.argmin(np.abs(normals), axis=1)]
    e1 = np.cross(normals, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    return np.stack([e1, e2], axis=1)


def _check_positive(**params):
    for key, value in params.items():
        values = np.atleast_1d(np.asarray(value, dtype=float))
        if not np.all(values > 0):
            raise DomainError(f"{key} must be positive, got {value}")


def _umbilic_field(sf, normals, frames, kappa, points=None):
    kappas = np.full((len(normals), 2), float(kappa))
    return CurvatureField(sf, normals, kappas, frames, points=points)


# ----------------------------------------------------------------------
# families
# ----------------------------------------------------------------------
def round_sphere(level, radius=1.0):
    _check_positive(radius=radius)
    sf = SpaceForm(0)
    unit, faces = icosphere(level)
    normals = -unit
    mesh = TriMesh(radius * unit, faces, sf, level=level, name="round_sphere")
    return mesh, _umbilic_field(sf, normals, _tangent_frames(unit), 1.0 / radius)


def ellipsoid(level, semi_axes=(1.0, 1.0, 2.0)):
    _check_positive(semi_axes=semi_axes)
    axes = np.asarray(semi_axes, dtype=float).reshape(3)
    sf = SpaceForm(0)
    unit, faces = icosphere(level)
    x = unit * axes
    g = x / axes ** 2
    g_norm = np.linalg.norm(g, axis=1)
    outward = g / g_norm[:, None]
    t = _tangent_frames(outward)
    # A = P diag(1/a^2) P / |grad F / 2| for the inward normal
    hess = np.diag(1.0 / axes ** 2)
    shape = np.einsum("vid,de,vje->vij", t, hess, t) / g_norm[:, None, None]
    kappas, vecs = np.linalg.eigh(shape)
    frames = np.einsum("vik,vid->vkd", vecs, t)
    field = CurvatureField(sf, -outward, kappas, frames)
    return TriMesh(x, faces, sf, level=level, name="ellipsoid"), field


def torus(level, major=2.0, minor=1.0):
    _check_positive(major=major, minor=minor)
    if minor >= major:
        raise DomainError(f"torus needs minor < major for an embedding, got {minor} >= {major}")
    sf = SpaceForm(0)
    n_u, n_v = _torus_grid(level)
    u = 2.0 * math.pi * np.arange(n_u) / n_u
    v = 2.0 * math.pi * np.arange(n_v) / n_v
    U, V = np.meshgrid(u, v, indexing="ij")
    U, V = U.ravel(), V.ravel()
    ring = major + minor * np.cos(U)
    x = np.column_stack([ring * np.cos(V), ring * np.sin(V), minor * np.sin(U)])
    index = lambda i, j: (i % n_u) * n_v + (j % n_v)  # noqa: E731
    I, J = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    I, J = I.ravel(), J.ravel()
    a, b, c, d = index(I, J), index(I + 1, J), index(I + 1, J + 1), index(I, J + 1)
    faces = np.concatenate([np.column_stack([a, d, c]), np.column_stack([a, c, b])])
    eta = -np.column_stack([np.cos(U) * np.cos(V), np.cos(U) * np.sin(V), np.sin(U)])
    e_u = np.column_stack([-np.sin(U) * np.cos(V), -np.sin(U) * np.sin(V), np.cos(U)])
    e_v = np.column_stack([-np.sin(V), np.cos(V), np.zeros_like(V)])
    kappas = np.column_stack([np.full_like(U, 1.0 / minor), np.cos(U) / ring])
    field = CurvatureField(sf, eta, kappas, np.stack([e_u, e_v], axis=1))
    return TriMesh(x, faces, sf, level=level, name="torus"), field


def _flat_field(sf, n):
    normals = np.tile([0.0, 0.0, 1.0], (n, 1))
    frames = np.tile(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), (n, 1, 1))
    return _umbilic_field(sf, normals, frames, 0.0)


def plane_disk(level, radius=1.0):
    _check_positive(radius=radius)
    sf = SpaceForm(0)
    s, phi, faces = polar_disk(_disk_rings(level))
    x = np.column_stack([radius * s * np.cos(phi), radius * s * np.sin(phi), np.zeros_like(s)])
    return TriMesh(x, faces, sf, level=level, name="plane_disk"), _flat_field(sf, len(s))


def half_disk(level, radius=1.0):
    disk, field = plane_disk(level, radius=radius)
    centroid_y = disk.vertices[disk.faces][:, :, 1].mean(axis=1)
    mesh, keep = disk.submesh(centroid_y > 0)
    mesh.name = "half_disk"
    return mesh, field.subset(keep)


def spherical_cap(level, theta=math.pi / 4, ambient=1, radius=1.0):
    """Geodesic cap of angular radius theta.

    ambient = 0: cap of the round sphere of the given radius around its
    north pole (0, 0, radius) in R^3.
    ambient = 1: cap around e_0 of the totally geodesic great sphere
    {x_3 = 0} of S^3 (principal curvatures zero).
    """
    _check_positive(theta=theta, radius=radius)
    if theta >= math.pi:
        raise DomainError(f"cap angle must stay below pi, got {theta}")
    s, phi, faces = polar_disk(_disk_rings(level))
    alpha = theta * s
    if ambient == 0:
        sf = SpaceForm(0)
        unit = np.column_stack([np.sin(alpha) * np.cos(phi), np.sin(alpha) * np.sin(phi), np.cos(alpha)])
        mesh = TriMesh(radius * unit, faces, sf, level=level, name="spherical_cap")
        return mesh, _umbilic_field(sf, -unit, _tangent_frames(unit), 1.0 / radius)
    if ambient != 1:
        raise DomainError(f"spherical caps are built in c = 0 or c = 1 ambients, got {ambient}")
    sf = SpaceForm(1)
    zero = np.zeros_like(s)
    x = np.column_stack([np.cos(alpha), np.sin(alpha) * np.cos(phi), np.sin(alpha) * np.sin(phi), zero])
    e_alpha = np.column_stack([-np.sin(alpha), np.cos(alpha) * np.cos(phi), np.cos(alpha) * np.sin(phi), zero])
    e_phi = np.column_stack([zero, -np.sin(phi), np.cos(phi), zero])
    normals = np.tile([0.0, 0.0, 0.0, 1.0], (len(s), 1))
    field = _umbilic_field(sf, normals, np.stack([e_alpha, e_phi], axis=1), 0.0, points=x)
    return TriMesh(x, faces, sf, level=level, name="spherical_cap"), field


def geodesic_sphere_in_H3(level, radius=1.0):
    """Geodesic sphere of radius rho_0 about the hyperboloid apex; k_i = coth rho_0"""
    _check_positive(radius=radius)
    sf = SpaceForm(-1)
    unit, faces = icosphere(level)
    n = len(unit)
    ch, sh = math.cosh(radius), math.sinh(radius)
    x = np.column_stack([np.full(n, ch), sh * unit])
    normals = -np.column_stack([np.full(n, sh), ch * unit])
    frames3 = _tangent_frames(unit)
    frames = np.concatenate([np.zeros((n, 2, 1)), frames3], axis=2)
    field = _umbilic_field(sf, normals, frames, 1.0 / math.tanh(radius), points=x)
    return TriMesh(x, faces, sf, level=level, name="geodesic_sphere_in_H3"), field


def great_sphere(level):
    """Totally geodesic equatorial 2-sphere {x_3 = 0} of S^3"""
    sf = SpaceForm(1)
    unit, faces = icosphere(level)
    n = len(unit)
    x = np.column_stack([unit, np.zeros(n)])
    normals = np.tile([0.0, 0.0, 0.0, 1.0], (n, 1))
    frames = np.concatenate([_tangent_frames(unit), np.zeros((n, 2, 1))], axis=2)
    field = _umbilic_field(sf, normals, frames, 0.0, points=x)
    return TriMesh(x, faces, sf, level=level, name="great_sphere"), field


_BUILDERS = {
    SurfaceFamily.ROUND_SPHERE: round_sphere,
    SurfaceFamily.ELLIPSOID: ellipsoid,
    SurfaceFamily.TORUS: torus,
    SurfaceFamily.PLANE_DISK: plane_disk,
    SurfaceFamily.HALF_DISK: half_disk,
    SurfaceFamily.SPHERICAL_CAP: spherical_cap,
    SurfaceFamily.GEODESIC_SPHERE_IN_H3: geodesic_sphere_in_H3,
    SurfaceFamily.GREAT_SPHERE: great_sphere,
}


def resolve_family(family):
    try:
        return SurfaceFamily(family)
    except ValueError:
        names = ", ".join(f.value for f in SurfaceFamily)
        raise DomainError(f"unknown surface family '{family}' (expected one of {names})") from None


def family_params(family, params=None):
    """Defaults of the family updated with ``params``; unknown keys are rejected"""
    family = resolve_family(family)
    merged = dict(DEFAULT_PARAMS[family])
    for key, value in (params or {}).items():
        if key not in merged:
            raise DomainError(f"{family.value} takes no parameter '{key}'")
        merged[key] = tuple(value) if isinstance(value, list) else value
    return family, merged


def builtin_surface(family, level=3, **params):
    """Mesh and analytic curvature field of a built-in family"""
    family, merged = family_params(family, params)
    if level < 0:
        raise DomainError(f"refinement level must be non-negative, got {level}")
    mesh, field = _BUILDERS[family](level, **merged)
    logger.info("generated %s level %d: %d vertices, %d faces",
                family.value, level, mesh.n_vertices, mesh.n_faces)
    return mesh, field


def anchor_point(family, params=None):
    """Natural ball centre of a family: disk centre, north pole, or cap centre"""
    family, p = family_params(family, params)
    if family in (SurfaceFamily.PLANE_DISK, SurfaceFamily.HALF_DISK):
        return np.zeros(3)
    if family == SurfaceFamily.ROUND_SPHERE:
        return np.array([0.0, 0.0, p["radius"]])
    if family == SurfaceFamily.ELLIPSOID:
        return np.array([0.0, 0.0, float(p["semi_axes"][2])])
    if family == SurfaceFamily.TORUS:
        return np.array([p["major"] + p["minor"], 0.0, 0.0])
    if family == SurfaceFamily.SPHERICAL_CAP:
        if p["ambient"] == 0:
            return np.array([0.0, 0.0, p["radius"]])
        return np.array([1.0, 0.0, 0.0, 0.0])
    if family == SurfaceFamily.GEODESIC_SPHERE_IN_H3:
        return np.array([math.cosh(p["radius"]), 0.0, 0.0, math.sinh(p["radius"])])
    return np.array([0.0, 0.0, 1.0, 0.0])

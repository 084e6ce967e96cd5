"""Per-vertex curvature data of a triangulated surface.

The shape operator is A = -(ambient derivative of eta). It is stored through
its principal curvatures k_1 <= k_2 and principal directions e_1, e_2, so the
vector-valued second fundamental form is recovered as <alpha(X, Y), eta> = <A X, Y>.
"""
import logging

import numpy as np
import scipy.linalg

from fundtone.errors import CurvatureEstimationError, DomainError
from fundtone.spectrum import elementary_symmetric, newton_eigenvalues

logger = logging.getLogger(__name__)

NORMAL_TOL = 1e-10
FRAME_TOL = 1e-8


class CurvatureField:
    """Unit normal, principal curvatures and principal frame at every vertex.

    Parameters
    ----------
    space_form : SpaceForm
    normals : array (V, d)
        Unit normals eta (tangent to the model for c != 0).
    kappas : array (V, 2)
        Principal curvatures, reordered so that k_1 <= k_2.
    frames : array (V, 2, d)
        Principal directions e_1, e_2 matching ``kappas``.
    points : array (V, d), optional
        Vertex positions; when given, tangency to the model is checked too.
    """

    def __init__(self, space_form, normals, kappas, frames, points=None):
        self.space_form = space_form
        normals = np.array(normals, dtype=float)
        kappas = np.array(kappas, dtype=float).reshape(-1, 2)
        frames = np.array(frames, dtype=float).reshape(len(kappas), 2, -1)
        swap = kappas[:, 0] > kappas[:, 1]
        kappas[swap] = kappas[swap][:, ::-1]
        frames[swap] = frames[swap][:, ::-1]
        self.normals = normals
        self.kappas = kappas
        self.frames = frames
        self._check(points)
        for arr in (self.normals, self.kappas, self.frames):
            arr.setflags(write=False)

    def _check(self, points):
        sf = self.space_form
        if not (len(self.normals) == len(self.kappas) == len(self.frames)):
            raise DomainError("normals, curvatures and frames disagree in length")
        if not np.all(np.isfinite(self.kappas)):
            raise DomainError("principal curvatures must be finite")
        e1, e2, eta = self.frames[:, 0], self.frames[:, 1], self.normals
        if np.max(np.abs(sf.inner(eta, eta) - 1.0), initial=0.0) > NORMAL_TOL:
            raise DomainError("normals are not unit vectors")
        worst = max(np.max(np.abs(sf.inner(e1, e2)), initial=0.0),
                    np.max(np.abs(sf.inner(e1, eta)), initial=0.0),
                    np.max(np.abs(sf.inner(e2, eta)), initial=0.0),
                    np.max(np.abs(sf.inner(e1, e1) - 1.0), initial=0.0),
                    np.max(np.abs(sf.inner(e2, e2) - 1.0), initial=0.0))
        if worst > FRAME_TOL:
            raise DomainError(f"principal frame is not orthonormal (defect {worst:.2e})")
        if points is not None and sf.curvature != 0:
            x = np.asarray(points, dtype=float)
            off = max(np.max(np.abs(sf.inner(eta, x)), initial=0.0),
                      np.max(np.abs(sf.inner(e1, x)), initial=0.0),
                      np.max(np.abs(sf.inner(e2, x)), initial=0.0))
            if off > FRAME_TOL:
                raise DomainError(f"normal frame is not tangent to the model (defect {off:.2e})")

    def __len__(self):
        return len(self.kappas)

    # ------------------------------------------------------------------
    # algebra
    # ------------------------------------------------------------------
    def symmetric_functions(self):
        """(V, 3) array of S_0, S_1, S_2"""
        return elementary_symmetric(self.kappas)

    def S(self, r):
        if not 0 <= r <= 2:
            raise DomainError(f"S_r is defined for r in [0, 2] on surfaces, got {r}")
        return self.symmetric_functions()[:, r]

    def newton_eigenvalues(self, r):
        """(V, 2) eigenvalues of P_r along e_1, e_2"""
        return newton_eigenvalues(self.kappas, r)

    def newton_tensor(self, r):
        """(V, 2, 2) matrices of P_r in the principal frame"""
        mu = self.newton_eigenvalues(r)
        out = np.zeros((len(mu), 2, 2))
        out[:, 0, 0] = mu[:, 0]
        out[:, 1, 1] = mu[:, 1]
        return out

    def shape_operator(self):
        """(V, 2, 2) matrices of A in the principal frame"""
        out = np.zeros((len(self), 2, 2))
        out[:, 0, 0] = self.kappas[:, 0]
        out[:, 1, 1] = self.kappas[:, 1]
        return out

    # ------------------------------------------------------------------
    # derived fields
    # ------------------------------------------------------------------
    def subset(self, indices):
        indices = np.asarray(indices)
        return CurvatureField(self.space_form, self.normals[indices], self.kappas[indices],
                              self.frames[indices])

    def scaled(self, t):
        """Curvature field of the homothetic surface t M"""
        return CurvatureField(self.space_form, self.normals, self.kappas / t, self.frames)


# ----------------------------------------------------------------------
# estimation for ingested meshes
# ----------------------------------------------------------------------
def _ring_neighbours(mesh, rings):
    adj = mesh.adjacency()
    reach = adj.copy()
    power = adj.copy()
    for _ in range(rings - 1):
        power = power @ adj
        reach = reach + power
    reach = reach.tocsr()
    return reach


def _local_charts(mesh):
    """Per-vertex chart: tangent basis of the ambient at x (rows) used for normal coordinates"""
    sf = mesh.space_form
    if sf.curvature == 0:
        eye = np.eye(3)
        return [eye] * mesh.n_vertices
    return [sf.tangent_basis(x) for x in mesh.vertices]


def _chart_coords(mesh, i, ids, basis):
    sf = mesh.space_form
    logs = sf.log_map(mesh.vertices[i], mesh.vertices[ids])
    return sf.inner(logs[:, None, :], basis[None, :, :])


def _vertex_normal(mesh, i, basis, vertex_faces):
    """Area weighted normal of the 1-ring in chart coordinates, outward for outward oriented faces"""
    faces = mesh.faces[vertex_faces[i]]
    ids = np.unique(faces)
    local = dict(zip(ids.tolist(), _chart_coords(mesh, i, ids, basis)))
    n = np.zeros(3)
    for a, b, c in faces:
        pa, pb, pc = local[a], local[b], local[c]
        n += 0.5 * np.cross(pb - pa, pc - pa)
    length = np.linalg.norm(n)
    if length == 0:
        raise CurvatureEstimationError(f"vertex {i} has a degenerate 1-ring", vertex=i)
    return n / length


def _fit_quadric(points):
    """Least squares w = A a^2/2 + B a b + C b^2/2 + D a + E b; returns coefficients and rank"""
    a, b, w = points[:, 0], points[:, 1], points[:, 2]
    design = np.column_stack([0.5 * a * a, a * b, 0.5 * b * b, a, b])
    scale = np.maximum(np.abs(design).max(axis=0), 1e-300)
    coef, _, rank, _ = np.linalg.lstsq(design / scale, w, rcond=1e-10)
    return coef / scale, rank


def _frame_from_normal(n):
    helper = np.eye(3)[np.argmin(np.abs(n))]
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


def _estimate_vertex(local_points, normal):
    """Principal curvatures and chart directions from a two pass quadric fit"""
    n = normal
    for sweep in range(2):
        u, v = _frame_from_normal(n)
        coords = local_points @ np.array([u, v, n]).T
        coef, rank = _fit_quadric(coords)
        if rank < 5:
            return None
        A, B, C, D, E = coef
        if sweep == 0:
            tilted = -D * u - E * v + n
            n = tilted / np.linalg.norm(tilted)
    # graph r(a, b) = a u + b v + w(a, b) n at the origin
    first = np.array([[1 + D * D, D * E], [D * E, 1 + E * E]])
    second = np.array([[A, B], [B, C]]) / np.sqrt(1 + D * D + E * E)
    kappas, vecs = scipy.linalg.eigh(second, first)
    surface_normal = -D * u - E * v + n
    surface_normal /= np.linalg.norm(surface_normal)
    e1 = vecs[0, 0] * (u + D * n) + vecs[1, 0] * (v + E * n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(surface_normal, e1)
    return kappas, e1, e2, surface_normal


def estimate_curvature(mesh):
    """Discrete curvature field from least-squares quadric fits.

    The normal comes from area weighted face normals of the 1-ring; the
    shape operator from a quadric fitted to the 2-ring in the tangent frame
    (falling back to the 3-ring when the fit is rank deficient). For c != 0
    the fit runs in normal coordinates (log map) at each vertex, where the
    Christoffel symbols vanish. The normal is oriented against the face
    orientation, so outward oriented closed convex meshes get k_i > 0.
    Accuracy is O(h) in the principal curvatures under uniform refinement.
    """
    sf = mesh.space_form
    charts = _local_charts(mesh)
    rings2 = _ring_neighbours(mesh, 2)
    rings3 = None
    vertex_faces = [[] for _ in range(mesh.n_vertices)]
    for fi, face in enumerate(mesh.faces):
        for vi in face:
            vertex_faces[vi].append(fi)

    d = sf.embedding_dim
    normals = np.zeros((mesh.n_vertices, d))
    kappas = np.zeros((mesh.n_vertices, 2))
    frames = np.zeros((mesh.n_vertices, 2, d))
    fallbacks = 0
    for i in range(mesh.n_vertices):
        basis = charts[i]
        if not vertex_faces[i]:
            raise CurvatureEstimationError(f"vertex {i} belongs to no face", vertex=i)
        eta = -_vertex_normal(mesh, i, basis, vertex_faces)
        result = None
        for depth in (2, 3):
            if depth == 2:
                neighbours = rings2[i].indices
            else:
                if rings3 is None:
                    rings3 = _ring_neighbours(mesh, 3)
                neighbours = rings3[i].indices
                fallbacks += 1
            neighbours = neighbours[neighbours != i]
            if len(neighbours) < 5:
                continue
            result = _estimate_vertex(_chart_coords(mesh, i, neighbours, basis), eta)
            if result is not None:
                break
        if result is None:
            raise CurvatureEstimationError(f"quadric fit at vertex {i} is rank deficient on its 3-ring",
                                           vertex=i)
        k, e1, e2, n = result
        kappas[i] = k
        normals[i] = n @ basis
        frames[i, 0] = e1 @ basis
        frames[i, 1] = e2 @ basis
    if fallbacks:
        logger.warning("curvature fit fell back to the 3-ring at %d vertices", fallbacks)
    logger.info("estimated curvature on %d vertices", mesh.n_vertices)
    return CurvatureField(sf, normals, kappas, frames, points=mesh.vertices)

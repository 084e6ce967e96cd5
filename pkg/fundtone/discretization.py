"""P1 surface finite elements for L_Phi f = div(Phi grad f).

Each triangle is flattened isometrically from its geodesic edge lengths.
Vertex Phi matrices, given in the vertex principal frames, are carried into
the triangle frame by the polar (closest rotation) factor of the frame
overlap and averaged there.
"""
import logging
import os
from dataclasses import dataclass

import numpy as np
import scipy.io
from scipy import sparse

from fundtone.errors import AssemblyError, DomainError, EllipticityError, MeshIOError

logger = logging.getLogger(__name__)

MIN_AREA = 1e-14
SYMMETRY_TOL = 1e-12


class PhiField:
    """Symmetric 2x2 matrices per vertex, expressed in per-vertex tangent frames.

    ``frames`` is None for isotropic fields (multiples of the identity),
    which need no frame transport.
    """

    def __init__(self, matrices, frames=None, name="custom"):
        matrices = np.array(matrices, dtype=float).reshape(-1, 2, 2)
        if not np.all(np.isfinite(matrices)):
            raise DomainError("Phi matrices must be finite")
        asym = np.abs(matrices - np.swapaxes(matrices, 1, 2)).max(initial=0.0)
        if asym > SYMMETRY_TOL * max(1.0, np.abs(matrices).max(initial=0.0)):
            raise DomainError(f"Phi matrices must be symmetric (defect {asym:.2e})")
        matrices = 0.5 * (matrices + np.swapaxes(matrices, 1, 2))
        if frames is None:
            off = np.abs(matrices[:, 0, 1]).max(initial=0.0)
            spread = np.abs(matrices[:, 0, 0] - matrices[:, 1, 1]).max(initial=0.0)
            if max(off, spread) > SYMMETRY_TOL * max(1.0, np.abs(matrices).max(initial=0.0)):
                raise DomainError("an anisotropic Phi field needs tangent frames")
        else:
            frames = np.array(frames, dtype=float).reshape(len(matrices), 2, -1)
        self.matrices = matrices
        self.frames = frames
        self.name = name

    def __len__(self):
        return len(self.matrices)

    @classmethod
    def identity(cls, n_vertices):
        return cls.constant(n_vertices, 1.0, name="identity")

    @classmethod
    def constant(cls, n_vertices, value, name=None):
        matrices = np.zeros((n_vertices, 2, 2))
        matrices[:, 0, 0] = matrices[:, 1, 1] = value
        return cls(matrices, None, name=name or f"{value:g}*identity")

    @classmethod
    def newton(cls, cf, r):
        """P_r of a curvature field, diagonal in its principal frames"""
        return cls(cf.newton_tensor(r), cf.frames, name=f"P_{r}")

    @classmethod
    def custom(cls, matrices, frames=None):
        return cls(matrices, frames, name="custom")

    def scaled(self, t):
        return PhiField(t * self.matrices, self.frames, name=f"{t:g}*{self.name}")

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrices)

    def extrema(self):
        """(mu, nu): global extrema of the vertex eigenvalues"""
        ev = self.eigenvalues()
        return float(ev.min()), float(ev.max())

    def require_positive_definite(self):
        mu, _ = self.extrema()
        if not mu > 0:
            bad = int(np.argmin(self.eigenvalues()[:, 0]))
            raise EllipticityError(f"{self.name} is not positive definite at vertex {bad} (min eigenvalue {mu:.3e})",
                                   which=self.name, margin=mu)
        return mu


@dataclass(frozen=True)
class ElementGeometry:
    """Per-face flattening shared by assembly, divergence and the Cheeger sweep.

    Attributes:
        areas: (F,) areas of the flattened triangles
        planar: (F, 3, 2) corner positions in the triangle frame
        gradients: (F, 3, 2) gradients of the P1 hat functions of the corners
        frames: (F, 2, d) orthonormal triangle frame in the embedding
    """
    areas: np.ndarray
    planar: np.ndarray
    gradients: np.ndarray
    frames: np.ndarray


def element_geometry(mesh):
    lengths = mesh.edge_lengths()
    l0, l1, l2 = lengths.T
    slack = np.minimum.reduce([l1 + l2 - l0, l2 + l0 - l1, l0 + l1 - l2])
    bad = np.flatnonzero(slack < -1e-12 * lengths.max(axis=1))
    if bad.size:
        raise AssemblyError(f"geodesic edge lengths of face {int(bad[0])} violate the triangle inequality",
                            face=int(bad[0]))
    x = np.where(l2 > 0, (l2 ** 2 + l1 ** 2 - l0 ** 2) / (2.0 * np.where(l2 > 0, l2, 1.0)), 0.0)
    y = np.sqrt(np.maximum(l1 ** 2 - x ** 2, 0.0))
    areas = 0.5 * l2 * y
    bad = np.flatnonzero(areas < MIN_AREA)
    if bad.size:
        raise AssemblyError(f"face {int(bad[0])} is degenerate (area {areas[bad[0]]:.3e})", face=int(bad[0]))
    planar = np.zeros((mesh.n_faces, 3, 2))
    planar[:, 1, 0] = l2
    planar[:, 2, 0] = x
    planar[:, 2, 1] = y
    det = l2 * y
    grads = np.zeros((mesh.n_faces, 3, 2))
    grads[:, 1, 0] = y / det
    grads[:, 1, 1] = -x / det
    grads[:, 2, 1] = l2 / det
    grads[:, 0] = -(grads[:, 1] + grads[:, 2])
    return ElementGeometry(areas, planar, grads, _triangle_frames(mesh))


def _triangle_frames(mesh):
    sf = mesh.space_form
    v = mesh.vertices[mesh.faces]
    a = v[:, 1] - v[:, 0]
    b = v[:, 2] - v[:, 0]
    t1 = a / sf.norm(a)[:, None]
    b = b - sf.inner(b, t1)[:, None] * t1
    t2 = b / sf.norm(b)[:, None]
    return np.stack([t1, t2], axis=1)


def frame_transport(mesh, frames, geometry):
    """(F, 3, 2, 2) orthogonal maps from corner frame coordinates to triangle frame coordinates"""
    w = mesh.space_form.weights
    overlap = np.einsum("fid,d,fcjd->fcij", geometry.frames, w, frames[mesh.faces])
    u, _, vt = np.linalg.svd(overlap)
    return u @ vt


def element_phi(mesh, phi, geometry=None):
    """(F, 2, 2) element matrices: vertex Phi carried into each triangle frame and averaged"""
    if len(phi) != mesh.n_vertices:
        raise DomainError(f"Phi field has {len(phi)} vertices, mesh has {mesh.n_vertices}")
    corners = phi.matrices[mesh.faces]
    if phi.frames is None:
        return corners.mean(axis=1)
    geometry = element_geometry(mesh) if geometry is None else geometry
    q = frame_transport(mesh, phi.frames, geometry)
    carried = q @ corners @ np.swapaxes(q, -1, -2)
    out = carried.mean(axis=1)
    return 0.5 * (out + np.swapaxes(out, 1, 2))


@dataclass(frozen=True)
class OperatorPair:
    """Stiffness K and mass M of the weak form, optionally reduced to free vertices

    Attributes:
        K: csr stiffness matrix
        M: csr mass matrix
        dirichlet_mask: boolean mask of removed (boundary) vertices, None if unreduced
        free: indices of the vertices the rows refer to
        n_full: vertex count of the unreduced problem
        lumped: whether M is the lumped diagonal mass
    """
    K: sparse.csr_matrix
    M: sparse.csr_matrix
    dirichlet_mask: np.ndarray = None
    free: np.ndarray = None
    n_full: int = 0
    lumped: bool = False

    @property
    def size(self):
        return self.K.shape[0]

    @property
    def is_reduced(self):
        return self.dirichlet_mask is not None


def _scatter(mesh, local):
    rows = np.repeat(mesh.faces, 3, axis=1).ravel()
    cols = np.tile(mesh.faces, (1, 3)).ravel()
    n = mesh.n_vertices
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh, phi, lump=False):
    """K_Phi and the P1 mass matrix (consistent, or lumped when ``lump``)"""
    unused = np.setdiff1d(np.arange(mesh.n_vertices), mesh.used_vertices())
    if unused.size:
        raise AssemblyError(f"vertex {int(unused[0])} belongs to no face")
    geometry = element_geometry(mesh)
    phi_e = element_phi(mesh, phi, geometry)
    g = geometry.gradients
    local_k = geometry.areas[:, None, None] * np.einsum("fia,fab,fjb->fij", g, phi_e, g)
    local_k = 0.5 * (local_k + np.swapaxes(local_k, 1, 2))
    K = _scatter(mesh, local_k)
    if lump:
        M = sparse.diags(np.bincount(mesh.faces.ravel(), weights=np.repeat(geometry.areas / 3.0, 3),
                                     minlength=mesh.n_vertices)).tocsr()
    else:
        local_m = (geometry.areas / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
        M = _scatter(mesh, local_m)
    logger.info("assembled %s operator on %d vertices (%d nonzeros)", phi.name, mesh.n_vertices, K.nnz)
    return OperatorPair(K, M, None, np.arange(mesh.n_vertices), mesh.n_vertices, lump)


def apply_dirichlet(op, mesh):
    """Drop the boundary rows and columns; the free index map is kept for reinsertion"""
    boundary = np.asarray(mesh.boundary_vertex_flags)
    if not boundary.any():
        raise DomainError("Dirichlet problem needs a boundary; the mesh is closed")
    free = np.flatnonzero(~boundary)
    if free.size == 0:
        raise DomainError("Dirichlet problem has no interior vertices")
    K = op.K[free][:, free].tocsr()
    M = op.M[free][:, free].tocsr()
    logger.debug("Dirichlet reduction %d -> %d unknowns", mesh.n_vertices, free.size)
    return OperatorPair(K, M, boundary.copy(), free, mesh.n_vertices, op.lumped)


def lumped_mass(op):
    return np.asarray(op.M.sum(axis=1)).ravel()


def export_matrix_market(op, directory):
    """Write K.mtx and M.mtx (symmetric coordinate format) into ``directory``"""
    try:
        os.makedirs(directory, exist_ok=True)
        paths = []
        for name, matrix in (("K", op.K), ("M", op.M)):
            path = os.path.join(directory, f"{name}.mtx")
            scipy.io.mmwrite(path, sparse.coo_matrix(matrix), symmetry="symmetric")
            paths.append(path)
    except OSError as exc:
        raise MeshIOError(f"cannot write MatrixMarket files to {directory}: {exc}") from exc
    return paths

"""Triangulated surfaces M^2 in a three dimensional space form."""
import logging

import numpy as np
from scipy import sparse

from fundtone.errors import DomainError, EmptyDomainError
from fundtone.spaceform import SpaceForm

logger = logging.getLogger(__name__)


class TriMesh:
    """An oriented triangle mesh whose vertices live in a space form.

    Parameters
    ----------
    vertices : array of shape (V, d)
        Embedding coordinates, d = 3 for c = 0 and d = 4 for c = +-1.
    faces : int array of shape (F, 3)
        Vertex indices; every interior edge must appear once in each direction.
    space_form : SpaceForm
        Ambient model the vertices belong to.
    level : int, optional
        Refinement level the mesh was generated at (reported, not used).

    The arrays are made read-only; derived meshes come from ``submesh``,
    ``restrict_to_ball`` and ``scaled``.
    """

    def __init__(self, vertices, faces, space_form, level=None, name=None):
        if space_form.ambient_dim != 3:
            raise DomainError("only surfaces in three dimensional space forms are meshed")
        self.space_form = space_form
        self.vertices = space_form.validate(np.array(vertices, dtype=float))
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        self.level = level
        self.name = name
        self._validate_faces()
        self._edges, self._edge_face_count = self._count_edges()
        self.boundary_vertex_flags = np.zeros(len(self.vertices), dtype=bool)
        boundary_edges = self._edges[self._edge_face_count == 1]
        self.boundary_vertex_flags[boundary_edges.ravel()] = True
        for arr in (self.vertices, self.faces, self.boundary_vertex_flags):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"TriMesh(name={self.name!r}, c={self.space_form.curvature}, "
                f"V={self.n_vertices}, F={self.n_faces}, level={self.level})")

    # ------------------------------------------------------------------
    # topology
    # ------------------------------------------------------------------
    def _validate_faces(self):
        f = self.faces
        if f.size == 0:
            raise EmptyDomainError("mesh has no faces")
        if f.min() < 0 or f.max() >= len(self.vertices):
            raise DomainError("face references a vertex index out of range")
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if np.any(repeated):
            raise DomainError(f"face {int(np.flatnonzero(repeated)[0])} repeats a vertex")
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        _, counts = np.unique(directed, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise DomainError("inconsistent orientation or non-manifold edge")

    def _count_edges(self):
        f = self.faces
        undirected = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        edges, counts = np.unique(undirected, axis=0, return_counts=True)
        return edges, counts

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def edges(self):
        return self._edges

    def boundary_edges(self):
        return self._edges[self._edge_face_count == 1]

    @property
    def is_closed(self):
        return not self.boundary_vertex_flags.any()

    @property
    def interior_vertices(self):
        return np.flatnonzero(~self.boundary_vertex_flags)

    def euler_characteristic(self):
        return self.n_vertices - len(self._edges) + self.n_faces

    def used_vertices(self):
        return np.unique(self.faces)

    def adjacency(self):
        """Symmetric vertex adjacency as a sparse boolean-valued csr matrix"""
        e = self._edges
        n = self.n_vertices
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    # ------------------------------------------------------------------
    # metric
    # ------------------------------------------------------------------
    def edge_lengths(self):
        """Geodesic edge lengths per face; column i is the edge opposite corner i"""
        v = self.vertices[self.faces]
        dist = self.space_form._distance
        return np.column_stack([
            dist(v[:, 1], v[:, 2]),
            dist(v[:, 2], v[:, 0]),
            dist(v[:, 0], v[:, 1]),
        ])

    def face_areas(self):
        """Areas of the flattened triangles (Kahan's stable Heron formula)"""
        lengths = np.sort(self.edge_lengths(), axis=1)[:, ::-1]
        a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
        prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
        return 0.25 * np.sqrt(np.maximum(prod, 0.0))

    def total_area(self):
        return float(self.face_areas().sum())

    def h_max(self):
        return float(self.edge_lengths().max())

    # ------------------------------------------------------------------
    # derived meshes
    # ------------------------------------------------------------------
    def submesh(self, face_mask):
        """Mesh made of the selected faces, plus the kept original vertex indices"""
        face_mask = np.asarray(face_mask, dtype=bool)
        if not face_mask.any():
            raise EmptyDomainError("face selection is empty")
        faces = self.faces[face_mask]
        keep = np.unique(faces)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        sub = TriMesh(self.vertices[keep], remap[faces], self.space_form,
                      level=self.level, name=self.name)
        return sub, keep

    def restrict_to_ball(self, p, R):
        """Faces whose three vertices lie in the closed ball B(p, R)"""
        if R <= 0:
            raise DomainError(f"ball radius must be positive, got {R}")
        inside = self.space_form.in_ball(p, R, self.vertices)
        face_mask = inside[self.faces].all(axis=1)
        if not face_mask.any():
            raise EmptyDomainError(f"no face lies inside the ball of radius {R}")
        logger.debug("ball of radius %.4g keeps %d of %d faces", R, face_mask.sum(), self.n_faces)
        return self.submesh(face_mask)

    def scaled(self, t):
        """Homothety x -> t x of a Euclidean mesh"""
        if self.space_form.curvature != 0:
            raise DomainError("only Euclidean meshes can be scaled")
        if t <= 0:
            raise DomainError(f"scale factor must be positive, got {t}")
        return TriMesh(t * self.vertices, self.faces, self.space_form, level=self.level, name=self.name)


def euclidean_mesh(vertices, faces, **kwargs):
    return TriMesh(vertices, faces, SpaceForm(0), **kwargs)

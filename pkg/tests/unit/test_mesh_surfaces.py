"""
Test triangle meshes and the built-in surface families

Tests:
- Mesh validation (indices, orientation, degenerate faces)
- Topology: boundary, Euler characteristic, counts per level
- Metric: geodesic edge lengths and areas
- Derived meshes: submesh, ball restriction, scaling
- Family parameters and analytic curvature
"""
import math

import numpy as np
import pytest

from fundtone.errors import DomainError, EmptyDomainError
from fundtone.mesh import TriMesh, euclidean_mesh
from fundtone.spaceform import SpaceForm
from fundtone.surfaces import (SurfaceFamily, anchor_point, builtin_surface, family_params, icosphere,
                               polar_disk)

RIGHT_TRIANGLE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@pytest.mark.unit
class TestTriMesh:
    """Test suite for TriMesh validation and topology"""

    def test_single_triangle(self):
        mesh = euclidean_mesh(RIGHT_TRIANGLE, [[0, 1, 2]])
        assert mesh.n_vertices == 3
        assert mesh.n_faces == 1
        assert not mesh.is_closed
        assert mesh.interior_vertices.size == 0
        assert mesh.total_area() == pytest.approx(0.5)
        assert mesh.euler_characteristic() == 1

    def test_arrays_are_read_only(self):
        mesh = euclidean_mesh(RIGHT_TRIANGLE, [[0, 1, 2]])
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0

    @pytest.mark.edge_case
    def test_index_out_of_range(self):
        with pytest.raises(DomainError, match="out of range"):
            euclidean_mesh(RIGHT_TRIANGLE, [[0, 1, 3]])

    @pytest.mark.edge_case
    def test_repeated_vertex(self):
        with pytest.raises(DomainError, match="repeats a vertex"):
            euclidean_mesh(RIGHT_TRIANGLE, [[0, 1, 1]])

    @pytest.mark.edge_case
    def test_inconsistent_orientation(self):
        square = np.vstack([RIGHT_TRIANGLE, [[1.0, 1.0, 0.0]]])
        with pytest.raises(DomainError, match="orientation"):
            euclidean_mesh(square, [[0, 1, 2], [1, 2, 3]])

    @pytest.mark.edge_case
    def test_no_faces(self):
        with pytest.raises(EmptyDomainError):
            euclidean_mesh(RIGHT_TRIANGLE, np.zeros((0, 3), dtype=int))

    @pytest.mark.edge_case
    def test_vertices_off_the_model(self):
        with pytest.raises(DomainError):
            TriMesh(np.ones((3, 4)), [[0, 1, 2]], SpaceForm(1))

    def test_edge_lengths_are_geodesic_on_the_sphere(self):
        vertices = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0]])
        mesh = TriMesh(vertices, [[0, 1, 2]], SpaceForm(1))
        assert np.allclose(mesh.edge_lengths(), math.pi / 2)

    def test_adjacency_is_symmetric(self, unit_sphere):
        mesh, _ = unit_sphere
        adj = mesh.adjacency()
        assert (adj != adj.T).nnz == 0
        assert adj.sum() == 2 * len(mesh.edges())


@pytest.mark.unit
class TestGenerators:
    """Test suite for icosphere and polar disk generators"""

    @pytest.mark.parametrize("level", [0, 1, 2, 3])
    def test_icosphere_counts(self, level):
        vertices, faces = icosphere(level)
        assert len(vertices) == 10 * 4 ** level + 2
        assert len(faces) == 20 * 4 ** level
        assert np.allclose(np.linalg.norm(vertices, axis=1), 1.0)

    def test_icosphere_faces_point_outward(self):
        vertices, faces = icosphere(2)
        v = vertices[faces]
        normals = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        assert np.all(np.einsum("fd,fd->f", normals, v.mean(axis=1)) > 0)

    @pytest.mark.parametrize("rings", [1, 2, 5])
    def test_polar_disk_counts(self, rings):
        s, phi, faces = polar_disk(rings)
        assert len(s) == 3 * rings * (rings + 1) + 1
        assert len(faces) == 6 * rings ** 2

    @pytest.mark.edge_case
    def test_negative_level(self):
        with pytest.raises(DomainError):
            icosphere(-1)


@pytest.mark.unit
class TestFamilies:
    """Test suite for built-in surface families"""

    def test_round_sphere_level_3_has_642_vertices(self):
        mesh, cf = builtin_surface("round_sphere", 3, radius=1.0)
        assert mesh.n_vertices == 642
        assert mesh.is_closed
        assert mesh.euler_characteristic() == 2
        assert np.allclose(cf.kappas, 1.0)

    def test_sphere_area_converges(self):
        areas = [builtin_surface("round_sphere", level)[0].total_area() for level in (1, 2, 3)]
        errors = [4 * math.pi - a for a in areas]
        assert all(e > 0 for e in errors)
        assert errors[2] < errors[1] < errors[0]
        assert errors[2] / (4 * math.pi) < 0.01

    def test_plane_disk_has_a_rim(self, unit_disk):
        mesh, cf = unit_disk
        rim = mesh.vertices[mesh.boundary_vertex_flags]
        assert len(rim) == 6 * 10
        assert np.allclose(np.linalg.norm(rim, axis=1), 1.0)
        assert mesh.euler_characteristic() == 1
        assert np.allclose(cf.kappas, 0.0)

    def test_torus_is_genus_one(self, torus_21):
        mesh, cf = torus_21
        assert mesh.is_closed
        assert mesh.euler_characteristic() == 0
        # outer equator k = (1, 1/3), inner equator k = (-1, 1)
        assert cf.kappas.min() == pytest.approx(-1.0)
        assert cf.kappas.max() == pytest.approx(1.0)

        print(f"\n✅ Torus: V={mesh.n_vertices}, F={mesh.n_faces}, chi=0")

    def test_half_disk_is_half_of_the_disk(self):
        disk, _ = builtin_surface("plane_disk", 1)
        half, cf = builtin_surface("half_disk", 1)
        assert half.total_area() == pytest.approx(disk.total_area() / 2, rel=1e-12)
        assert len(cf) == half.n_vertices
        assert np.all(half.vertices[:, 1] >= -1e-12)

    def test_spherical_cap_in_s3(self):
        mesh, cf = builtin_surface("spherical_cap", 1, theta=math.pi / 4, ambient=1)
        assert mesh.space_form.curvature == 1
        d = mesh.space_form.distance(anchor_point("spherical_cap", {"ambient": 1}), mesh.vertices)
        assert d.max() == pytest.approx(math.pi / 4, abs=1e-12)
        assert np.allclose(cf.kappas, 0.0)

    def test_geodesic_sphere_in_h3(self, h3_sphere):
        mesh, cf = h3_sphere
        d = mesh.space_form.distance(mesh.space_form.origin(), mesh.vertices)
        assert np.allclose(d, 1.0, atol=1e-12)
        assert np.allclose(cf.kappas, 1.0 / math.tanh(1.0))

    def test_ellipsoid_curvature_range(self, ellipsoid_112):
        _, cf = ellipsoid_112
        # closed form: k ranges over [a/c^2, c/a^2] = [0.25, 2]
        assert cf.kappas.min() >= 0.25 - 1e-12
        assert cf.kappas.max() <= 2.0 + 1e-12
        # the pole is a vertex from level 1 on
        assert cf.kappas.max() == pytest.approx(2.0)

    @pytest.mark.edge_case
    def test_unknown_family(self):
        with pytest.raises(DomainError, match="unknown surface family"):
            builtin_surface("klein_bottle", 1)

    @pytest.mark.edge_case
    def test_unknown_parameter(self):
        with pytest.raises(DomainError, match="no parameter"):
            builtin_surface("round_sphere", 1, major=2.0)

    @pytest.mark.edge_case
    @pytest.mark.parametrize("family, params", [
        ("round_sphere", {"radius": -1.0}),
        ("torus", {"major": 1.0, "minor": 2.0}),
        ("spherical_cap", {"theta": 4.0}),
        ("spherical_cap", {"ambient": -1}),
        ("ellipsoid", {"semi_axes": (1.0, 0.0, 1.0)}),
    ])
    def test_invalid_parameters(self, family, params):
        with pytest.raises(DomainError):
            builtin_surface(family, 0, **params)

    def test_family_params_merges_defaults(self):
        family, params = family_params("ellipsoid", {"semi_axes": [1, 2, 3]})
        assert family is SurfaceFamily.ELLIPSOID
        assert params == {"semi_axes": (1, 2, 3)}

    def test_every_family_builds(self):
        for family in SurfaceFamily:
            mesh, cf = builtin_surface(family, 0)
            assert len(cf) == mesh.n_vertices
            assert mesh.n_faces > 0


@pytest.mark.unit
class TestDerivedMeshes:
    """Test suite for submesh, ball restriction and scaling"""

    def test_restrict_to_ball_keeps_the_cap(self, unit_sphere):
        mesh, _ = unit_sphere
        cap, keep = mesh.restrict_to_ball([0.0, 0.0, 1.0], 0.8)
        assert not cap.is_closed
        assert np.all(np.linalg.norm(mesh.vertices[keep] - [0, 0, 1], axis=1) <= 0.8 + 1e-12)
        assert np.array_equal(cap.vertices, mesh.vertices[keep])

    @pytest.mark.edge_case
    def test_empty_ball(self, unit_sphere):
        mesh, _ = unit_sphere
        with pytest.raises(EmptyDomainError):
            mesh.restrict_to_ball([0.0, 0.0, 5.0], 0.5)

    @pytest.mark.edge_case
    def test_nonpositive_radius(self, unit_sphere):
        mesh, _ = unit_sphere
        with pytest.raises(DomainError):
            mesh.restrict_to_ball([0.0, 0.0, 1.0], 0.0)

    def test_scaled_mesh(self, unit_sphere):
        mesh, _ = unit_sphere
        big = mesh.scaled(2.0)
        assert big.total_area() == pytest.approx(4 * mesh.total_area())

    @pytest.mark.edge_case
    def test_scaling_a_spherical_mesh(self, great_sphere_s3):
        mesh, _ = great_sphere_s3
        with pytest.raises(DomainError):
            mesh.scaled(2.0)

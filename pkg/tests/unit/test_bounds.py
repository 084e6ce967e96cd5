"""
Test fundamental tone lower bounds

Tests:
- Ball bound formulas (items i, ii, iii) and their windows
- Extrinsic radius floors, exactly for spheres
- Barta bound with the canonical and eigenfunction test fields
- Comparison and Phi sandwich estimates
- Cheeger sweep and Cheeger check
- BoundReport bookkeeping and formula mutation
- Scaling covariance of eigenvalues, curvature inputs and the ball bound
"""
import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from fundtone.bounds import (BoundName, BoundReport, FormulaConstants, Status, VertexVectorField, barta_bound,
                             barta_pointwise, best_extrinsic_floor, canonical_test_field, cheeger_lower_bound_check,
                             cheeger_sweep, comparison_bound, eigenfunction_field, extrinsic_radius_floor,
                             fundamental_tone, lambda_r_constant, phi_sandwich, solve_problem, thm32_bound)
from fundtone.discretization import PhiField
from fundtone.eigensolve import expand
from fundtone.errors import ConfigError, DegenerateSweepError, DomainError, EllipticityError
from fundtone.geometry import local_curvature_sup
from fundtone.surfaces import builtin_surface


@pytest.mark.unit
class TestBallBound:
    """Test suite for the three items of the ball bound"""

    def test_flat_disk(self):
        ball = thm32_bound(0, 0, 1.0, 1.0, 0.0)
        assert ball.bound == pytest.approx(4.0)
        assert ball.admissible
        assert ball.item == BoundName.THM32_III.value
        assert math.isinf(ball.window)

    def test_unit_sphere_cap_through_an_extrinsic_ball(self):
        ball = thm32_bound(0, 0, 0.5, 1.0, 2.0)
        assert ball.bound == pytest.approx(8.0)
        assert ball.admissible
        assert ball.item == BoundName.THM32_II.value
        assert ball.window == pytest.approx(1.0)

    def test_totally_geodesic_cap_in_s3(self):
        ball = thm32_bound(1, 0, math.pi / 4, 1.0, 0.0)
        assert ball.bound == pytest.approx(16.0 / math.pi)
        assert ball.admissible
        assert ball.item == BoundName.THM32_I.value
        assert ball.window == pytest.approx(math.pi / 2)

    def test_window_in_the_sphere(self):
        # arccot((r + 1) h / ((n - r) inf S_r)) = arccot(1) = pi / 4
        ball = thm32_bound(1, 0, 0.7, 1.0, 2.0)
        assert ball.window == pytest.approx(math.pi / 4)
        assert ball.admissible
        assert not thm32_bound(1, 0, 0.8, 1.0, 2.0).admissible

    def test_admissible_bounds_are_positive(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            c = int(rng.choice([1, 0, -1]))
            r = int(rng.integers(0, 2))
            inf_sr, h = rng.uniform(0.1, 3.0), rng.uniform(0.0, 3.0)
            R = rng.uniform(0.01, 1.5)
            ball = thm32_bound(c, r, R, inf_sr, h)
            if ball.admissible:
                assert ball.bound > 0

    def test_window_is_strict(self):
        ball = thm32_bound(0, 0, 1.0, 1.0, 2.0)
        assert ball.window == pytest.approx(1.0)
        assert not ball.admissible

    def test_constants_scale_the_bound(self):
        mutated = FormulaConstants().mutated("thm32")
        assert thm32_bound(0, 0, 1.0, 1.0, 0.0, constants=mutated).bound == pytest.approx(40.0)

    @pytest.mark.edge_case
    def test_non_positive_inf_sr(self):
        with pytest.raises(EllipticityError):
            thm32_bound(0, 1, 0.5, 0.0, 1.0)

    @pytest.mark.edge_case
    @pytest.mark.parametrize("args", [(0, 2, 1.0, 1.0, 0.0), (0, 0, 0.0, 1.0, 0.0), (0, 0, 1.0, 1.0, -1.0)])
    def test_invalid_arguments(self, args):
        with pytest.raises(DomainError):
            thm32_bound(*args)


@pytest.mark.unit
class TestExtrinsicFloor:
    """Test suite for the extrinsic radius floors"""

    def test_sphere_of_radius_two(self):
        assert lambda_r_constant(0, 0, 2, 1.0, 1.0) == pytest.approx(2.0)

    def test_sharp_on_round_spheres_exactly(self):
        for n in range(1, 7):
            for rho in (Fraction(1, 2), Fraction(1), Fraction(7, 3)):
                S = [comb(n, r) / rho ** r for r in range(n + 1)]
                for r in range(n):
                    assert lambda_r_constant(0, r, n, S[r], S[r + 1]) == rho
                    assert lambda_r_constant(-1, r, n, S[r], S[r + 1]) == rho

    def test_pi_over_two_floor_in_the_sphere(self):
        assert extrinsic_radius_floor(1, 0, 2, 1.0, 0.0) == pytest.approx(math.pi / 2)
        assert lambda_r_constant(1, 0, 2, 1.0, 1e-12) == pytest.approx(math.pi / 2)

    def test_best_floor_over_r(self):
        kappas = np.array([[0.5, 0.5], [0.5, 1.0]])
        floor = best_extrinsic_floor(0, kappas, 1)
        candidates = [lambda_r_constant(0, 0, 2, 1.0, 1.5), lambda_r_constant(0, 1, 2, 1.0, 0.5)]
        assert floor == pytest.approx(max(candidates))

    @pytest.mark.edge_case
    def test_needs_positive_mean_curvature(self):
        with pytest.raises(DomainError):
            lambda_r_constant(0, 0, 2, 1.0, 0.0)
        with pytest.raises(DomainError):
            best_extrinsic_floor(0, np.array([[-1.0, 1.0]]), 0)


@pytest.mark.unit
class TestBarta:
    """Test suite for the Barta bound on flat disks and caps"""

    def test_canonical_field_on_the_disk(self, unit_disk, test_config):
        mesh, cf = unit_disk
        phi = PhiField.identity(mesh.n_vertices)
        X = canonical_test_field(mesh, cf, np.zeros(3), 1.0)
        bound = barta_bound(mesh, phi, X)
        lam = fundamental_tone(mesh, phi, "dirichlet", test_config)
        # continuous infimum is 4 at the centre
        assert bound == pytest.approx(4.0, rel=0.05)
        assert bound <= lam

        print(f"\n✅ Barta bound {bound:.4f} <= lambda_1 {lam:.4f}")

    def test_eigenfunction_field_gives_equality(self, unit_disk, test_config):
        mesh, cf = unit_disk
        phi = PhiField.identity(mesh.n_vertices)
        result, op = solve_problem(mesh, phi, "dirichlet", config=test_config)
        X0 = eigenfunction_field(mesh, cf, expand(result, op)[:, 0])
        values = barta_pointwise(mesh, phi, X0)
        assert np.allclose(values, result.fundamental_tone, rtol=1e-6)

    def test_canonical_field_on_the_s3_cap(self, test_config):
        mesh, cf = builtin_surface("spherical_cap", 1, theta=math.pi / 4, ambient=1)
        phi = PhiField.newton(cf, 0)
        X = canonical_test_field(mesh, cf, [1.0, 0.0, 0.0, 0.0], math.pi / 4)
        assert barta_bound(mesh, phi, X) <= fundamental_tone(mesh, phi, "dirichlet", test_config)

    def test_zero_field_gives_zero(self, unit_disk):
        mesh, cf = unit_disk
        values = barta_pointwise(mesh, PhiField.identity(mesh.n_vertices), VertexVectorField.zero(cf))
        assert np.allclose(values, 0.0)

    def test_canonical_field_points_away_from_the_centre(self, unit_disk):
        mesh, cf = unit_disk
        X = canonical_test_field(mesh, cf, np.zeros(3), 1.0)
        inside = mesh.interior_vertices
        ambient = np.einsum("va,vad->vd", X.values, cf.frames)
        # X = 2 rho grad rho / (R^2 - rho^2)
        assert np.all(np.einsum("vd,vd->v", ambient[inside], mesh.vertices[inside]) >= -1e-12)
        assert X.potential[inside].min() > 0

    @pytest.mark.edge_case
    def test_ball_too_small_for_the_domain(self, unit_disk):
        mesh, cf = unit_disk
        with pytest.raises(DomainError, match="not inside the ball"):
            canonical_test_field(mesh, cf, np.zeros(3), 0.5)

    @pytest.mark.edge_case
    def test_requires_positive_definite_phi(self, torus_21):
        mesh, cf = torus_21
        with pytest.raises(EllipticityError):
            barta_bound(mesh, PhiField.newton(cf, 1), VertexVectorField.zero(cf))


@pytest.mark.unit
class TestComparisonAndSandwich:
    """Test suite for operator comparison estimates"""

    def test_sphere_of_radius_two_l1_is_half_the_laplacian(self, test_config):
        mesh, cf = builtin_surface("round_sphere", 2, radius=2.0)
        result = comparison_bound(mesh, cf, 1, 0, test_config)
        assert result.factor == pytest.approx(0.5)
        assert result.lhs == pytest.approx(result.rhs, rel=1e-6)
        assert result.passed

    def test_ellipsoid_strict_inequalities(self, test_config):
        mesh, cf = builtin_surface("ellipsoid", 2, semi_axes=(1.0, 1.0, 1.5))
        result = comparison_bound(mesh, cf, 1, 0, test_config, allowance=0.0)
        assert result.passed
        assert result.rhs < result.lhs < result.upper

        print(f"\n✅ {result.rhs:.4f} < lambda(L_1) = {result.lhs:.4f} < {result.upper:.4f}")

    def test_sandwich_with_p1_on_the_ellipsoid(self, ellipsoid_112, test_config):
        mesh, cf = ellipsoid_112
        result = phi_sandwich(mesh, PhiField.newton(cf, 1), test_config, allowance=0.0)
        assert result.passed
        assert result.mu * result.lambda_delta < result.lambda_phi < result.nu * result.lambda_delta

    def test_sandwich_with_a_fixed_frame_on_the_disk(self, unit_disk, test_config):
        mesh, cf = unit_disk
        matrices = np.tile(np.diag([1.0, 2.0]), (mesh.n_vertices, 1, 1))
        phi = PhiField.custom(matrices, cf.frames)
        result = phi_sandwich(mesh, phi, test_config, allowance=0.0)
        assert (result.mu, result.nu) == pytest.approx((1.0, 2.0))
        assert result.passed
        assert result.lambda_delta < result.lambda_phi < 2.0 * result.lambda_delta

    @pytest.mark.edge_case
    def test_torus_is_not_elliptic_for_l1(self, torus_21, test_config):
        mesh, cf = torus_21
        with pytest.raises(EllipticityError) as excinfo:
            comparison_bound(mesh, cf, 1, 0, test_config)
        assert excinfo.value.which == "P_1"

    @pytest.mark.edge_case
    def test_mutated_comparison_fails(self, test_config):
        mesh, cf = builtin_surface("round_sphere", 1, radius=2.0)
        result = comparison_bound(mesh, cf, 1, 0, test_config, FormulaConstants().mutated("comparison"))
        assert not result.passed


@pytest.mark.unit
class TestCheeger:
    """Test suite for the sweep cut and the Cheeger check"""

    def test_coordinate_sweep_on_the_unit_sphere(self, fine_sphere):
        mesh, _ = fine_sphere
        sweep = cheeger_sweep(mesh, mesh.vertices[:, 2])
        assert sweep.h_hat == pytest.approx(1.0, rel=0.03)
        assert abs(sweep.threshold) < 0.1
        assert sum(sweep.side_volumes) == pytest.approx(mesh.total_area(), rel=1e-9)
        assert len(sweep.cut_edges) > 0

        print(f"\n✅ Sweep cut h_hat = {sweep.h_hat:.5f} at t = {sweep.threshold:.4f}")

    def test_scales_like_one_over_radius(self):
        mesh, _ = builtin_surface("round_sphere", 3, radius=2.0)
        sweep = cheeger_sweep(mesh, mesh.vertices[:, 0])
        assert sweep.h_hat == pytest.approx(0.5, rel=0.03)

    def test_elongated_ellipsoid_has_a_cheaper_cut(self, fine_sphere):
        sphere, _ = fine_sphere
        long_mesh, _ = builtin_surface("ellipsoid", 3, semi_axes=(1.0, 1.0, 3.0))
        h_sphere = cheeger_sweep(sphere, sphere.vertices[:, 2]).h_hat
        h_long = cheeger_sweep(long_mesh, long_mesh.vertices[:, 2]).h_hat
        assert h_long < h_sphere

    def test_check_with_exact_constant(self, unit_sphere, test_config):
        mesh, cf = unit_sphere
        for r in (0, 1):
            report = cheeger_lower_bound_check(mesh, cf, r, h_exact=1.0, config=test_config)
            assert report.status == Status.PASS.value
            assert report.bound_value == pytest.approx(0.25)
            assert report.computed_lambda == pytest.approx(2.0, rel=0.05)

    def test_check_without_exact_constant_is_informational(self, ellipsoid_112, test_config):
        mesh, cf = ellipsoid_112
        report = cheeger_lower_bound_check(mesh, cf, 0, config=test_config)
        assert report.status == Status.INFO.value
        assert report.passed is None
        assert report.inputs["h_hat"] > 0
        assert not report.is_failure

    @pytest.mark.edge_case
    def test_constant_function(self, unit_sphere):
        mesh, _ = unit_sphere
        with pytest.raises(DegenerateSweepError):
            cheeger_sweep(mesh, np.ones(mesh.n_vertices))

    @pytest.mark.edge_case
    def test_open_mesh(self, unit_disk):
        mesh, _ = unit_disk
        with pytest.raises(DomainError):
            cheeger_sweep(mesh, mesh.vertices[:, 0])


@pytest.mark.unit
class TestBoundReport:
    """Test suite for report bookkeeping"""

    def test_pass_and_fail(self):
        ok = BoundReport.check("thm32_iii", {}, 4.0, 5.78)
        assert ok.passed and ok.status == "pass"
        assert ok.margin == pytest.approx(1.78)
        bad = BoundReport.check("barta", {}, 6.0, 5.78)
        assert bad.is_failure
        assert bad.status == "fail"

    def test_relative_tolerance(self):
        assert BoundReport.check("barta", {}, 5.0 + 1e-7, 5.0, tol=1e-6).passed
        assert not BoundReport.check("barta", {}, 5.1, 5.0, tol=1e-6).passed

    def test_skipped(self):
        report = BoundReport.skipped("comparison_rs", {"r": 1}, "ellipticity", config="torus")
        assert report.status == "skipped"
        assert report.passed is None
        assert report.bound_value is None
        assert not report.is_failure

    def test_to_dict_uses_pass_key(self):
        record = BoundReport.check("cheeger", {"r": 0}, 0.25, 2.0, mesh_level=2, config="sphere").to_dict()
        assert record["pass"] is True
        assert "passed" not in record
        assert record["bound_name"] == "cheeger"
        assert record["mesh_level"] == 2

    @pytest.mark.edge_case
    def test_unknown_bound_name(self):
        with pytest.raises(ValueError):
            BoundReport.check("made_up", {}, 1.0, 2.0)

    def test_mutation_multiplies_by_ten(self):
        constants = FormulaConstants()
        assert constants.mutated("cheeger").cheeger == pytest.approx(2.5)
        assert constants.mutated("cheeger").barta == constants.barta
        assert set(FormulaConstants.names()) == {"barta", "thm32", "lambda_r", "comparison", "sandwich",
                                                 "cheeger"}

    @pytest.mark.edge_case
    def test_unknown_mutation(self):
        with pytest.raises(ConfigError):
            FormulaConstants().mutated("euler")


@pytest.mark.unit
class TestScalingCovariance:
    """Scaling a Euclidean surface by t scales eigenvalues, curvatures and bounds consistently"""

    T = 2.0

    def test_laplacian_tone_scales_by_inverse_square(self, ellipsoid_112, test_config):
        mesh, _ = ellipsoid_112
        big = mesh.scaled(self.T)
        lam = fundamental_tone(mesh, PhiField.identity(mesh.n_vertices), "closed", test_config)
        lam_big = fundamental_tone(big, PhiField.identity(big.n_vertices), "closed", test_config)
        assert lam_big == pytest.approx(lam / self.T ** 2, rel=1e-9)

        print(f"\n✅ lambda {lam:.6f} -> {lam_big:.6f} under scaling by {self.T:g}")

    @pytest.mark.parametrize("r", [0, 1])
    def test_curvature_inputs_and_ball_bound(self, ellipsoid_112, r):
        mesh, cf = ellipsoid_112
        big, cf_big = mesh.scaled(self.T), cf.scaled(self.T)
        p, R = mesh.vertices[0], 0.7

        for j in range(3):
            assert np.allclose(cf_big.S(j), cf.S(j) / self.T ** j, rtol=1e-12)

        inside = mesh.space_form.in_ball(p, R, mesh.vertices)
        inf_sr = float(cf.S(r)[inside].min())
        h = local_curvature_sup(mesh, cf, p, R, r)
        h_big = local_curvature_sup(big, cf_big, self.T * p, self.T * R, r)
        assert h_big == pytest.approx(h / self.T ** (r + 1), rel=1e-12)

        ball = thm32_bound(0, r, R, inf_sr, h)
        ball_big = thm32_bound(0, r, self.T * R, inf_sr / self.T ** r, h_big)
        assert ball_big.bound == pytest.approx(ball.bound / self.T ** 2, rel=1e-12)
        assert ball_big.admissible == ball.admissible

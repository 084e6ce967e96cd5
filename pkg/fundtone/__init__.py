"""Fundamental tones of divergence-form operators on surfaces in space forms."""
from fundtone.bounds import (BoundReport, FormulaConstants, VertexVectorField, barta_bound, canonical_test_field,
                             cheeger_lower_bound_check, cheeger_sweep, comparison_bound, lambda_r_constant,
                             phi_sandwich, thm32_bound)
from fundtone.config import Config
from fundtone.curvature import CurvatureField, estimate_curvature
from fundtone.discretization import OperatorPair, PhiField, apply_dirichlet, assemble
from fundtone.eigensolve import EigenResult, ProblemKind, rayleigh_quotient, smallest_eigenpairs
from fundtone.geometry import check_ellipticity, extrinsic_radius, local_curvature_sup, spectral_extrema
from fundtone.mesh import TriMesh
from fundtone.spaceform import AmbientPoint, SpaceForm, distance, hessian_comparison, rho_times_v
from fundtone.spectrum import CurvatureSpectrum
from fundtone.surfaces import builtin_surface

__version__ = "0.1.0"

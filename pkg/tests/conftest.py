"""Pytest configuration and fixtures"""
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

# Add parent directory to path so we can import app
sys.path.insert(0, str(Path(__file__).parent.parent))

from app import cli
from fundtone.bounds import BoundReport
from fundtone.reports import write_reports
from fundtone.suite import run_suite
from fundtone.surfaces import builtin_surface
from tests.config.test_config import TEST_SUITE_NAME, TestConfig
from tests.setup_test_reports import build_test_suite


@pytest.fixture
def test_config():
    """Fresh settings object per test (tests may tweak attributes)"""
    return TestConfig()


# ============================================
# Surfaces
# ============================================

@pytest.fixture(scope='session')
def unit_sphere():
    """Unit icosphere, level 2 (162 vertices, dense eigensolves)"""
    return builtin_surface("round_sphere", 2, radius=1.0)


@pytest.fixture(scope='session')
def fine_sphere():
    """Unit icosphere, level 3 (642 vertices, iterative eigensolves)"""
    return builtin_surface("round_sphere", 3, radius=1.0)


@pytest.fixture(scope='session')
def unit_disk():
    """Flat unit disk, level 1 (331 vertices)"""
    return builtin_surface("plane_disk", 1, radius=1.0)


@pytest.fixture(scope='session')
def ellipsoid_112():
    """Ellipsoid with semi-axes (1, 1, 2), level 2"""
    return builtin_surface("ellipsoid", 2, semi_axes=(1.0, 1.0, 2.0))


@pytest.fixture(scope='session')
def torus_21():
    """Torus of revolution with radii (2, 1), level 0"""
    return builtin_surface("torus", 0, major=2.0, minor=1.0)


@pytest.fixture(scope='session')
def great_sphere_s3():
    """Equatorial great sphere of S^3, level 2"""
    return builtin_surface("great_sphere", 2)


@pytest.fixture(scope='session')
def h3_sphere():
    """Geodesic sphere of radius 1 in H^3, level 2"""
    return builtin_surface("geodesic_sphere_in_H3", 2, radius=1.0)


# ============================================
# CLI Testing Fixtures
# ============================================

@pytest.fixture
def runner():
    """Click runner; result.stdout holds the JSON, result.stderr the messages"""
    return CliRunner()


@pytest.fixture
def invoke(runner, tmp_path, monkeypatch):
    """Run the CLI inside a temporary directory with test settings"""
    monkeypatch.chdir(tmp_path)

    def _invoke(*args):
        return runner.invoke(cli, [str(a) for a in args], obj=TestConfig())

    return _invoke


# ============================================
# Report Fixtures
# ============================================

@pytest.fixture(scope='session')
def verification_reports():
    """BoundReports of the coarse test suite (run once per session)"""
    return run_suite(build_test_suite(), TestConfig())


@pytest.fixture(scope='session')
def actual_reports_dir(tmp_path_factory, verification_reports):
    """Directory holding <suite>.json, <suite>_summary.csv and <suite>_margins.csv"""
    out_dir = tmp_path_factory.mktemp("reports")
    write_reports(verification_reports, str(out_dir), TEST_SUITE_NAME)
    return out_dir


@pytest.fixture
def sample_reports():
    """Hand-made reports covering every status"""
    return [
        BoundReport.check("thm32_iii", {"c": 0, "r": 0, "R": 1.0}, 4.0, 5.7832, 1e-6,
                          mesh_level=3, config="disk"),
        BoundReport.check("barta", {"c": 0, "r": 0}, 6.5, 5.7832, 1e-6, mesh_level=3, config="disk"),
        BoundReport.skipped("comparison_rs", {"c": 0, "r": 1, "s": 0}, "ellipticity", mesh_level=3,
                            config="torus"),
        BoundReport("cheeger", {"r": 0, "h_hat": 1.01}, 0.255, 2.0, 1.745, None, 3, "info",
                    "h estimated by sweep cut (upper bound on h)", "ellipsoid"),
    ]

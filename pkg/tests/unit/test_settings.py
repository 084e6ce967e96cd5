"""
Test runtime settings and the error hierarchy

Tests:
- Config defaults, overrides and validation
- Environment layering
- Exit codes carried by errors
"""
import pytest

from fundtone.config import Config
from fundtone.errors import (AssemblyError, ConfigError, CurvatureEstimationError, DegenerateSweepError, DomainError,
                             EllipticityError, EmptyDomainError, FundToneError, InvalidPointError, MeshIOError,
                             SolverError)


@pytest.mark.unit
class TestConfig:
    """Test suite for Config"""

    def test_defaults(self):
        config = Config()
        assert config.SEED == 20240601
        assert config.WORKERS == 1
        assert config.MESH_ALLOWANCE == 0.05
        assert config.as_dict()["FLOAT_DIGITS"] == 12
        assert "ENV_PREFIX" not in config.as_dict()

    def test_overrides_do_not_touch_the_class(self):
        config = Config(SEED=3, LOG_LEVEL="debug")
        assert config.SEED == 3
        assert Config.SEED == 20240601

    def test_environment_layering(self):
        env = {"FUNDTONE_SEED": "42", "FUNDTONE_WORKERS": "3", "FUNDTONE_LOG_LEVEL": ""}
        config = Config.from_env(env, WORKERS=2)
        assert config.SEED == 42
        assert config.WORKERS == 2
        assert config.LOG_LEVEL == "INFO"

    def test_test_settings(self, test_config):
        assert test_config.SEED == 12345
        assert test_config.LOG_LEVEL == "WARNING"

    @pytest.mark.edge_case
    @pytest.mark.parametrize("overrides,match", [
        ({"SEEDS": 1}, "Unknown setting"),
        ({"WORKERS": 0}, "WORKERS"),
        ({"LOG_LEVEL": "LOUD"}, "log level"),
        ({"EIGEN_TOL": 1e-6}, "EIGEN_TOL"),
    ])
    def test_invalid_settings(self, overrides, match):
        with pytest.raises(ConfigError, match=match):
            Config(**overrides)

    @pytest.mark.edge_case
    def test_invalid_environment_value(self):
        with pytest.raises(ConfigError, match="FUNDTONE_WORKERS"):
            Config.from_env({"FUNDTONE_WORKERS": "many"})


@pytest.mark.unit
class TestErrors:
    """Test suite for the exception hierarchy"""

    @pytest.mark.parametrize("error,code", [
        (DomainError("x"), 2), (InvalidPointError("x"), 2), (EmptyDomainError("x"), 2),
        (DegenerateSweepError("x"), 2), (EllipticityError("x"), 2), (AssemblyError("x"), 2),
        (CurvatureEstimationError("x"), 2), (SolverError("x"), 3), (MeshIOError("x"), 4),
        (ConfigError("x"), 4),
    ])
    def test_exit_codes(self, error, code):
        assert isinstance(error, FundToneError)
        assert error.exit_code == code

    def test_builtin_bases(self):
        assert isinstance(EmptyDomainError("x"), ValueError)
        assert isinstance(MeshIOError("x"), OSError)

    def test_payloads(self):
        assert EllipticityError("x", which="P_1", margin=-0.5).margin == -0.5
        assert AssemblyError("x", face=7).face == 7
        assert CurvatureEstimationError("x", vertex=3).vertex == 3
        assert SolverError("x", residuals=[1, 2]).residuals == [1.0, 2.0]

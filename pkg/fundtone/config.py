"""Runtime settings.

Defaults live as class attributes; ``Config.from_env`` layers environment
variables on top and the CLI layers its flags on top of that.
"""
import os

from fundtone.errors import ConfigError


class Config:
    """Default settings for library and CLI runs"""
    SEED = 20240601
    WORKERS = 1
    LOG_LEVEL = "INFO"

    # eigensolver
    EIGEN_TOL = 1e-10
    RESIDUAL_LIMIT = 1e-8
    MAX_ITER = 500
    SHIFT_FACTOR = 1e-3
    SHIFT_RETRIES = 3

    # bound verification
    REL_TOL = 1e-6
    MESH_ALLOWANCE = 0.05
    WINDOW_GUARD = 1e-9

    # report formatting
    FLOAT_DIGITS = 12

    ENV_PREFIX = "FUNDTONE_"
    ENV_KEYS = {"SEED": int, "WORKERS": int, "LOG_LEVEL": str}

    def __init__(self, **overrides):
        for key, value in overrides.items():
            if not hasattr(type(self), key):
                raise ConfigError(f"Unknown setting '{key}'")
            setattr(self, key, value)
        self.validate()

    @classmethod
    def from_env(cls, environ=None, **overrides):
        """Build settings from FUNDTONE_* environment variables plus explicit overrides"""
        environ = os.environ if environ is None else environ
        values = {}
        for key, cast in cls.ENV_KEYS.items():
            raw = environ.get(cls.ENV_PREFIX + key)
            if raw is None or raw == "":
                continue
            try:
                values[key] = cast(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{cls.ENV_PREFIX}{key}={raw!r} is not a valid {cast.__name__}"
                ) from exc
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def validate(self):
        if int(self.WORKERS) < 1:
            raise ConfigError(f"WORKERS must be at least 1, got {self.WORKERS}")
        if self.LOG_LEVEL.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"Unknown log level '{self.LOG_LEVEL}'")
        if not 0 < self.EIGEN_TOL <= self.RESIDUAL_LIMIT:
            raise ConfigError("EIGEN_TOL must be positive and not above RESIDUAL_LIMIT")

    def as_dict(self):
        return {key: getattr(self, key) for key in dir(type(self))
                if key.isupper() and not key.startswith("ENV_")}

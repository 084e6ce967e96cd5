"""Exception hierarchy. Every error knows the CLI exit code it maps to."""


class FundToneError(Exception):
    """Base class for all library errors"""
    exit_code = 2


class DomainError(FundToneError, ValueError):
    """An argument lies outside the domain of an operation"""
    exit_code = 2


class InvalidPointError(DomainError):
    """A point violates the model constraint of its space form"""


class EmptyDomainError(DomainError):
    """A restriction (ball, mask) selected no vertices or faces"""


class DegenerateSweepError(DomainError):
    """The sweep function is constant, so no level set separates the mesh"""


class EllipticityError(FundToneError):
    """A Newton tensor or Phi field is not positive definite where required"""
    exit_code = 2

    def __init__(self, message, which=None, margin=None):
        super().__init__(message)
        self.which = which
        self.margin = margin


class AssemblyError(FundToneError):
    """Finite element assembly hit a degenerate element"""
    exit_code = 2

    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class CurvatureEstimationError(FundToneError):
    """The quadric fit at a vertex stayed rank deficient"""
    exit_code = 2

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class SolverError(FundToneError):
    """The eigensolver failed to factor or to converge"""
    exit_code = 3

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = [] if residuals is None else [float(r) for r in residuals]


class MeshIOError(FundToneError, OSError):
    """A mesh, field or report file could not be read or written"""
    exit_code = 4


class ConfigError(FundToneError):
    """Invalid configuration value or suite description"""
    exit_code = 4

"""Simply connected space forms N^{n+1}(c) for c in {1, 0, -1}.

Points are stored in an embedding:

* c = 0: Euclidean coordinates in R^{n+1};
* c = 1: unit vectors in R^{n+2};
* c = -1: the upper sheet of the hyperboloid <x, x> = -1 in Minkowski space
  R^{n+2} with signature (-, +, ..., +).

All functions accept a single point (shape ``(d,)``) or a stack of points
(shape ``(..., d)``) and broadcast.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from fundtone.errors import DomainError, InvalidPointError

logger = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-12
CURVATURES = (1, 0, -1)


def coords(p):
    """Embedding coordinates of an AmbientPoint or of a raw coordinate sequence"""
    if isinstance(p, AmbientPoint):
        return p.coords
    return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class SpaceForm:
    """The ambient model N^{n+1}(c)

    Attributes:
        curvature: sectional curvature c, one of 1, 0, -1
        ambient_dim: n + 1, the intrinsic dimension of the ambient space
    """
    curvature: int
    ambient_dim: int = 3

    def __post_init__(self):
        if self.curvature not in CURVATURES:
            raise DomainError(f"curvature must be one of {CURVATURES}, got {self.curvature}")
        if self.ambient_dim < 2:
            raise DomainError(f"ambient_dim must be at least 2, got {self.ambient_dim}")

    @property
    def embedding_dim(self):
        return self.ambient_dim if self.curvature == 0 else self.ambient_dim + 1

    @property
    def weights(self):
        """Diagonal of the embedding metric"""
        w = np.ones(self.embedding_dim)
        if self.curvature == -1:
            w[0] = -1.0
        return w

    @property
    def name(self):
        return {1: "sphere", 0: "euclidean", -1: "hyperbolic"}[self.curvature]

    def inner(self, x, y):
        """Model inner product along the last axis"""
        return np.sum(self.weights * np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)

    def norm(self, v):
        """Length of tangent vectors (spacelike for c = -1)"""
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    # ------------------------------------------------------------------
    # points
    # ------------------------------------------------------------------
    def constraint_residual(self, x):
        """Deviation from the model constraint divided by max(1, |x|^2); +inf on the lower sheet"""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.embedding_dim:
            raise InvalidPointError(
                f"{self.name} model of dimension {self.ambient_dim} needs "
                f"{self.embedding_dim} coordinates, got {x.shape[-1]}"
            )
        if self.curvature == 0:
            return np.zeros(x.shape[:-1])
        scale = np.maximum(1.0, np.sum(x * x, axis=-1))
        if self.curvature == 1:
            residual = np.abs(self.inner(x, x) - 1.0) / scale
        else:
            residual = np.abs(self.inner(x, x) + 1.0) / scale
            residual = np.where(x[..., 0] > 0, residual, np.inf)
        return residual

    def validate(self, x, tol=CONSTRAINT_TOL):
        """Return ``x`` as a float array or raise InvalidPointError"""
        x = np.asarray(x, dtype=float)
        residual = np.atleast_1d(self.constraint_residual(x))
        bad = np.flatnonzero(~(residual <= tol))
        if bad.size:
            raise InvalidPointError(
                f"{bad.size} point(s) violate the {self.name} model constraint "
                f"(first offending index {int(bad[0])}, residual {float(residual[bad[0]]):.3e})"
            )
        return x

    def point(self, values):
        return AmbientPoint(tuple(float(c) for c in self.validate(values)), self)

    def origin(self):
        """Base point used as default ball centre: 0, north pole e_0, or hyperboloid apex"""
        o = np.zeros(self.embedding_dim)
        if self.curvature != 0:
            o[0] = 1.0
        return o

    def normalize(self, x):
        """Push points of the embedding back onto the model (c != 0)"""
        x = np.asarray(x, dtype=float)
        if self.curvature == 0:
            return x
        if self.curvature == 1:
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        q = -self.inner(x, x)
        if np.any(q <= 0):
            raise InvalidPointError("cannot normalize a spacelike or null vector onto the hyperboloid")
        y = x / np.sqrt(q)[..., None]
        return np.where(y[..., :1] < 0, -y, y)

    # ------------------------------------------------------------------
    # distance
    # ------------------------------------------------------------------
    def distance(self, p, q):
        """Geodesic distance of the model, symmetric and zero on the diagonal"""
        p = self.validate(coords(p))
        q = self.validate(coords(q))
        return self._distance(p, q)

    def _distance(self, p, q):
        if self.curvature == 0:
            return np.linalg.norm(q - p, axis=-1)
        if self.curvature == 1:
            cos_t = np.clip(self.inner(p, q), -1.0, 1.0)
            perp = q - np.asarray(cos_t)[..., None] * p
            return np.arctan2(np.linalg.norm(perp, axis=-1), cos_t)
        # |q - p|_L = 2 sinh(d / 2) on the hyperboloid
        chord_sq = np.maximum(self.inner(q - p, q - p), 0.0)
        return 2.0 * np.arcsinh(np.sqrt(chord_sq) / 2.0)

    def in_ball(self, p, R, x, tol=1e-12):
        """Membership of x in the closed geodesic ball B(p, R)"""
        return self._distance(self.validate(coords(p)), np.asarray(x, dtype=float)) <= R + tol

    # ------------------------------------------------------------------
    # Hessian comparison
    # ------------------------------------------------------------------
    def _check_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(~(rho > 0)):
            raise DomainError("rho must be positive")
        if self.curvature == 1 and np.any(rho >= math.pi / 2):
            raise DomainError("rho must stay below pi/2 in the sphere")
        return rho

    def hessian_comparison(self, rho):
        """upsilon(rho): coth, 1/rho or cot for c = -1, 0, 1"""
        rho = self._check_rho(rho)
        if self.curvature == -1:
            value = 1.0 / np.tanh(rho)
        elif self.curvature == 0:
            value = 1.0 / rho
        else:
            value = 1.0 / np.tan(rho)
        return float(value) if value.ndim == 0 else value

    def rho_times_v(self, rho):
        """rho * upsilon(rho); at least 1 for c <= 0 and at most 1 for c = 1"""
        rho = self._check_rho(rho)
        if self.curvature == -1:
            value = rho / np.tanh(rho)
        elif self.curvature == 0:
            value = np.ones_like(rho)
        else:
            value = rho / np.tan(rho)
        return float(value) if value.ndim == 0 else value

    # ------------------------------------------------------------------
    # tangent spaces
    # ------------------------------------------------------------------
    def project_tangent(self, x, v):
        """Orthogonal projection of embedding vectors onto T_x"""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.curvature == 0:
            return v
        coef = self.inner(v, x) / self.curvature
        return v - np.asarray(coef)[..., None] * x

    def exp_map(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.curvature == 0:
            return x + v
        t = np.asarray(self.norm(v))[..., None]
        safe = np.where(t > 0, t, 1.0)
        if self.curvature == 1:
            y = np.cos(t) * x + np.sin(t) * v / safe
        else:
            y = np.cosh(t) * x + np.sinh(t) * v / safe
        return self.normalize(np.where(t > 0, y, x))

    def log_map(self, x, y):
        """Tangent vector at x pointing to y with length dist(x, y)"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.curvature == 0:
            return y - x
        u = self.project_tangent(x, y)
        length = np.asarray(self.norm(u))[..., None]
        theta = np.asarray(self._distance(x, y))[..., None]
        safe = np.where(length > 1e-300, length, 1.0)
        return np.where(length > 1e-300, theta * u / safe, 0.0)

    def distance_gradient(self, p, x):
        """Gradient at x of rho = dist(p, .), a unit tangent vector (zero at x = p)"""
        p = np.asarray(coords(p), dtype=float)
        x = np.asarray(x, dtype=float)
        rho = np.asarray(self._distance(p, x))[..., None]
        if self.curvature == 0:
            g = x - p
            scale = rho
        elif self.curvature == 1:
            g = np.cos(rho) * x - p
            scale = np.sin(rho)
        else:
            g = np.cosh(rho) * x - p
            scale = np.sinh(rho)
        safe = np.where(scale > 0, scale, 1.0)
        return np.where(scale > 0, g / safe, 0.0)

    def tangent_basis(self, x):
        """Orthonormal basis of T_x as the rows of an (n+1, d) array"""
        x = np.asarray(x, dtype=float)
        d = self.embedding_dim
        order = list(range(1, d)) + [0] if self.curvature == -1 else list(range(d))
        basis = []
        for i in order:
            v = self.project_tangent(x, np.eye(d)[i])
            for _ in range(2):
                for b in basis:
                    v = v - self.inner(v, b) * b
            length = float(self.norm(v))
            if length > 1e-8:
                basis.append(v / length)
            if len(basis) == self.ambient_dim:
                break
        return np.array(basis)


@dataclass(frozen=True)
class AmbientPoint:
    """A validated point of a space form"""
    coords: tuple
    space_form: SpaceForm

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        self.space_form.validate(self.coords)

    def __eq__(self, other):
        return (isinstance(other, AmbientPoint) and self.space_form == other.space_form
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.space_form, tuple(self.coords)))


def distance(sf, p, q):
    return sf.distance(p, q)


def hessian_comparison(sf, rho):
    return sf.hessian_comparison(rho)


def rho_times_v(sf, rho):
    return sf.rho_times_v(rho)

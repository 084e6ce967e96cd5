"""Dimension-generic algebra of principal curvature spectra.

Elementary symmetric functions S_r, mean curvatures H_r = S_r / C(n, r) and
the eigenvalues of the Newton tensors P_0 = I, P_r = S_r I - A P_{r-1}.

The array functions work along the last axis and keep the dtype of their
input, so integer or ``fractions.Fraction`` spectra (object arrays) are
handled in exact arithmetic and float arrays vectorise over vertices.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from fundtone.errors import DomainError


def _as_array(kappas):
    k = np.asarray(kappas)
    if k.dtype.kind not in "iufO":
        k = k.astype(float)
    if k.ndim == 0 or k.shape[-1] < 1:
        raise DomainError("a curvature spectrum needs at least one principal curvature")
    return k


def elementary_symmetric(kappas):
    """S_0..S_n as the coefficients of prod_i (1 + k_i t)"""
    k = _as_array(kappas)
    n = k.shape[-1]
    S = np.zeros(k.shape[:-1] + (n + 1,), dtype=k.dtype)
    S[..., 0] = 1
    for i in range(n):
        S[..., 1:i + 2] = S[..., 1:i + 2] + k[..., i, None] * S[..., 0:i + 1]
    return S


def newton_eigenvalues(kappas, r):
    """Eigenvalues mu_i^r of P_r in the principal frame, mu_i^r = S_r - k_i mu_i^{r-1}"""
    k = _as_array(kappas)
    n = k.shape[-1]
    if not 0 <= r <= n - 1:
        raise DomainError(f"r must lie in [0, {n - 1}], got {r}")
    S = elementary_symmetric(k)
    mu = np.ones_like(k)
    for j in range(1, r + 1):
        mu = S[..., j, None] - k * mu
    return mu


def mean_curvatures(kappas):
    """H_r = S_r / C(n, r) for r = 0..n"""
    k = _as_array(kappas)
    n = k.shape[-1]
    S = elementary_symmetric(k)
    binomials = np.array([comb(n, r) for r in range(n + 1)], dtype=S.dtype if S.dtype == object else float)
    return S / binomials


@dataclass(frozen=True)
class CurvatureSpectrum:
    """Principal curvatures k_1..k_n at one point of a hypersurface"""
    kappas: tuple

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(self.kappas))
        if len(self.kappas) < 1:
            raise DomainError("a curvature spectrum needs at least one principal curvature")

    @classmethod
    def uniform(cls, n, kappa):
        """Umbilic spectrum, e.g. a round sphere of radius 1/kappa"""
        return cls((kappa,) * n)

    @property
    def n(self):
        return len(self.kappas)

    def symmetric_functions(self):
        return list(elementary_symmetric(np.array(self.kappas, dtype=object)))

    def newton_eigenvalues(self, r):
        return list(newton_eigenvalues(np.array(self.kappas, dtype=object), r))

    def mean_curvatures(self):
        return list(mean_curvatures(np.array(self.kappas, dtype=object)))

    def is_elliptic(self, r):
        """True when P_r is positive definite, i.e. every mu_i^r > 0"""
        return all(mu > 0 for mu in self.newton_eigenvalues(r))

"""Smallest eigenpairs of the generalized problem K u = lambda M u."""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import splu

from fundtone.config import Config
from fundtone.errors import DomainError, SolverError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 500
KERNEL_TOL = 1e-8


class ProblemKind(str, Enum):
    DIRICHLET = "dirichlet"
    CLOSED = "closed"


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs in ascending order; eigenfunctions are M-orthonormal columns"""
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    residual_norms: np.ndarray
    problem_kind: ProblemKind
    iterations: int = 0
    shift: float = 0.0

    @property
    def fundamental_tone(self):
        return float(self.eigenvalues[0])


def _resolve_kind(kind):
    try:
        return ProblemKind(kind)
    except ValueError:
        raise DomainError(f"unknown problem kind '{kind}'") from None


def _check_problem(op, kind, k):
    if kind is ProblemKind.DIRICHLET and not op.is_reduced:
        raise DomainError("dirichlet problems need a boundary-reduced operator (apply_dirichlet)")
    if kind is ProblemKind.CLOSED:
        if op.is_reduced:
            raise DomainError("closed problems need the unreduced operator")
        ones = np.ones(op.size)
        scale = max(abs(op.K).max(), 1.0)
        if np.abs(op.K @ ones).max() > KERNEL_TOL * scale:
            raise DomainError("closed problem: constants are not in the kernel of K")
    available = op.size - (1 if kind is ProblemKind.CLOSED else 0)
    if not 1 <= k <= available:
        raise DomainError(f"k must lie in [1, {available}], got {k}")


class _ConstantDeflation:
    """M-orthogonal projection away from the constant vector"""

    def __init__(self, M):
        self.m_one = np.asarray(M @ np.ones(M.shape[0])).ravel()
        self.total = float(self.m_one.sum())

    def __call__(self, X):
        for _ in range(2):
            X = X - np.outer(np.ones(X.shape[0]), self.m_one @ X / self.total)
        return X


def _residuals(op, values, vectors):
    R = op.K @ vectors - (op.M @ vectors) * values
    return np.linalg.norm(R, axis=0) / np.linalg.norm(vectors, axis=0)


def _normalize_signs(op, vectors):
    weights = op.M @ vectors
    for j in range(vectors.shape[1]):
        total = weights[:, j].sum()
        pivot = vectors[np.argmax(np.abs(vectors[:, j])), j]
        if total < -1e-12 or (abs(total) <= 1e-12 and pivot < 0):
            vectors[:, j] = -vectors[:, j]
    return vectors


def _dense(op, k, kind):
    K = op.K.toarray()
    M = op.M.toarray()
    if kind is ProblemKind.CLOSED:
        Z = scipy.linalg.null_space(np.ones((1, op.size)) @ M)
        values, Y = scipy.linalg.eigh(Z.T @ K @ Z, Z.T @ M @ Z)
        vectors = Z @ Y[:, :k]
    else:
        values, vectors = scipy.linalg.eigh(K, M)
        vectors = vectors[:, :k]
    return values[:k], vectors


def _factor(op, config):
    diag_k = op.K.diagonal()
    diag_m = op.M.diagonal()
    ratio = np.mean(diag_k / diag_m) if np.all(diag_m > 0) else 0.0
    sigma = config.SHIFT_FACTOR * ratio if ratio > 0 else 1e-3
    for attempt in range(config.SHIFT_RETRIES + 1):
        try:
            return splu((op.K + sigma * op.M).tocsc()), sigma
        except RuntimeError as exc:
            logger.warning("factorization with shift %.3e failed (%s); retrying", sigma, exc)
            sigma *= 10.0
    raise SolverError(f"K + sigma M stayed singular after {config.SHIFT_RETRIES} shift increases")


def _subspace_iteration(op, k, kind, seed, config):
    lu, sigma = _factor(op, config)
    deflate = _ConstantDeflation(op.M) if kind is ProblemKind.CLOSED else (lambda X: X)
    n = op.size
    block = min(max(2 * k, k + 8), n - (1 if kind is ProblemKind.CLOSED else 0))
    rng = np.random.default_rng(seed)
    X = deflate(rng.standard_normal((n, block)))
    best = None
    for iteration in range(1, config.MAX_ITER + 1):
        Y = deflate(lu.solve(np.asarray(op.M @ X)))
        Y, _ = np.linalg.qr(Y)
        values, C = scipy.linalg.eigh(Y.T @ (op.K @ Y), Y.T @ (op.M @ Y))
        X = Y @ C
        residuals = _residuals(op, values[:k], X[:, :k])
        logger.debug("iteration %d: max residual %.3e", iteration, residuals.max())
        if best is None or residuals.max() < best[2].max():
            best = (values[:k].copy(), X[:, :k].copy(), residuals)
        if residuals.max() < config.EIGEN_TOL:
            return values[:k], X[:, :k], iteration, sigma
    values, vectors, residuals = best
    if residuals.max() <= config.RESIDUAL_LIMIT:
        logger.warning("eigensolver stopped at residual %.3e after %d iterations", residuals.max(),
                       config.MAX_ITER)
        return values, vectors, config.MAX_ITER, sigma
    raise SolverError(f"no convergence after {config.MAX_ITER} iterations "
                      f"(best residual {residuals.max():.3e})", residuals=residuals)


def smallest_eigenpairs(op, k=1, kind=ProblemKind.DIRICHLET, seed=None, config=None):
    """k smallest eigenpairs; in closed mode the constants are deflated first.

    Small systems go to a dense generalized solver. Larger ones use block
    inverse subspace iteration on a shifted sparse LU of K + sigma M with
    Rayleigh-Ritz extraction, started from a seeded random block.
    """
    config = config or Config()
    kind = _resolve_kind(kind)
    _check_problem(op, kind, k)
    seed = config.SEED if seed is None else seed
    if op.size <= DENSE_LIMIT:
        values, vectors = _dense(op, k, kind)
        iterations, sigma = 0, 0.0
    else:
        values, vectors, iterations, sigma = _subspace_iteration(op, k, kind, seed, config)
    order = np.argsort(values)
    values = np.asarray(values)[order]
    vectors = _normalize_signs(op, np.array(vectors)[:, order])
    residuals = _residuals(op, values, vectors)
    if residuals.max() > config.RESIDUAL_LIMIT:
        raise SolverError(f"eigenpair residual {residuals.max():.3e} above {config.RESIDUAL_LIMIT:g}",
                          residuals=residuals)
    logger.info("%s eigensolve on %d unknowns: lambda_1 = %.10g (%d iterations)",
                kind.value, op.size, values[0], iterations)
    return EigenResult(values, vectors, residuals, kind, iterations, sigma)


def rayleigh_quotient(op, u):
    """u^T K u / u^T M u"""
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != op.size:
        raise DomainError(f"vector has length {u.shape[0]}, operator has size {op.size}")
    if not np.any(u):
        raise DomainError("Rayleigh quotient of the zero vector")
    return float(u @ (op.K @ u)) / float(u @ (op.M @ u))


def expand(result, op):
    """Eigenfunctions on all mesh vertices, zero on removed boundary vertices"""
    vectors = result.eigenfunctions
    if not op.is_reduced:
        return vectors.copy()
    full = np.zeros((op.n_full, vectors.shape[1]))
    full[op.free] = vectors
    return full

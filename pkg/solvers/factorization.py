"""
Sub-problem solvers of the penalty factorization model

    min 1/2 (||P||_F^2 + ||Q||_F^2) + lam/2 ||y - U x||^2 + beta/2 ||H x - P Q^H||_F^2

Each update is the exact minimizer of its block with the others held fixed:
    P = beta H(x) Q (I + beta Q^H Q)^-1
    Q = beta H(x)^H P (I + beta P^H P)^-1
    x = (lam U*U + beta H*H)^-1 (lam U*y + beta H*(P Q^H)), elementwise since H*H is diagonal

Passing a multiplier D replaces beta H(x) with beta H(x) + D (ADMM form).
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from core.exceptions import ConfigurationError, SolverDivergenceError
from hankel.domain import HankelShape
from hankel.services import HankelOperator
from sampling.domain import SamplingPattern
from sampling.services import apply_U, apply_U_star
from .domain import FactorPair

logger = logging.getLogger(__name__)


def as_operator(shape_or_operator, x=None) -> HankelOperator:
    """Accept a HankelShape, an operator, or None (default shape of ``x``)."""
    if shape_or_operator is None:
        return HankelOperator.for_signal(x)
    if isinstance(shape_or_operator, HankelShape):
        return HankelOperator(shape_or_operator)
    return shape_or_operator


def clamp_rank(rank: int, operator: HankelOperator) -> int:
    if rank > operator.max_rank:
        logger.warning(f"Rank cap {rank} exceeds the Hankel dimension {operator.max_rank}; using {operator.max_rank}")
        return operator.max_rank
    return rank


def zero_filled(y, pattern: SamplingPattern) -> np.ndarray:
    """U*y for measured samples; already zero-filled data passes through."""
    y = np.asarray(y, dtype=np.complex128)
    if y.shape[0] == pattern.n_total:
        return np.where(pattern.mask.reshape((-1,) + (1,) * (y.ndim - 1)), y, 0)
    return apply_U_star(y, pattern)


def balanced_factors(X: np.ndarray, rank: int) -> FactorPair:
    """Truncated SVD of X split evenly: P = U_R S_R^1/2, Q = V_R S_R^1/2."""
    try:
        u, s, vh = scipy.linalg.svd(X, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverDivergenceError('init_factors', 0, f"SVD failed: {e}")
    root = np.sqrt(s[:rank])
    return FactorPair(p=u[:, :rank] * root, q=vh[:rank].conj().T * root)


def init_factors(x, shape, rank: int) -> FactorPair:
    """
    Balanced truncated-SVD initialization of the factors of H(x).

    Args:
        x: Initial signal (typically U*y)
        shape: HankelShape or operator pair
        rank: Number of columns R; clamped to the Hankel dimension with a warning

    Raises:
        SolverDivergenceError: If the SVD does not converge
    """
    operator = as_operator(shape, x)
    return balanced_factors(operator.forward(x), clamp_rank(rank, operator))


def _right_solve(target: np.ndarray, companion: np.ndarray, beta: float) -> np.ndarray:
    """target @ companion @ (I + beta companion^H companion)^-1 via Cholesky."""
    rhs = target @ companion
    gram = np.eye(companion.shape[1]) + beta * (companion.conj().T @ companion)
    try:
        factor = scipy.linalg.cho_factor(gram)
        # gram is Hermitian: rhs gram^-1 = (gram^-1 rhs^H)^H
        return scipy.linalg.cho_solve(factor, rhs.conj().T).conj().T
    except (np.linalg.LinAlgError, ValueError):
        logger.warning(f"Cholesky factorization of a {gram.shape[0]}x{gram.shape[0]} Gram matrix failed; using pseudo-inverse")
        return rhs @ np.linalg.pinv(gram)


def _target(x, beta: float, operator: HankelOperator, multiplier=None) -> np.ndarray:
    target = beta * operator.forward(x)
    if multiplier is not None:
        target = target + multiplier
    return target


def update_P(x, q, beta: float, shape, multiplier=None) -> np.ndarray:
    """P = (beta H(x) + D) Q (I + beta Q^H Q)^-1."""
    operator = as_operator(shape, x)
    return _right_solve(_target(x, beta, operator, multiplier), np.asarray(q, dtype=np.complex128), beta)


def update_Q(x, p, beta: float, shape, multiplier=None) -> np.ndarray:
    """Q = (beta H(x) + D)^H P (I + beta P^H P)^-1."""
    operator = as_operator(shape, x)
    return _right_solve(_target(x, beta, operator, multiplier).conj().T, np.asarray(p, dtype=np.complex128), beta)


def update_x(y, pattern: SamplingPattern, pair: FactorPair, lam: float, beta: float, shape,
             multiplier=None) -> np.ndarray:
    """
    x = (lam U*U + beta H*H)^-1 (lam U*y + beta H*(P Q^H - D / beta)).

    H*H is diagonal with the anti-diagonal counts (doubled for virtual coils), so the
    solve is elementwise and unsampled entries become anti-diagonal means of P Q^H.

    Raises:
        ConfigurationError: If lam or beta is not positive
    """
    if not lam > 0 or not beta > 0:
        raise ConfigurationError(f"update_x needs lam > 0 and beta > 0, got {lam} and {beta}")
    zf = zero_filled(y, pattern)
    operator = as_operator(shape, zf)
    low_rank = pair.product()
    if multiplier is not None:
        low_rank = low_rank - multiplier / beta
    mask = pattern.mask.reshape((-1,) + (1,) * (zf.ndim - 1)).astype(float)
    numerator = lam * mask * zf + beta * operator.adjoint_sum(low_rank)
    return numerator / (lam * mask + beta * operator.gram_diagonal())


@dataclass(frozen=True)
class ObjectiveTerms:
    objective: float
    fidelity: float
    penalty: float
    nucproxy: float
    residual: float


def penalty_objective(y, pattern: SamplingPattern, x, pair: FactorPair, lam: float, beta: float, shape,
                      multiplier=None) -> ObjectiveTerms:
    """
    Evaluate the penalty objective and its parts at (x, P, Q).

    With a multiplier D the objective is the augmented Lagrangian
    (adds Re<D, H x - P Q^H>).
    """
    zf = zero_filled(y, pattern)
    operator = as_operator(shape, zf)
    hx = operator.forward(x)
    gap = hx - pair.product()

    fidelity = 0.5 * lam * float(np.linalg.norm(apply_U(zf - x, pattern)) ** 2)
    penalty = 0.5 * beta * float(np.linalg.norm(gap) ** 2)
    nucproxy = pair.nuclear_proxy()
    objective = nucproxy + fidelity + penalty
    if multiplier is not None:
        objective += float(np.real(np.vdot(multiplier, gap)))

    hx_norm = float(np.linalg.norm(hx))
    residual = float(np.linalg.norm(gap)) / hx_norm if hx_norm > 0 else 0.0
    return ObjectiveTerms(objective=objective, fidelity=fidelity, penalty=penalty, nucproxy=nucproxy, residual=residual)


def check_finite(solver: str, iteration: int, *arrays) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise SolverDivergenceError(solver, iteration)

"""
Solver Service Layer - iterative reconstruction of undersampled exponential signals.

Solvers:
    - penalty_solve: alternating exact minimization of the penalty factorization model
    - admm_lrhmf_solve: the same factorization with a Lagrange multiplier (ADMM)
    - svt_nuclear_solve: nuclear-norm ADMM with singular-value soft thresholding (small problems)
    - cs_solve: l1-in-frequency compressed sensing via FISTA with function-value restart

All solvers start from the zero-filled measurements and stop when the relative
change of x drops below ``tol`` or after ``max_iters`` iterations. The factorization
solvers raise beta geometrically with lam / beta held fixed and stop only once beta
has reached its cap.
"""
import logging
import time

import numpy as np
import scipy.linalg
from django.db import models

from core.exceptions import ConfigurationError
from core.fft import fft_unitary, ifft_unitary
from hankel.services import anti_diagonal_counts, hankel, hankel_adjoint_sum
from sampling.domain import SamplingPattern
from sampling.services import apply_U
from .domain import DEFAULT_BETA_CAP, DEFAULT_BETA_GROWTH, FactorPair, ObjectiveTrace, SolverConfig, TraceRecord
from .factorization import (
    as_operator,
    check_finite,
    clamp_rank,
    init_factors,
    penalty_objective,
    update_P,
    update_Q,
    update_x,
    zero_filled,
)

logger = logging.getLogger(__name__)

# Regularization table indexed by sampling rate 10% .. 50% in steps of 5%.
TABLE_RATES = (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50)
LRHMF_LAMBDA_OVER_BETA = (1e6, 1e3, 10 ** 2.5, 10 ** 2.5, 10 ** 2.5, 10 ** 2.5, 10 ** 2.5, 10 ** 2.5, 1e2)
CS_LAMBDA = (0.17, 0.10, 0.08, 0.05, 0.05, 0.05, 0.04, 0.04, 0.03)


class SolverName(models.TextChoices):
    PENALTY = 'penalty', 'Penalty factorization'
    ADMM = 'admm', 'ADMM factorization'
    SVT = 'svt', 'Nuclear-norm SVT'
    CS = 'cs', 'Compressed sensing'
    ADLR = 'adlr', 'Block pipeline'


def _table_index(rate: float) -> int:
    if not 0 < rate <= 1:
        raise ConfigurationError(f"sampling rate must lie in (0, 1], got {rate}")
    return int(np.argmin([abs(rate - r) for r in TABLE_RATES]))


def lrhmf_lambda(rate: float) -> float:
    """lambda / beta for the factorization solvers at ``rate`` (nearest tabulated rate)."""
    return LRHMF_LAMBDA_OVER_BETA[_table_index(rate)]


def cs_lambda(rate: float) -> float:
    """l1 weight of the compressed-sensing baseline at ``rate`` (nearest tabulated rate)."""
    return CS_LAMBDA[_table_index(rate)]


def default_config(name: str, rate: float, beta: float = 1.0, rank_cap: int = 20, max_iters: int = 2000,
                   tol: float = 1e-6, beta_growth: float = DEFAULT_BETA_GROWTH,
                   beta_cap: float = DEFAULT_BETA_CAP) -> SolverConfig:
    """Solver configuration with lambda read from the regularization table at ``rate``."""
    lam = cs_lambda(rate) if name == SolverName.CS else lrhmf_lambda(rate) * beta
    return SolverConfig(lam=lam, beta=beta, rank_cap=rank_cap, max_iters=max_iters, tol=tol,
                        beta_growth=beta_growth, beta_cap=beta_cap)


def _relative_change(new, old) -> float:
    scale = np.linalg.norm(old)
    return float(np.linalg.norm(new - old) / scale) if scale > 0 else float(np.linalg.norm(new))


def _record(trace: ObjectiveTrace, iteration: int, terms, started: float, beta: float = 1.0) -> None:
    trace.append(TraceRecord(
        iteration=iteration,
        objective=terms.objective,
        fidelity=terms.fidelity,
        penalty=terms.penalty,
        nucproxy=terms.nucproxy,
        seconds=time.perf_counter() - started,
        residual=terms.residual,
        beta=beta,
    ))


def _factorization_solve(name: str, y, pattern: SamplingPattern, config: SolverConfig,
                         operator=None, use_multiplier: bool = False, update_multiplier: bool = True):
    zf = zero_filled(y, pattern)
    operator = as_operator(operator, zf)
    rank = clamp_rank(config.rank_cap, operator)

    logger.info(f"{name}: start rank={rank} lambda={config.lam:g} beta={config.beta:g} "
                f"growth={config.beta_growth:g} cap={config.beta_cap:g} tol={config.tol:g} "
                f"max_iters={config.max_iters}")
    started = time.perf_counter()
    trace = ObjectiveTrace(solver=name)

    x = zf
    pair = init_factors(x, operator, rank)
    multiplier = np.zeros((pair.p.shape[0], pair.q.shape[0]), dtype=np.complex128) if use_multiplier else None
    change = np.inf

    for iteration in range(1, config.max_iters + 1):
        beta, lam = config.beta_at(iteration), config.lam_at(iteration)
        p = update_P(x, pair.q, beta, operator, multiplier)
        q = update_Q(x, p, beta, operator, multiplier)
        pair = FactorPair(p=p, q=q)
        x_new = update_x(zf, pattern, pair, lam, beta, operator, multiplier)
        check_finite(name, iteration, p, q, x_new)

        change = _relative_change(x_new, x)
        x = x_new
        if multiplier is not None and update_multiplier:
            multiplier = multiplier + beta * (operator.forward(x) - pair.product())
            check_finite(name, iteration, multiplier)

        terms = penalty_objective(zf, pattern, x, pair, lam, beta, operator, multiplier)
        _record(trace, iteration, terms, started, beta)
        logger.debug(f"{name} iter {iteration}: beta={beta:g} objective={terms.objective:.6e} change={change:.3e}")

        if change < config.tol and config.ramp_done(iteration):
            trace.converged = True
            break

    trace.factors = pair
    logger.info(f"{name}: stop after {trace.iterations} iterations, relative change {change:.3e}, "
                f"converged={trace.converged}")
    return x, trace


def penalty_solve(y, pattern: SamplingPattern, config: SolverConfig, operator=None):
    """
    Penalty-method factorization solver.

    Args:
        y: Measured samples (length M) or zero-filled signal (length N); coil matrices accepted
        pattern: Sampling pattern
        config: Weights, rank cap and stopping rule
        operator: Hankel shape or operator pair (defaults to the square-ish shape of the signal)

    Returns:
        (x, ObjectiveTrace)

    Raises:
        SolverDivergenceError: If an iterate becomes non-finite
    """
    return _factorization_solve(SolverName.PENALTY.value, y, pattern, config, operator)


def admm_lrhmf_solve(y, pattern: SamplingPattern, config: SolverConfig, operator=None,
                     update_multiplier: bool = True):
    """
    ADMM factorization solver with multiplier update D += beta (H x - P Q^H).

    With ``update_multiplier=False`` D stays zero and the iterates equal penalty_solve's.
    The trace objective is the augmented Lagrangian.
    """
    return _factorization_solve(SolverName.ADMM.value, y, pattern, config, operator,
                                use_multiplier=True, update_multiplier=update_multiplier)


def singular_value_threshold(X: np.ndarray, threshold: float) -> np.ndarray:
    u, s, vh = scipy.linalg.svd(X, full_matrices=False)
    s = np.maximum(s - threshold, 0.0)
    return (u * s) @ vh


def svt_nuclear_solve(y, pattern: SamplingPattern, lam: float, iters: int, nuclear_weight: float = 1.0,
                      rho: float = 1.0, shape=None, tol: float = 0.0, trace: ObjectiveTrace = None) -> np.ndarray:
    """
    ADMM on  nuclear_weight ||H x||_* + lam/2 ||y - U x||^2  with splitting Z = H x.

        Z = SVT_{nuclear_weight / rho}(H x + W)
        x = argmin lam/2 ||y - U x||^2 + rho/2 ||H x - Z + W||_F^2   (exact, per sample)
        W = W + H x - Z

    Full SVD per iteration; intended for signals up to about 127 samples.
    """
    if not lam > 0 or not rho > 0 or nuclear_weight < 0:
        raise ConfigurationError(f"svt needs lam > 0, rho > 0, nuclear_weight >= 0; got {lam}, {rho}, {nuclear_weight}")
    if iters < 1:
        raise ConfigurationError(f"iters must be at least 1, got {iters}")

    zf = zero_filled(y, pattern)
    shape = as_operator(shape, zf).shape
    counts = anti_diagonal_counts(shape)
    mask = pattern.mask.astype(float)
    denominator = lam * mask + rho * counts

    started = time.perf_counter()
    x = zf
    scaled_dual = np.zeros((shape.n1, shape.n2), dtype=np.complex128)
    threshold = nuclear_weight / rho

    for iteration in range(1, iters + 1):
        z = singular_value_threshold(hankel(x, shape) + scaled_dual, threshold)
        x_new = (lam * mask * zf + rho * hankel_adjoint_sum(z - scaled_dual, shape)) / denominator
        hx = hankel(x_new, shape)
        scaled_dual = scaled_dual + hx - z
        check_finite(SolverName.SVT.value, iteration, x_new, scaled_dual)

        change = _relative_change(x_new, x)
        x = x_new
        if trace is not None:
            nuclear = float(np.sum(scipy.linalg.svdvals(hx)))
            fidelity = 0.5 * lam * float(np.linalg.norm(apply_U(zf - x, pattern)) ** 2)
            trace.append(TraceRecord(
                iteration=iteration, objective=nuclear_weight * nuclear + fidelity, fidelity=fidelity,
                penalty=0.0, nucproxy=nuclear, seconds=time.perf_counter() - started,
                residual=float(np.linalg.norm(hx - z) / max(np.linalg.norm(hx), np.finfo(float).tiny)),
            ))
        if change < tol:
            if trace is not None:
                trace.converged = True
            break

    logger.info(f"svt: {iteration} iterations, final relative change {change:.3e}")
    return x


def soft_threshold(s: np.ndarray, threshold: float) -> np.ndarray:
    """Complex soft threshold s * max(0, 1 - threshold / |s|)."""
    magnitude = np.abs(s)
    with np.errstate(divide='ignore', invalid='ignore'):
        scale = np.where(magnitude > 0, np.maximum(0.0, 1.0 - threshold / magnitude), 0.0)
    return s * scale


def cs_solve(y, pattern: SamplingPattern, lam: float, iters: int, tol: float = 0.0,
             trace: ObjectiveTrace = None) -> np.ndarray:
    """
    Compressed sensing:  min lam ||F x||_1 + 1/2 ||y - U x||^2  with unitary DFT F.

    Solved as FISTA in the spectrum s = F x with unit step; whenever the
    objective would increase the momentum is reset and a plain proximal
    gradient step from the previous iterate is taken instead.
    """
    if not lam > 0:
        raise ConfigurationError(f"cs lambda must be positive, got {lam}")
    if iters < 1:
        raise ConfigurationError(f"iters must be at least 1, got {iters}")

    zf = zero_filled(y, pattern)
    mask = pattern.mask

    def gradient(s):
        return fft_unitary(np.where(mask, ifft_unitary(s), 0) - zf)

    def objective(s):
        residual = apply_U(zf - ifft_unitary(s), pattern)
        return lam * float(np.sum(np.abs(s))) + 0.5 * float(np.linalg.norm(residual) ** 2)

    started = time.perf_counter()
    s_prev = fft_unitary(zf)
    z = s_prev
    t = 1.0
    previous = objective(s_prev)
    change = np.inf

    for iteration in range(1, iters + 1):
        s = soft_threshold(z - gradient(z), lam)
        current = objective(s)
        if current > previous:
            t = 1.0
            s = soft_threshold(s_prev - gradient(s_prev), lam)
            current = objective(s)
        check_finite(SolverName.CS.value, iteration, s)

        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = s + ((t - 1.0) / t_next) * (s - s_prev)
        change = _relative_change(s, s_prev)
        s_prev, t, previous = s, t_next, current

        if trace is not None:
            trace.append(TraceRecord(
                iteration=iteration, objective=current, fidelity=current - lam * float(np.sum(np.abs(s))),
                penalty=0.0, nucproxy=0.0, seconds=time.perf_counter() - started,
            ))
        if change < tol:
            if trace is not None:
                trace.converged = True
            break

    logger.info(f"cs: {iteration} iterations, final relative change {change:.3e}")
    return ifft_unitary(s_prev)


def solve(name: str, y, pattern: SamplingPattern, config: SolverConfig, operator=None, pipeline_config=None,
          truth=None):
    """
    Run solver ``name`` and return (x, ObjectiveTrace).

    ``svt`` and ``cs`` read lambda and the iteration budget from ``config``;
    ``adlr`` needs ``pipeline_config`` and returns the pipeline's diagnostics in
    place of an objective trace.
    """
    if name == SolverName.PENALTY:
        return penalty_solve(y, pattern, config, operator)
    if name == SolverName.ADMM:
        return admm_lrhmf_solve(y, pattern, config, operator)
    if name == SolverName.SVT:
        trace = ObjectiveTrace(solver=SolverName.SVT.value)
        x = svt_nuclear_solve(y, pattern, config.lam, config.max_iters, shape=operator, tol=config.tol, trace=trace)
        return x, trace
    if name == SolverName.CS:
        trace = ObjectiveTrace(solver=SolverName.CS.value)
        x = cs_solve(y, pattern, config.lam, config.max_iters, tol=config.tol, trace=trace)
        return x, trace
    if name == SolverName.ADLR:
        if pipeline_config is None:
            raise ConfigurationError('solver adlr needs a pipeline configuration')
        from pipeline.services import run_pipeline
        return run_pipeline(y, pattern, pipeline_config, operator, truth=truth)
    raise ConfigurationError(f"unknown solver {name!r}, expected one of {SolverName.values}")

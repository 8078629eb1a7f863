"""
Pipeline Service Layer - alternating plug-in / optimizer blocks.

One ADLR block k:
    1. P_DL = plugin_P(...) + P^k
    2. Q_DL = plugin_Q(...) + Q^k
    3. x_DL = data_consistency(U*y, H*(P_DL Q_DL^H), gamma_DL^k)
    4. P^{k+1} = beta_P^k H(x_DL) Q_DL (I + beta_P^k Q_DL^H Q_DL)^-1
    5. Q^{k+1} = beta_Q^k H(x_DL)^H P^{k+1} (I + beta_Q^k P^{k+1 H} P^{k+1})^-1
    6. x^{k+1} = data_consistency(U*y, H*(P^{k+1} Q^{k+1 H}), gamma^k)

Orderings:
    - ADLR: plug-in stage then optimizer stage in every block
    - ADLR_D: plug-in stages only
    - ADLR_OD: K optimizer stages, then K plug-in stages
    - ADLR_DO: K plug-in stages, then K optimizer stages

Input scale:
    - nuclear (default): blocks run on U*y divided by the nuclear norm of H(U*y)
    - none: blocks run on the raw input
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from core.exceptions import ConfigurationError
from metrics.services import rank_from_singular_values, rlne
from sampling.domain import SamplingPattern
from solvers.domain import FactorPair
from solvers.factorization import as_operator, check_finite, clamp_rank, init_factors, update_P, update_Q, zero_filled
from .consistency import data_consistency
from .domain import (
    BlockParams,
    History,
    Normalization,
    PipelineConfig,
    PipelineDiagnostics,
    PipelineMode,
    PipelineState,
    Stage,
    StageDiagnostic,
)
from .plugins import PluginInput, PluginSolver, checked_correction, get_plugin

logger = logging.getLogger(__name__)

DEFAULT_LOSS_ALPHA = 1e-2

# Learned block parameters for 1D exponentials (10 blocks).
EXPONENTIAL_BLOCK_PARAMS = {
    'gamma_dl': (5.2e5, 6.7e4, 6.7e4, 3.7e1, 4.4, 4.0, 2.3, 2.0, 1.2, 0.46),
    'gamma': (1.9e5, 1.3e5, 1.6, 0.54, 0.26, 0.14, 0.11, 0.092, 0.089, 0.095),
    'beta_p': (96.0, 98.4, 98.5, 99.5, 99.0, 99.2, 98.5, 99.4, 100.0, 98.4),
    'beta_q': (87.6, 97.0, 98.9, 95.7, 102.1, 102.7, 105.7, 105.0, 107.6, 109.3),
}

# Learned block parameters for multi-coil MRI rows (5 blocks).
MRI_BLOCK_PARAMS = {
    'gamma_dl': (1.4e5, 4.1e5, 3.2e5, 7.7e3, 6.4e4),
    'gamma': (2.1e5, 1.1e5, 2.4e5, 2.0e5, 3.4e5),
    'beta_p': (92.3, 100.5, 101.9, 103.0, 98.1),
    'beta_q': (75.7, 75.4, 77.7, 79.2, 86.0),
}

INITIAL_GAMMA = 1e4
INITIAL_BETA = 100.0


def _blocks_from_table(table: dict) -> tuple:
    return tuple(
        BlockParams(gamma_dl=gd, gamma=g, beta_p=bp, beta_q=bq)
        for gd, g, bp, bq in zip(table['gamma_dl'], table['gamma'], table['beta_p'], table['beta_q'])
    )


def exponential_blocks() -> tuple:
    return _blocks_from_table(EXPONENTIAL_BLOCK_PARAMS)


def mri_blocks() -> tuple:
    return _blocks_from_table(MRI_BLOCK_PARAMS)


def initial_blocks(count: int) -> tuple:
    """Untrained block parameters: gamma_DL = gamma = 1e4, beta_P = beta_Q = 100."""
    if count < 1:
        raise ConfigurationError(f"block count must be at least 1, got {count}")
    return tuple(BlockParams(INITIAL_GAMMA, INITIAL_GAMMA, INITIAL_BETA, INITIAL_BETA) for _ in range(count))


def init_state(y, pattern: SamplingPattern, rank_cap: int, operator=None) -> PipelineState:
    """x = U*y with balanced truncated-SVD factors of H(U*y); history seeded with them."""
    zf = zero_filled(y, pattern)
    operator = as_operator(operator, zf)
    pair = init_factors(zf, operator, clamp_rank(rank_cap, operator))
    return PipelineState(x=zf, pair=pair, history=History.seeded(pair))


def _plugin_stage(state: PipelineState, gamma_dl: float, plugin: PluginSolver, zf, pattern, operator):
    history_p, history_q = state.history.snapshot()
    hx = operator.forward(state.x)
    p, q = state.pair.p, state.pair.q

    correction_p = plugin.correct_p(PluginInput(hx=hx, p=p, q=q, history_p=history_p, history_q=history_q))
    p_dl = checked_correction(plugin, correction_p, p.shape) + p
    correction_q = plugin.correct_q(PluginInput(hx=hx, p=p_dl, q=q, history_p=history_p, history_q=history_q))
    q_dl = checked_correction(plugin, correction_q, q.shape) + q

    pair = FactorPair(p=p_dl, q=q_dl)
    x_dl = data_consistency(zf, operator.adjoint(pair.product()), gamma_dl, pattern)
    return x_dl, pair


def _optimizer_stage(x, pair: FactorPair, params: BlockParams, zf, pattern, operator):
    p = update_P(x, pair.q, params.beta_p, operator)
    q = update_Q(x, p, params.beta_q, operator)
    new_pair = FactorPair(p=p, q=q)
    x_new = data_consistency(zf, operator.adjoint(new_pair.product()), params.gamma, pattern)
    return x_new, new_pair


def _diagnose(block: int, stage: str, x, pair: FactorPair, operator, truth) -> StageDiagnostic:
    values = scipy.linalg.svdvals(pair.product())
    return StageDiagnostic(
        block=block,
        stage=stage,
        rlne=rlne(truth, x) if truth is not None else None,
        effective_rank=rank_from_singular_values(values),
        nuclear_norm=float(values.sum()),
        x=x,
        lowrank_x=operator.adjoint(pair.product()),
    )


def _apply_stage(stage: str, block: int, state: PipelineState, params: BlockParams, plugin, zf, pattern,
                 operator, truth, diagnostics: PipelineDiagnostics) -> PipelineState:
    if stage == Stage.PLUGIN:
        x, pair = _plugin_stage(state, params.gamma_dl, plugin, zf, pattern, operator)
    else:
        x, pair = _optimizer_stage(state.x, state.pair, params, zf, pattern, operator)
    check_finite(f"pipeline block {block} {stage}", block, x, pair.p, pair.q)

    state.history.append(pair)
    if diagnostics is not None:
        diagnostics.append(_diagnose(block, stage, x, pair, operator, truth))
    return PipelineState(x=x, pair=pair, history=state.history)


def run_block(state: PipelineState, params: BlockParams, plugin: PluginSolver, y, pattern: SamplingPattern,
              shape=None, truth=None, diagnostics: PipelineDiagnostics = None, block: int = 1) -> PipelineState:
    """
    One full block: plug-in stage with gamma_DL, then the exact optimizer stage
    with beta_P, beta_Q and gamma. The history grows by two entries.

    Raises:
        PluginShapeError: If the plug-in returns corrections of the wrong shape
    """
    zf = zero_filled(y, pattern)
    operator = as_operator(shape, zf)
    state = _apply_stage(Stage.PLUGIN, block, state, params, plugin, zf, pattern, operator, truth, diagnostics)
    return _apply_stage(Stage.OPTIMIZER, block, state, params, plugin, zf, pattern, operator, truth, diagnostics)


def stage_schedule(mode: str, block_count: int) -> List[tuple]:
    """(block index, stage) pairs in execution order for ``mode``."""
    blocks = range(1, block_count + 1)
    if mode == PipelineMode.ADLR:
        return [(k, stage) for k in blocks for stage in (Stage.PLUGIN, Stage.OPTIMIZER)]
    if mode == PipelineMode.ADLR_D:
        return [(k, Stage.PLUGIN) for k in blocks]
    if mode == PipelineMode.ADLR_OD:
        return [(k, Stage.OPTIMIZER) for k in blocks] + [(k, Stage.PLUGIN) for k in blocks]
    if mode == PipelineMode.ADLR_DO:
        return [(k, Stage.PLUGIN) for k in blocks] + [(k, Stage.OPTIMIZER) for k in blocks]
    raise ConfigurationError(f"unknown pipeline mode {mode!r}")


def input_scale(zf, operator, normalization: str = Normalization.NUCLEAR) -> float:
    """Nuclear norm of H(U*y) for nuclear normalization, 1 for raw-scale runs or an all-zero lift."""
    if normalization == Normalization.NONE:
        return 1.0
    scale = float(scipy.linalg.svdvals(operator.forward(zf)).sum())
    return scale if scale > 0 else 1.0


def run_pipeline(y, pattern: SamplingPattern, config: PipelineConfig, shape=None, truth=None, plugin=None):
    """
    Run the configured block schedule from the zero-filled initialization.

    With nuclear normalization the blocks run on U*y / ||H(U*y)||_*, so the learned
    beta_P / beta_Q act on a unit-nuclear-norm lift; iterates, nuclear norms and
    losses are reported at the input scale. Plug-in thresholds apply to the
    normalized lift.

    Args:
        y: Measurements (length M) or zero-filled signal; L x C coil matrices with a
            virtual-coil operator
        pattern: Sampling pattern along axis 0
        config: Blocks, rank cap, ordering mode, plug-in and normalization
        shape: Hankel shape or operator pair
        truth: Optional ground truth; enables per-stage RLNE and losses
        plugin: Plug-in instance overriding ``config.plugin``

    Returns:
        (x, PipelineDiagnostics)
    """
    zf = zero_filled(y, pattern)
    operator = as_operator(shape, zf)
    plugin = plugin or get_plugin(config.plugin, config.plugin_threshold)
    scale = input_scale(zf, operator, config.normalization)
    zf = zf / scale
    scaled_truth = None if truth is None else np.asarray(truth) / scale

    state = init_state(zf, pattern, config.rank_cap, operator)
    diagnostics = PipelineDiagnostics(mode=config.mode)
    logger.info(f"pipeline {config.mode}: {config.block_count} blocks, rank {state.pair.rank}, plugin {plugin.name}, "
                f"scale {scale:.3g}")

    for block, stage in stage_schedule(config.mode, config.block_count):
        params = config.blocks[block - 1]
        state = _apply_stage(stage, block, state, params, plugin, zf, pattern, operator, scaled_truth, diagnostics)
        logger.debug(f"pipeline block {block} {stage}: effective rank {diagnostics.stages[-1].effective_rank}")

    diagnostics.rescale(scale)
    if truth is not None:
        compute_losses(diagnostics, truth)
    return state.x * scale, diagnostics


@dataclass(frozen=True)
class LossTable:
    rows: tuple
    total: float
    alpha: float
    weighting: str


def _stage_loss(entry: StageDiagnostic, truth, alpha: float) -> float:
    return (float(np.linalg.norm((entry.x - truth).ravel()) ** 2)
            + alpha * float(np.linalg.norm((entry.lowrank_x - truth).ravel()) ** 2))


def compute_losses(diagnostics: PipelineDiagnostics, ground_truth, alpha: float = DEFAULT_LOSS_ALPHA,
                   weights='greedy') -> LossTable:
    """
    Per-stage losses ||x_stage - x||^2 + alpha ||H*(P Q^H) - x||^2 and their weighted total.

    Args:
        weights: 'greedy' (every stage weighted 1), 'non_greedy' (only the final
            stage weighted 1) or an explicit sequence with one weight per stage

    Fills ``loss_dl`` / ``loss_opt`` of each diagnostic entry.
    """
    truth = np.asarray(ground_truth)
    if alpha < 0:
        raise ConfigurationError(f"alpha must be non-negative, got {alpha}")
    stages = diagnostics.stages
    for entry in stages:
        if entry.x is None or entry.x.shape != truth.shape:
            raise ConfigurationError(f"ground truth shape {truth.shape} does not match stage outputs")

    if isinstance(weights, str):
        if weights == 'greedy':
            stage_weights = [1.0] * len(stages)
        elif weights == 'non_greedy':
            stage_weights = [0.0] * (len(stages) - 1) + [1.0]
        else:
            raise ConfigurationError(f"unknown weighting {weights!r}")
        weighting = weights
    else:
        stage_weights = [float(w) for w in weights]
        if len(stage_weights) != len(stages):
            raise ConfigurationError(f"need {len(stages)} weights, got {len(stage_weights)}")
        weighting = 'custom'

    rows = []
    total = 0.0
    for entry, weight in zip(stages, stage_weights):
        loss = _stage_loss(entry, truth, alpha)
        if entry.stage == Stage.PLUGIN:
            entry.loss_dl = loss
        else:
            entry.loss_opt = loss
        rows.append((entry.block, entry.stage, loss, weight))
        total += weight * loss
    return LossTable(rows=tuple(rows), total=total, alpha=alpha, weighting=weighting)

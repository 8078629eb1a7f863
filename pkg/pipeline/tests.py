"""
Tests for the block pipeline.

Test Cases:
1. Data consistency against the normal-equations solve
2. Block parameters and configuration validation
3. Single block execution, history growth, plug-in contract
4. Stage orderings and their reductions
5. Built-in plug-ins
6. Loss diagnostics and CSV export
7. Nuclear-norm input normalization
8. Rank trajectory on a noisy five-peak signal
"""
import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigurationError
from exponentials.domain import NoiseKind, NoiseSpec
from exponentials.services import add_noise, synthesize, table_signal
from hankel.domain import HankelShape
from hankel.services import hankel, hankel_adjoint_avg
from sampling.services import apply_U, apply_U_star, full, poisson_gap, rate_to_count, uniform_random
from solvers.factorization import as_operator, init_factors
from .consistency import data_consistency, data_consistency_normal_equations
from .domain import (
    DIAGNOSTIC_COLUMNS,
    BlockParams,
    PipelineConfig,
    Normalization,
    PipelineDiagnostics,
    PipelineMode,
    Stage,
    StageDiagnostic,
)
from .plugins import PluginInput, PluginShapeError, SvtShrinkPlugin, ZeroPlugin, builtin_plugins, get_plugin
from .services import (
    compute_losses,
    exponential_blocks,
    init_state,
    initial_blocks,
    input_scale,
    mri_blocks,
    run_block,
    run_pipeline,
    stage_schedule,
)


def _random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _two_peak_problem(length=63, m=32, seed=0):
    n = np.arange(length)
    truth = np.exp((-1 / 40 + 2j * np.pi * 0.2) * n) + 0.6 * np.exp((-1 / 25 + 2j * np.pi * 0.55) * n)
    pattern = poisson_gap(length, m, seed=seed)
    return truth, pattern, apply_U(truth, pattern)


class WrongShapePlugin:
    name = 'wrong_shape'

    def correct_p(self, inputs):
        return np.zeros((inputs.p.shape[0], inputs.p.shape[1] + 1))

    def correct_q(self, inputs):
        return np.zeros_like(inputs.q)


class HistoryWritingPlugin(ZeroPlugin):
    name = 'history_writer'

    def correct_p(self, inputs):
        inputs.history_p[0][0, 0] = 0
        return super().correct_p(inputs)


class DataConsistencyTestCase(SimpleTestCase):
    """Gamma-weighted blend with the measurements."""

    def test_scalar_case(self):
        pattern = full(1)
        self.assertEqual(data_consistency(np.array([2.0]), np.array([0.0]), 1.0, pattern)[0], 1.0)

    def test_matches_normal_equations(self):
        """
        Given: 100 random vectors, patterns and gammas
        When: Blending per sample and solving (I + gamma U*U) x = x_tilde + gamma U*y
        Then: Both agree to 1e-12
        """
        rng = np.random.default_rng(17)
        for trial in range(100):
            n_total = int(rng.integers(2, 40))
            pattern = uniform_random(n_total, int(rng.integers(1, n_total + 1)), seed=trial)
            zf = apply_U_star(_random_complex(rng, pattern.m), pattern)
            x_tilde = _random_complex(rng, n_total)
            gamma = float(10 ** rng.uniform(-3, 3))
            np.testing.assert_allclose(
                data_consistency(zf, x_tilde, gamma, pattern),
                data_consistency_normal_equations(zf, x_tilde, gamma, pattern),
                atol=1e-12,
            )

    def test_gamma_limits(self):
        rng = np.random.default_rng(2)
        pattern = poisson_gap(20, 9, seed=1)
        zf = apply_U_star(_random_complex(rng, 9), pattern)
        x_tilde = _random_complex(rng, 20)
        np.testing.assert_allclose(data_consistency(zf, x_tilde, 1e-15, pattern), x_tilde, atol=1e-12)
        blended = data_consistency(zf, x_tilde, 1e12, pattern)
        np.testing.assert_allclose(apply_U(blended, pattern), apply_U(zf, pattern), atol=1e-10)
        np.testing.assert_array_equal(blended[~pattern.mask], x_tilde[~pattern.mask])

    def test_coil_matrices_blend_row_wise(self):
        rng = np.random.default_rng(4)
        pattern = poisson_gap(16, 6, seed=2)
        zf = apply_U_star(_random_complex(rng, 6, 3), pattern)
        x_tilde = _random_complex(rng, 16, 3)
        blended = data_consistency(zf, x_tilde, 2.0, pattern)
        for coil in range(3):
            np.testing.assert_allclose(blended[:, coil], data_consistency(zf[:, coil], x_tilde[:, coil], 2.0, pattern))

    def test_rejects_bad_input(self):
        pattern = full(4)
        with self.assertRaises(ConfigurationError):
            data_consistency(np.zeros(4), np.zeros(4), 0.0, pattern)
        with self.assertRaises(ConfigurationError):
            data_consistency(np.zeros(4), np.zeros(5), 1.0, pattern)


class BlockParamsTestCase(SimpleTestCase):
    """Tabulated parameters and configuration validation."""

    def test_tabulated_blocks(self):
        blocks = exponential_blocks()
        self.assertEqual(len(blocks), 10)
        self.assertEqual(blocks[0], BlockParams(gamma_dl=5.2e5, gamma=1.9e5, beta_p=96.0, beta_q=87.6))
        self.assertEqual(len(mri_blocks()), 5)
        self.assertEqual(mri_blocks()[4].beta_q, 86.0)

    def test_initial_blocks(self):
        blocks = initial_blocks(3)
        self.assertEqual(len(blocks), 3)
        self.assertEqual(blocks[1], BlockParams(1e4, 1e4, 100.0, 100.0))
        with self.assertRaises(ConfigurationError):
            initial_blocks(0)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            BlockParams(gamma_dl=0.0, gamma=1.0, beta_p=1.0, beta_q=1.0)
        with self.assertRaises(ConfigurationError):
            PipelineConfig(blocks=())
        with self.assertRaises(ConfigurationError):
            PipelineConfig(blocks=initial_blocks(1), mode='ADLR_X')
        with self.assertRaises(ConfigurationError):
            PipelineConfig(blocks=initial_blocks(1), rank_cap=0)
        with self.assertRaises(ConfigurationError):
            PipelineConfig(blocks=initial_blocks(1), normalization='peak')


class RunBlockTestCase(SimpleTestCase):
    """One plug-in stage followed by one optimizer stage."""

    def setUp(self):
        self.truth, self.pattern, self.y = _two_peak_problem()
        self.params = initial_blocks(1)[0]

    def test_history_grows_by_two(self):
        state = init_state(self.y, self.pattern, rank_cap=3)
        self.assertEqual(len(state.history), 1)
        state = run_block(state, self.params, ZeroPlugin(), self.y, self.pattern)
        state = run_block(state, self.params, ZeroPlugin(), self.y, self.pattern, block=2)
        self.assertEqual(len(state.history), 5)
        np.testing.assert_array_equal(state.history.h_p[-1], state.pair.p)

    def test_single_block_pipeline_equals_run_block(self):
        state = run_block(init_state(self.y, self.pattern, rank_cap=3), self.params, ZeroPlugin(), self.y, self.pattern)
        x, diagnostics = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=(self.params,), rank_cap=3,
                                                                         normalization=Normalization.NONE))
        np.testing.assert_array_equal(x, state.x)
        self.assertEqual([entry.stage for entry in diagnostics], [Stage.PLUGIN, Stage.OPTIMIZER])

    def test_wrong_correction_shape(self):
        state = init_state(self.y, self.pattern, rank_cap=3)
        with self.assertRaises(PluginShapeError) as caught:
            run_block(state, self.params, WrongShapePlugin(), self.y, self.pattern)
        self.assertEqual(caught.exception.plugin, 'wrong_shape')

    def test_history_is_read_only_for_plugins(self):
        state = init_state(self.y, self.pattern, rank_cap=3)
        with self.assertRaises(ValueError):
            run_block(state, self.params, HistoryWritingPlugin(), self.y, self.pattern)
        self.assertNotEqual(state.history.h_p[0][0, 0], 0)

    def test_improves_on_zero_filling(self):
        x, _ = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=initial_blocks(10), rank_cap=2))
        zf = apply_U_star(self.y, self.pattern)
        self.assertLess(np.linalg.norm(x - self.truth), np.linalg.norm(zf - self.truth))


class StageOrderingTestCase(SimpleTestCase):
    """ADLR variants."""

    def setUp(self):
        self.truth, self.pattern, self.y = _two_peak_problem(seed=5)

    def test_schedules(self):
        self.assertEqual(stage_schedule(PipelineMode.ADLR, 2),
                         [(1, 'dl'), (1, 'opt'), (2, 'dl'), (2, 'opt')])
        self.assertEqual(stage_schedule(PipelineMode.ADLR_D, 2), [(1, 'dl'), (2, 'dl')])
        self.assertEqual(stage_schedule(PipelineMode.ADLR_OD, 2),
                         [(1, 'opt'), (2, 'opt'), (1, 'dl'), (2, 'dl')])
        self.assertEqual(stage_schedule(PipelineMode.ADLR_DO, 2),
                         [(1, 'dl'), (2, 'dl'), (1, 'opt'), (2, 'opt')])
        with self.assertRaises(ConfigurationError):
            stage_schedule('ADLR_X', 2)

    def test_plugin_only_mode_reduces_to_truncated_svd(self):
        """
        Given: ADLR_D with the zero plug-in
        When: Running all ten tabulated blocks
        Then: The output is the data-consistent rank-R truncation of H(U*y)
        """
        blocks = exponential_blocks()
        x, diagnostics = run_pipeline(self.y, self.pattern,
                                      PipelineConfig(blocks=blocks, rank_cap=4, mode=PipelineMode.ADLR_D))
        zf = apply_U_star(self.y, self.pattern)
        shape = HankelShape.for_length(zf.size)
        truncated = hankel_adjoint_avg(init_factors(zf, shape, 4).product(), shape)
        expected = data_consistency(zf, truncated, blocks[-1].gamma_dl, self.pattern)
        np.testing.assert_allclose(x, expected, atol=1e-12)
        self.assertEqual(len(diagnostics), 10)

    def test_stage_counts(self):
        blocks = initial_blocks(3)
        for mode, count in ((PipelineMode.ADLR, 6), (PipelineMode.ADLR_D, 3),
                            (PipelineMode.ADLR_OD, 6), (PipelineMode.ADLR_DO, 6)):
            _, diagnostics = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=blocks, rank_cap=2, mode=mode))
            self.assertEqual(len(diagnostics), count)
            self.assertEqual(diagnostics.mode, mode)

    def test_optimizer_first_ordering(self):
        _, diagnostics = run_pipeline(self.y, self.pattern,
                                      PipelineConfig(blocks=initial_blocks(2), rank_cap=2, mode=PipelineMode.ADLR_OD))
        self.assertEqual([entry.stage for entry in diagnostics], ['opt', 'opt', 'dl', 'dl'])
        self.assertEqual([entry.block for entry in diagnostics], [1, 2, 1, 2])


class PluginTestCase(SimpleTestCase):
    """Built-in plug-ins."""

    def setUp(self):
        rng = np.random.default_rng(9)
        self.shape = HankelShape(10, 10)
        self.hx = hankel(_random_complex(rng, self.shape.length), self.shape)
        self.p = _random_complex(rng, 10, 3)
        self.q = _random_complex(rng, 10, 3)

    def _inputs(self, p=None):
        return PluginInput(hx=self.hx, p=self.p if p is None else p, q=self.q, history_p=(), history_q=())

    def _corrected_product(self, plugin):
        p_dl = self.p + plugin.correct_p(self._inputs())
        q_dl = self.q + plugin.correct_q(self._inputs(p_dl))
        return p_dl @ q_dl.conj().T

    def test_zero_plugin(self):
        plugin = ZeroPlugin()
        self.assertFalse(np.any(plugin.correct_p(self._inputs())))
        self.assertFalse(np.any(plugin.correct_q(self._inputs())))

    def test_shrink_without_threshold_is_best_rank_r(self):
        u, s, vh = np.linalg.svd(self.hx)
        best = (u[:, :3] * s[:3]) @ vh[:3]
        np.testing.assert_allclose(self._corrected_product(SvtShrinkPlugin(0.0)), best, atol=1e-10)

    def test_large_threshold_drives_product_to_zero(self):
        threshold = 10 * np.linalg.norm(self.hx)
        np.testing.assert_array_equal(self._corrected_product(SvtShrinkPlugin(threshold)), np.zeros_like(self.hx))

    def test_registry(self):
        self.assertEqual(set(builtin_plugins()), {'zero', 'svt_shrink'})
        self.assertEqual(get_plugin('svt_shrink', 0.5).threshold, 0.5)
        with self.assertRaises(ConfigurationError):
            get_plugin('densenet')
        with self.assertRaises(ConfigurationError):
            SvtShrinkPlugin(-1.0)


class LossTestCase(SimpleTestCase):
    """Per-stage losses and their weighted totals."""

    def setUp(self):
        self.truth, self.pattern, self.y = _two_peak_problem(seed=3)

    def _diagnostics_at(self, x, lowrank_x):
        diagnostics = PipelineDiagnostics(mode=PipelineMode.ADLR)
        for block in (1, 2):
            for stage in (Stage.PLUGIN, Stage.OPTIMIZER):
                diagnostics.append(StageDiagnostic(block=block, stage=stage, rlne=None, effective_rank=2,
                                                   nuclear_norm=1.0, x=x, lowrank_x=lowrank_x))
        return diagnostics

    def test_perfect_reconstruction_has_zero_loss(self):
        table = compute_losses(self._diagnostics_at(self.truth, self.truth), self.truth)
        self.assertEqual(table.total, 0.0)
        self.assertTrue(all(row[2] == 0.0 for row in table.rows))

    def test_alpha_zero_is_plain_squared_error(self):
        x = self.truth + 0.1
        diagnostics = self._diagnostics_at(x, np.zeros_like(self.truth))
        table = compute_losses(diagnostics, self.truth, alpha=0.0)
        expected = float(np.linalg.norm(x - self.truth) ** 2)
        self.assertAlmostEqual(diagnostics.stages[0].loss_dl, expected)
        self.assertAlmostEqual(diagnostics.stages[1].loss_opt, expected)
        self.assertAlmostEqual(table.total, 4 * expected)

    def test_greedy_total_bounds_non_greedy(self):
        _, diagnostics = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=initial_blocks(3), rank_cap=2),
                                      truth=self.truth)
        greedy = compute_losses(diagnostics, self.truth, weights='greedy')
        non_greedy = compute_losses(diagnostics, self.truth, weights='non_greedy')
        self.assertGreaterEqual(greedy.total, non_greedy.total)
        self.assertEqual(non_greedy.total, non_greedy.rows[-1][2])

    def test_pipeline_fills_losses(self):
        _, diagnostics = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=initial_blocks(2), rank_cap=2),
                                      truth=self.truth)
        for entry in diagnostics.of_stage(Stage.PLUGIN):
            self.assertIsNotNone(entry.loss_dl)
            self.assertIsNone(entry.loss_opt)
        for entry in diagnostics.of_stage(Stage.OPTIMIZER):
            self.assertIsNotNone(entry.loss_opt)
            self.assertIsNotNone(entry.rlne)

    def test_rejects_bad_weights(self):
        diagnostics = self._diagnostics_at(self.truth, self.truth)
        with self.assertRaises(ConfigurationError):
            compute_losses(diagnostics, self.truth, weights=[1.0])
        with self.assertRaises(ConfigurationError):
            compute_losses(diagnostics, self.truth, weights='uniform')
        with self.assertRaises(ConfigurationError):
            compute_losses(diagnostics, self.truth, alpha=-1.0)

    def test_csv_export(self):
        _, diagnostics = run_pipeline(self.y, self.pattern, PipelineConfig(blocks=initial_blocks(2), rank_cap=2),
                                      truth=self.truth)
        lines = diagnostics.to_csv().splitlines()
        self.assertEqual(lines[0], ','.join(DIAGNOSTIC_COLUMNS))
        self.assertEqual(len(lines), 5)
        self.assertTrue(lines[1].startswith('1,dl,'))


class NormalizationTestCase(SimpleTestCase):
    """Nuclear-norm input normalization."""

    def setUp(self):
        self.truth, self.pattern, self.y = _two_peak_problem(seed=2)
        self.config = PipelineConfig(blocks=initial_blocks(3), rank_cap=3)

    def test_equals_raw_run_on_normalized_input(self):
        """
        Given: The default nuclear normalization
        When: Running on y, and separately on y divided by ||H(U*y)||_* without normalization
        Then: The first output is the second multiplied back by the nuclear norm
        """
        zf = apply_U_star(self.y, self.pattern)
        scale = input_scale(zf, as_operator(None, zf))
        self.assertAlmostEqual(scale, float(np.linalg.svd(hankel(zf, HankelShape.for_length(zf.size)),
                                                          compute_uv=False).sum()))
        x, _ = run_pipeline(self.y, self.pattern, self.config)
        raw = PipelineConfig(blocks=initial_blocks(3), rank_cap=3, normalization=Normalization.NONE)
        x_raw, _ = run_pipeline(self.y / scale, self.pattern, raw)
        np.testing.assert_allclose(x, scale * x_raw, rtol=1e-12)

    def test_output_scales_with_input(self):
        x, diagnostics = run_pipeline(self.y, self.pattern, self.config, truth=self.truth)
        x_big, diagnostics_big = run_pipeline(1e3 * self.y, self.pattern, self.config, truth=1e3 * self.truth)
        np.testing.assert_allclose(x_big, 1e3 * x, rtol=1e-8, atol=1e-8 * np.abs(x_big).max())
        self.assertEqual(diagnostics_big.effective_ranks, diagnostics.effective_ranks)
        for small, big in zip(diagnostics, diagnostics_big):
            self.assertAlmostEqual(big.nuclear_norm / small.nuclear_norm, 1e3, places=6)
            self.assertAlmostEqual(big.rlne, small.rlne, places=8)

    def test_raw_scale_and_all_zero_input(self):
        zf = apply_U_star(self.y, self.pattern)
        operator = as_operator(None, zf)
        self.assertEqual(input_scale(zf, operator, Normalization.NONE), 1.0)
        self.assertEqual(input_scale(np.zeros_like(zf), operator), 1.0)


class RankTrajectoryTestCase(SimpleTestCase):
    """Effective rank along the tabulated ten-block schedule."""

    def test_rank_settles_near_true_rank(self):
        """
        Given: The S2 signal with sigma=0.03 at 25% Poisson-gap sampling
        When: Running ADLR with the default configuration: zero plug-in, ten
              tabulated blocks, R=20 and nuclear normalization
        Then: The optimizer-stage effective rank is non-increasing over the last
              five blocks and ends at 8 or below
        """
        truth = synthesize(table_signal('S2'))
        noisy = add_noise(truth, NoiseSpec(kind=NoiseKind.GAUSSIAN, scale=0.03, seed=7))
        pattern = poisson_gap(255, rate_to_count(255, 0.25), seed=3)
        _, diagnostics = run_pipeline(apply_U(noisy, pattern), pattern,
                                      PipelineConfig(blocks=exponential_blocks()), truth=truth)
        ranks = [entry.effective_rank for entry in diagnostics.of_stage(Stage.OPTIMIZER)]
        self.assertEqual(len(ranks), 10)
        tail = ranks[-5:]
        self.assertTrue(all(b <= a for a, b in zip(tail, tail[1:])), ranks)
        self.assertLessEqual(ranks[-1], 8)

"""
Tests for the exponential signal model.

Test Cases:
1. Synthesis of known signals and linearity in the peak list
2. Tabulated test signals
3. Random training models: ranges, determinism, peak counts
4. Additive noise statistics and bounds
5. Training-set generation
"""
import math

import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import hankel as dense_hankel, svdvals

from core.exceptions import ConfigurationError
from core.rng import make_rng
from .domain import ExponentialModel, NoiseKind, NoiseSpec, PeakParams, TrainingRanges
from .factories import ExponentialModelFactory, NoiseSpecFactory, PeakParamsFactory
from .services import (
    add_noise,
    from_spectrum,
    generate_training_set,
    sample_training_model,
    synthesize,
    table_signal,
    to_spectrum,
    training_noise_scale,
)


def _hankel_singular_values(x):
    n1 = (len(x) + 2) // 2
    return svdvals(dense_hankel(x[:n1], x[n1 - 1:]))


class SynthesizeTestCase(SimpleTestCase):
    """Evaluation of the exponential model."""

    def test_undamped_quarter_cycle(self):
        """
        Given: One undamped peak at f=0.25 with four samples
        When: Synthesizing
        Then: The signal walks 1, i, -1, -i
        """
        model = ExponentialModel(peaks=(PeakParams(1.0, 1e12, 0.25, 0.0),), length=4)
        np.testing.assert_allclose(synthesize(model), [1, 1j, -1, -1j], atol=1e-6)

    def test_empty_model_is_zero(self):
        np.testing.assert_array_equal(synthesize(ExponentialModel(peaks=(), length=16)), np.zeros(16))

    def test_linear_in_peak_list(self):
        first = ExponentialModelFactory(peaks=(PeakParamsFactory(), PeakParamsFactory()))
        second = first.with_peaks((PeakParamsFactory(amplitude=0.4, phase=1.0),))
        both = first.with_peaks(first.peaks + second.peaks)
        np.testing.assert_allclose(synthesize(both), synthesize(first) + synthesize(second), atol=1e-12)

    def test_table_signal_has_rank_five(self):
        """
        Given: The noise-free S2 signal with N=255
        When: Building its 128x128 Hankel matrix
        Then: Exactly five singular values exceed 1e-8 of the largest
        """
        x = synthesize(table_signal('S2'))
        sv = _hankel_singular_values(x)
        self.assertEqual(len(sv), 128)
        self.assertEqual(int(np.sum(sv > 1e-8 * sv[0])), 5)

    def test_rank_equals_peak_count(self):
        model = ExponentialModel(
            peaks=tuple(PeakParams(1.0, 80.0, f, 0.0) for f in (0.1, 0.3, 0.55)), length=63
        )
        sv = _hankel_singular_values(synthesize(model))
        self.assertGreater(sv[2] / sv[3], 1e6)


class TableSignalTestCase(SimpleTestCase):
    """Fixed five-peak test signals."""

    def test_s2_first_peak(self):
        peak = table_signal('S2').peaks[0]
        self.assertEqual(peak.amplitude, 0.100)
        self.assertEqual(peak.damping, 50.0)
        self.assertAlmostEqual(peak.phase, 0.4 * math.pi)
        self.assertEqual(peak.frequency, 0.165)

    def test_s1_last_peak(self):
        model = table_signal('S1')
        peak = model.peaks[4]
        self.assertEqual((peak.amplitude, peak.damping, peak.frequency), (1.0, 150.0, 0.831))
        self.assertAlmostEqual(peak.phase, 2.0 * math.pi)
        self.assertEqual((model.length, model.sample_interval), (255, 1.0))

    def test_tables_differ_only_in_amplitudes(self):
        for p1, p2 in zip(table_signal('S1').peaks, table_signal('S2').peaks):
            self.assertEqual((p1.damping, p1.frequency, p1.phase), (p2.damping, p2.frequency, p2.phase))
        self.assertNotEqual(table_signal('S1').peaks[0].amplitude, table_signal('S2').peaks[0].amplitude)

    def test_unknown_table_rejected(self):
        with self.assertRaises(ConfigurationError):
            table_signal('S9')


class TrainingModelTestCase(SimpleTestCase):
    """Random training models."""

    def test_fixed_seed_is_deterministic(self):
        ranges = TrainingRanges()
        self.assertEqual(sample_training_model(ranges, make_rng(42)), sample_training_model(ranges, make_rng(42)))

    def test_draws_stay_in_range_and_cover_counts(self):
        """
        Given: The default training ranges
        When: Drawing 10^4 models
        Then: Every peak count 1..10 occurs and amplitudes stay in [0.05, 1]
        """
        rng = make_rng(7)
        ranges = TrainingRanges()
        counts = set()
        for _ in range(10_000):
            model = sample_training_model(ranges, rng)
            counts.add(model.peak_count)
            for peak in model.peaks:
                self.assertTrue(0.05 <= peak.amplitude <= 1.0)
                self.assertTrue(10.0 <= peak.damping <= 179.2)
        self.assertEqual(counts, set(range(1, 11)))

    def test_invalid_range_rejected(self):
        with self.assertRaises(ConfigurationError):
            TrainingRanges(amplitude=(1.0, 0.5))

    def test_peak_invariants(self):
        with self.assertRaises(ConfigurationError):
            PeakParams(amplitude=0.0, damping=1.0, frequency=0.1)
        with self.assertRaises(ConfigurationError):
            PeakParams(amplitude=1.0, damping=1.0, frequency=1.0)
        with self.assertRaises(ConfigurationError):
            PeakParams(amplitude=1.0, damping=1.0, frequency=0.1, phase=7.0)


class AddNoiseTestCase(SimpleTestCase):
    """Additive complex noise."""

    def test_zero_scale_is_exact(self):
        x = synthesize(table_signal('S2'))
        np.testing.assert_array_equal(add_noise(x, NoiseSpecFactory(scale=0.0)), x)

    def test_gaussian_component_statistics(self):
        """
        Given: 10^6 zero samples and sigma=0.03
        When: Adding gaussian noise
        Then: Each component has std within 1% of sigma and near-zero mean
        """
        noise = add_noise(np.zeros(1_000_000), NoiseSpec(kind=NoiseKind.GAUSSIAN, scale=0.03, seed=1))
        self.assertAlmostEqual(np.std(noise.real) / 0.03, 1.0, delta=0.01)
        self.assertAlmostEqual(np.std(noise.imag) / 0.03, 1.0, delta=0.01)
        self.assertLess(abs(np.mean(noise)), 5 * 0.03 / 1e3)

    def test_uniform_support(self):
        noise = add_noise(np.zeros(100_000), NoiseSpec(kind=NoiseKind.UNIFORM, scale=0.10, seed=2))
        self.assertLessEqual(np.max(np.abs(noise.real)), 0.10)
        self.assertLessEqual(np.max(np.abs(noise.imag)), 0.10)

    def test_same_seed_same_noise(self):
        x = np.zeros(32)
        spec = NoiseSpecFactory(seed=5)
        np.testing.assert_array_equal(add_noise(x, spec), add_noise(x, spec))

    def test_negative_scale_rejected(self):
        with self.assertRaises(ConfigurationError):
            NoiseSpec(scale=-1.0)


class TrainingSetTestCase(SimpleTestCase):
    """Training pairs with per-signal noise and patterns."""

    def test_noise_scale_within_bounds(self):
        rng = make_rng(3)
        scales = [training_noise_scale(rng) for _ in range(1000)]
        self.assertTrue(all(0.0 <= s <= 0.04 for s in scales))

    def test_samples_have_own_patterns(self):
        samples = generate_training_set(4, 0.25, seed=11)
        self.assertEqual(len(samples), 4)
        self.assertEqual(len({s.pattern.omega for s in samples}), 4)
        for sample in samples:
            self.assertEqual(sample.pattern.m, 64)
            unsampled = ~sample.pattern.mask
            self.assertTrue(np.all(sample.zero_filled[unsampled] == 0))

    def test_spectrum_round_trip(self):
        x = synthesize(table_signal('S1'))
        np.testing.assert_allclose(from_spectrum(to_spectrum(x)), x, atol=1e-12)
        self.assertAlmostEqual(np.linalg.norm(to_spectrum(x)), np.linalg.norm(x), places=10)

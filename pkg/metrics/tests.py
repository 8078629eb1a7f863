"""
Tests for the reconstruction and mismatch metrics.

Test Cases:
1. RLNE and squared Pearson correlation
2. Effective rank and nuclear norm of Hankel matrices
3. 101-bin histograms of zero-filled data
4. 0/1-cost transport distance against a linear-programming oracle
5. Peak detection, per-peak RLNE and peak intensities
"""
import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import linprog

from exponentials.services import synthesize, table_signal, to_spectrum
from .domain import HISTOGRAM_BINS, Histogram101, MetricError
from .services import (
    build_histogram,
    detect_peaks,
    effective_rank,
    nuclear_norm,
    peak_intensities,
    peak_rlne,
    peak_segments,
    pearson_r2,
    rlne,
    shared_range,
    transport_01,
    wasserstein_01,
)


def _transport_oracle(p, q):
    """Minimum-cost transport plan under 0/1 cost solved as a linear program."""
    bins = p.size
    cost = (1.0 - np.eye(bins)).ravel()
    rows = np.kron(np.eye(bins), np.ones(bins))
    cols = np.kron(np.ones(bins), np.eye(bins))
    result = linprog(cost, A_eq=np.vstack([rows, cols]), b_eq=np.concatenate([p, q]), bounds=(0, None),
                     method='highs')
    return result.fun


def _random_mass(rng, bins):
    mass = rng.uniform(size=bins)
    return mass / mass.sum()


def _histogram(rng):
    return Histogram101(mass=_random_mass(rng, HISTOGRAM_BINS), lo=0.0, hi=1.0)


class QualityMetricTestCase(SimpleTestCase):
    """RLNE and Pearson r^2."""

    def test_rlne(self):
        truth = np.array([3.0, 4.0j])
        self.assertEqual(rlne(truth, truth), 0.0)
        self.assertEqual(rlne(truth, np.zeros(2)), 1.0)
        self.assertAlmostEqual(rlne(truth, 1.1 * truth), 0.1)

    def test_rlne_errors(self):
        with self.assertRaises(MetricError):
            rlne(np.zeros(3), np.ones(3))
        with self.assertRaises(MetricError):
            rlne(np.ones(3), np.ones(4))

    def test_pearson(self):
        c = np.array([1.0, 4.0, 2.0, 8.0, 5.0])
        self.assertAlmostEqual(pearson_r2(c, c), 1.0)
        self.assertAlmostEqual(pearson_r2(c, -c), 1.0)
        self.assertAlmostEqual(pearson_r2(c, 3.5 * c - 2.0), 1.0)
        self.assertLess(pearson_r2(c, [2.0, 1.0, 5.0, 1.0, 3.0]), 1.0)

    def test_pearson_errors(self):
        with self.assertRaises(MetricError):
            pearson_r2([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with self.assertRaises(MetricError):
            pearson_r2([1.0], [1.0])


class RankMetricTestCase(SimpleTestCase):
    """Effective rank and nuclear norm."""

    def test_noise_free_five_peaks(self):
        self.assertEqual(effective_rank(synthesize(table_signal('S2'))), 5)

    def test_single_exponential(self):
        x = 0.7 * np.exp((-1 / 60 + 2j * np.pi * 0.3) * np.arange(255))
        self.assertEqual(effective_rank(x), 1)
        decay = np.exp(-2 * np.arange(128) / 60)
        self.assertAlmostEqual(nuclear_norm(x), 0.7 * decay.sum(), delta=1e-9 * decay.sum())

    def test_threshold_at_one_counts_nothing(self):
        self.assertEqual(effective_rank(synthesize(table_signal('S1')), threshold=1.0), 0)

    def test_zero_signal(self):
        with self.assertRaises(MetricError):
            effective_rank(np.zeros(15))
        self.assertEqual(nuclear_norm(np.zeros(15)), 0.0)


class HistogramTestCase(SimpleTestCase):
    """Mass functions of zero-filled signals."""

    def test_zero_bin_and_edges(self):
        histogram = build_histogram([np.array([0.0, 0.0, 1.0, 2.0])])
        self.assertEqual(histogram.range, (1.0, 2.0))
        self.assertEqual(histogram.mass[0], 0.5)
        self.assertEqual(histogram.mass[1], 0.25)
        self.assertEqual(histogram.mass[-1], 0.25)
        self.assertAlmostEqual(histogram.mass.sum(), 1.0)

    def test_shared_range_clips(self):
        histogram = build_histogram([np.array([0.5, 1.5, 3.0])], shared_range=(1.0, 2.0))
        self.assertAlmostEqual(histogram.mass[1], 1 / 3)
        self.assertAlmostEqual(histogram.mass[-1], 1 / 3)
        self.assertEqual(histogram.mass[0], 0.0)

    def test_log_scaled_range(self):
        signals = [np.array([0.0, 0.01, 10.0j])]
        lo, hi = shared_range(signals, log_scaled=True)
        self.assertAlmostEqual(lo, -2.0)
        self.assertAlmostEqual(hi, 1.0)
        self.assertTrue(build_histogram(signals, log_scaled=True).log_scaled)

    def test_pooled_range_across_sets(self):
        self.assertEqual(shared_range([np.array([1.0, 3.0])], [np.array([0.0, 5.0])]), (1.0, 5.0))

    def test_invalid_inputs(self):
        with self.assertRaises(MetricError):
            build_histogram([])
        with self.assertRaises(MetricError):
            build_histogram([np.ones(4)], shared_range=(1.0, 1.0))
        with self.assertRaises(MetricError):
            Histogram101(mass=np.full(HISTOGRAM_BINS, 0.5), lo=0.0, hi=1.0)
        with self.assertRaises(MetricError):
            Histogram101(mass=np.ones(10) / 10, lo=0.0, hi=1.0)


class TransportTestCase(SimpleTestCase):
    """0/1-cost optimal transport."""

    def test_matches_linear_program(self):
        """
        Given: 50 random pairs of 5-bin mass functions
        When: Comparing the closed form with the transport linear program
        Then: Both agree to 1e-8
        """
        rng = np.random.default_rng(13)
        for _ in range(50):
            p, q = _random_mass(rng, 5), _random_mass(rng, 5)
            self.assertAlmostEqual(transport_01(p, q), _transport_oracle(p, q), delta=1e-8)

    def test_metric_axioms(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p, q, r = _histogram(rng), _histogram(rng), _histogram(rng)
            self.assertEqual(wasserstein_01(p, p), 0.0)
            self.assertAlmostEqual(wasserstein_01(p, q), wasserstein_01(q, p))
            self.assertLessEqual(wasserstein_01(p, r), wasserstein_01(p, q) + wasserstein_01(q, r) + 1e-12)
            self.assertLessEqual(wasserstein_01(p, q), 1.0)

    def test_disjoint_support_costs_one(self):
        self.assertEqual(transport_01([1.0, 0.0], [0.0, 1.0]), 1.0)

    def test_incompatible_histograms(self):
        rng = np.random.default_rng(0)
        p = _histogram(rng)
        q = Histogram101(mass=_random_mass(rng, HISTOGRAM_BINS), lo=0.0, hi=2.0)
        with self.assertRaises(MetricError):
            wasserstein_01(p, q)
        with self.assertRaises(MetricError):
            transport_01(np.ones(3) / 3, np.ones(4) / 4)


class PeakMetricTestCase(SimpleTestCase):
    """Per-peak errors on spectra."""

    def setUp(self):
        self.spectrum = to_spectrum(synthesize(table_signal('S2')))

    def test_five_peaks_detected(self):
        peaks = detect_peaks(np.abs(self.spectrum))
        self.assertEqual(len(peaks), 5)
        np.testing.assert_array_equal(peaks, np.sort(peaks))

    def test_segments_tile_the_spectrum(self):
        magnitude = np.array([0.0, 3.0, 1.0, 0.5, 4.0, 0.2])
        segments = peak_segments(magnitude, np.array([1, 4]))
        self.assertEqual(segments, [slice(0, 3), slice(3, 6)])

    def test_peak_rlne(self):
        self.assertEqual(peak_rlne(self.spectrum, self.spectrum), [0.0] * 5)
        errors = peak_rlne(self.spectrum, 1.1 * self.spectrum)
        self.assertEqual(len(errors), 5)
        np.testing.assert_allclose(errors, 0.1)

    def test_peak_rlne_errors(self):
        with self.assertRaises(MetricError):
            peak_rlne(self.spectrum, self.spectrum[:-1])
        with self.assertRaises(MetricError):
            peak_rlne(np.zeros(16), np.zeros(16))

    def test_intensities_1d(self):
        c, d = peak_intensities(self.spectrum, 2.0 * self.spectrum)
        self.assertEqual(c.shape, (5,))
        np.testing.assert_allclose(d, 2.0 * c)
        self.assertAlmostEqual(pearson_r2(c, d), 1.0)

    def test_intensities_2d(self):
        rows, cols = np.mgrid[0:32, 0:32]
        spectrum = (np.exp(-((rows - 8) ** 2 + (cols - 10) ** 2) / 4.0)
                    + 0.5 * np.exp(-((rows - 22) ** 2 + (cols - 20) ** 2) / 4.0))
        c, d = peak_intensities(spectrum, spectrum)
        self.assertEqual(c.shape, (2,))
        np.testing.assert_array_equal(c, d)
        window = np.abs(spectrum[7:10, 9:12]).sum()
        self.assertAlmostEqual(c.max(), window)

"""
Tests for sampling patterns and the U / U* operators.

Test Cases:
1. Poisson-gap: exact count, forced index 0, early bias, determinism, exhausted adjustments
2. Cartesian 1D: centre band arithmetic, full rate, determinism
3. U and U*: definitions, isometry, projector identities
4. MASK text format round trip and malformed files
"""
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigurationError, DataIOError
from .domain import PatternKind, SamplingPattern
from .formats import format_mask, parse_mask, read_mask, write_mask
from .services import (
    SamplingError,
    apply_U,
    apply_U_star,
    cartesian_1d,
    full,
    make_pattern,
    poisson_gap,
    rate_to_count,
    sampling_mask,
    uniform_random,
)


class PoissonGapTestCase(SimpleTestCase):
    """Poisson-gap schedule generation."""

    def test_full_count_returns_every_index(self):
        """
        Given: M equal to N
        When: Generating a Poisson-gap schedule
        Then: Every position is sampled
        """
        pattern = poisson_gap(32, 32, seed=5)
        self.assertEqual(pattern.omega, tuple(range(32)))

    def test_exact_count_and_first_index(self):
        """
        Given: N=255, M=64
        When: Generating schedules for several seeds
        Then: Each has exactly 64 points and starts at 0
        """
        for seed in range(25):
            pattern = poisson_gap(255, 64, seed)
            self.assertEqual(pattern.m, 64)
            self.assertEqual(pattern.omega[0], 0)
            self.assertEqual(pattern.kind, PatternKind.POISSON_GAP)

    def test_sampling_is_denser_early(self):
        """
        Given: 200 seeds at N=255, M=64
        When: Averaging the sampled indices
        Then: The mean lies in the first half of the grid
        """
        means = [np.mean(poisson_gap(255, 64, seed).omega) for seed in range(200)]
        self.assertLess(np.mean(means), (255 - 1) / 2)

    def test_same_seed_same_schedule(self):
        self.assertEqual(poisson_gap(255, 64, 42), poisson_gap(255, 64, 42))

    def test_different_seeds_differ(self):
        self.assertNotEqual(poisson_gap(255, 64, 1).omega, poisson_gap(255, 64, 2).omega)

    def test_invalid_counts_rejected(self):
        with self.assertRaises(SamplingError):
            poisson_gap(10, 11, 0)
        with self.assertRaises(SamplingError):
            poisson_gap(10, 0, 0)

    def test_exhausted_adjustments_raise(self):
        """
        Given: An adjustment budget that runs out before the count is met
        When: Generating a Poisson-gap schedule
        Then: SamplingError reports N and M instead of padding or trimming the schedule
        """
        with mock.patch('sampling.services.POISSON_MAX_ADJUSTMENTS', 0):
            with self.assertRaises(SamplingError) as caught:
                poisson_gap(255, 64, 42)
        self.assertEqual((caught.exception.n_total, caught.exception.m), (255, 64))


class Cartesian1DTestCase(SimpleTestCase):
    """Cartesian phase-encode pattern generation."""

    def test_centre_band_arithmetic(self):
        """
        Given: Z=320, rate 0.25, centre fraction 0.04
        When: Generating the pattern
        Then: 80 lines are sampled including 13 contiguous central lines
        """
        pattern = cartesian_1d(320, 0.25, center_fraction=0.04, seed=3)
        self.assertEqual(pattern.m, 80)
        start = (320 - 13) // 2
        for line in range(start, start + 13):
            self.assertIn(line, pattern.omega)
        self.assertIn(320 // 2, pattern.omega)

    def test_full_rate_samples_all_lines(self):
        pattern = cartesian_1d(64, 1.0, center_fraction=0.08, seed=0)
        self.assertTrue(pattern.is_full)

    def test_same_seed_same_pattern(self):
        self.assertEqual(cartesian_1d(64, 0.4, 0.08, seed=9), cartesian_1d(64, 0.4, 0.08, seed=9))

    def test_infeasible_fractions_rejected(self):
        with self.assertRaises(SamplingError):
            cartesian_1d(64, 0.2, center_fraction=0.3)
        with self.assertRaises(SamplingError):
            cartesian_1d(64, 0.0)
        with self.assertRaises(SamplingError):
            cartesian_1d(64, 1.5)


class PatternHelpersTestCase(SimpleTestCase):
    """Rate conversion and the generic constructors."""

    def test_rate_to_count(self):
        self.assertEqual(rate_to_count(255, 0.25), 64)
        self.assertEqual(rate_to_count(255, 0.5), 128)
        self.assertEqual(rate_to_count(10, 0.01), 1)

    def test_uniform_random_is_sorted_and_sized(self):
        pattern = uniform_random(100, 30, seed=7)
        self.assertEqual(pattern.m, 30)
        self.assertEqual(list(pattern.omega), sorted(pattern.omega))

    def test_make_pattern_dispatch(self):
        self.assertEqual(make_pattern(PatternKind.POISSON_GAP, 255, 0.25, 1).m, 64)
        self.assertTrue(make_pattern(PatternKind.FULL, 12, 0.3, 1).is_full)
        self.assertEqual(make_pattern(PatternKind.CARTESIAN_1D, 64, 0.4, 1, 0.08).m, 25)

    def test_pattern_invariants_enforced(self):
        with self.assertRaises(ConfigurationError):
            SamplingPattern(omega=(2, 1), n_total=5)
        with self.assertRaises(ConfigurationError):
            SamplingPattern(omega=(0, 5), n_total=5)
        with self.assertRaises(ConfigurationError):
            SamplingPattern(omega=(), n_total=5)


class SamplingOperatorTestCase(SimpleTestCase):
    """U keeps sampled entries, U* zero-fills them back."""

    def setUp(self):
        self.pattern = SamplingPattern(omega=(0, 2), n_total=3)
        self.rng = np.random.default_rng(0)

    def test_apply_U_definition(self):
        np.testing.assert_array_equal(apply_U(np.array([10, 20, 30]), self.pattern), [10, 30])

    def test_apply_U_star_definition(self):
        np.testing.assert_array_equal(apply_U_star(np.array([10, 30]), self.pattern), [10, 0, 30])

    def test_full_pattern_is_identity(self):
        x = self.rng.standard_normal(8) + 1j * self.rng.standard_normal(8)
        np.testing.assert_array_equal(apply_U(x, full(8)), x)

    def test_projector_identities(self):
        """
        Given: A random Poisson-gap pattern and random data
        When: Composing U and U*
        Then: U U* is the identity and U* U is the 0/1 projector onto omega
        """
        pattern = poisson_gap(64, 20, seed=11)
        y = self.rng.standard_normal(20) + 1j * self.rng.standard_normal(20)
        x = self.rng.standard_normal(64) + 1j * self.rng.standard_normal(64)

        np.testing.assert_array_equal(apply_U(apply_U_star(y, pattern), pattern), y)
        np.testing.assert_array_equal(apply_U_star(apply_U(x, pattern), pattern), np.where(sampling_mask(pattern), x, 0))
        self.assertEqual(np.count_nonzero(apply_U_star(apply_U(x, pattern), pattern) == 0), 64 - 20)
        self.assertAlmostEqual(np.linalg.norm(apply_U_star(y, pattern)), np.linalg.norm(y), places=12)

    def test_coil_columns_ride_along(self):
        pattern = SamplingPattern(omega=(1, 3), n_total=4)
        block = np.arange(8).reshape(4, 2)
        np.testing.assert_array_equal(apply_U(block, pattern), [[2, 3], [6, 7]])
        self.assertEqual(apply_U_star(apply_U(block, pattern), pattern).shape, (4, 2))

    def test_length_mismatch_rejected(self):
        with self.assertRaises(SamplingError):
            apply_U(np.zeros(4), self.pattern)
        with self.assertRaises(SamplingError):
            apply_U_star(np.zeros(3), self.pattern)


class MaskFormatTestCase(SimpleTestCase):
    """MASK text container."""

    def test_round_trip_through_file(self):
        pattern = poisson_gap(255, 64, seed=17)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_mask(Path(tmp) / 'p.mask', pattern)
            self.assertEqual(read_mask(path), pattern)

    def test_header_layout(self):
        text = format_mask(SamplingPattern(omega=(0, 2), n_total=3, seed=4, kind=PatternKind.UNIFORM_RANDOM))
        self.assertEqual(text, '#MASK v1 3 2 4 uniform_random\n0\n2\n')

    def test_malformed_files_rejected(self):
        for text in ('', '#MASK v2 3 1 0 full\n0\n', '#MASK v1 3 2 0 full\n0\n',
                     '#MASK v1 3 1 0 spiral\n0\n', '#MASK v1 3 2 0 full\n2\n1\n'):
            with self.assertRaises(DataIOError):
                parse_mask(text)

    def test_missing_file_is_io_error(self):
        with self.assertRaises(DataIOError):
            read_mask('/nonexistent/dir/p.mask')

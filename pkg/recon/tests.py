"""
Tests for the reconstruction drivers.

Test Cases:
1. Data containers and root sum of squares
2. NMR row-by-row reconstruction: pass-through, determinism, row order, failures
3. Peak-intensity correlation on a synthetic 2D spectrum
4. MRI virtual-coil reconstruction: pass-through, sampled lines, phantom quality
"""
import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigurationError
from core.fft import fft_unitary
from exponentials.domain import ExponentialModel, PeakParams
from exponentials.services import synthesize, table_signal
from metrics.services import peak_intensities, pearson_r2, rlne
from pipeline.domain import BlockParams
from sampling.services import cartesian_1d, full, poisson_gap, rate_to_count
from solvers.domain import SolverConfig
from solvers.services import default_config
from .domain import KSpaceVolume, RowReconstructionError, Spectrum2D
from .services import (
    coil_phantom,
    images_to_kspace,
    kspace_to_images,
    map_rows,
    mri_config,
    reconstruct_mri,
    reconstruct_nmr,
    rsos,
    synthetic_spectrum2d,
)


def _four_peak_spectrum():
    model = ExponentialModel(length=64, peaks=(
        PeakParams(amplitude=1.0, damping=30.0, frequency=0.21),
        PeakParams(amplitude=0.7, damping=25.0, frequency=0.38, phase=1.0),
        PeakParams(amplitude=0.5, damping=35.0, frequency=0.55, phase=2.0),
        PeakParams(amplitude=0.8, damping=20.0, frequency=0.72, phase=3.0),
    ))
    return synthetic_spectrum2d(32, model, direct_centers=(6, 12, 20, 26))


class ContainerTestCase(SimpleTestCase):
    """Spectrum2D, KSpaceVolume and rSoS."""

    def test_spectrum_dimensions(self):
        spectrum = Spectrum2D(data=np.zeros((3, 8)))
        self.assertEqual((spectrum.direct_dim, spectrum.indirect_dim), (3, 8))
        with self.assertRaises(ConfigurationError):
            Spectrum2D(data=np.zeros(8))

    def test_volume_promotes_single_coil(self):
        volume = KSpaceVolume(data=np.zeros((4, 6)))
        self.assertEqual(volume.n_coils, 1)
        with self.assertRaises(ConfigurationError):
            KSpaceVolume(data=np.zeros((4, 6, 0)))

    def test_rsos(self):
        np.testing.assert_array_equal(rsos(np.array([[3.0 - 4.0j]])), [[5.0]])
        images = np.zeros((1, 1, 2), dtype=complex)
        images[0, 0] = (3.0, 4.0j)
        self.assertEqual(rsos(images)[0, 0], 5.0)

    def test_rsos_ignores_coil_phase(self):
        rng = np.random.default_rng(0)
        images = rng.standard_normal((5, 6, 3)) + 1j * rng.standard_normal((5, 6, 3))
        rotated = images * np.exp(1j * np.array([0.3, 1.7, -2.0]))
        np.testing.assert_allclose(rsos(rotated), rsos(images))
        self.assertTrue(np.all(rsos(images) >= 0))

    def test_fft_round_trip(self):
        volume = coil_phantom(16, 16, n_coils=2, seed=1)
        np.testing.assert_allclose(images_to_kspace(kspace_to_images(volume.data)), volume.data, atol=1e-12)


class RowMapTestCase(SimpleTestCase):
    """Ordered row map."""

    def test_threads_keep_row_order(self):
        self.assertEqual(map_rows(lambda i: i * i, 20, threads=4), [i * i for i in range(20)])

    def test_failure_reports_row(self):
        def failing(index):
            if index == 3:
                raise ConfigurationError('bad row')
            return index

        with self.assertRaises(RowReconstructionError) as caught:
            map_rows(failing, 6, threads=2)
        self.assertEqual(caught.exception.row, 3)
        self.assertEqual(caught.exception.exit_code, 2)


class NmrReconstructionTestCase(SimpleTestCase):
    """Row-by-row reconstruction along the indirect dimension."""

    def setUp(self):
        self.config = SolverConfig(lam=1e4, beta=100.0, rank_cap=5, max_iters=200, tol=1e-9)

    def test_full_pattern_passes_through(self):
        spectrum = _four_peak_spectrum()
        for solver in ('penalty', 'cs', 'adlr'):
            result = reconstruct_nmr(spectrum, full(64), solver=solver)
            np.testing.assert_array_equal(result.data, spectrum.data)

    def test_identical_rows_give_identical_errors(self):
        truth = synthesize(table_signal('S2'))
        spectrum = Spectrum2D(data=np.tile(truth, (4, 1)))
        pattern = poisson_gap(255, rate_to_count(255, 0.25), seed=2)
        result = reconstruct_nmr(spectrum, pattern, config=self.config)
        errors = [rlne(truth, row) for row in result.data]
        self.assertLess(max(errors) - min(errors), 1e-10)

    def test_commutes_with_row_permutation(self):
        spectrum = _four_peak_spectrum()
        pattern = poisson_gap(64, 32, seed=4)
        order = np.random.default_rng(5).permutation(spectrum.direct_dim)
        direct = reconstruct_nmr(spectrum, pattern, config=self.config)
        permuted = reconstruct_nmr(spectrum.with_data(spectrum.data[order]), pattern, config=self.config)
        np.testing.assert_array_equal(permuted.data, direct.data[order])

    def test_threads_match_sequential_run(self):
        spectrum = _four_peak_spectrum()
        pattern = poisson_gap(64, 32, seed=4)
        sequential = reconstruct_nmr(spectrum, pattern, config=self.config)
        parallel = reconstruct_nmr(spectrum, pattern, config=self.config, threads=4)
        np.testing.assert_array_equal(parallel.data, sequential.data)

    def test_pattern_mismatch(self):
        with self.assertRaises(ConfigurationError):
            reconstruct_nmr(_four_peak_spectrum(), full(63))
        with self.assertRaises(ConfigurationError):
            reconstruct_nmr(_four_peak_spectrum(), full(64), solver='magic')

    def test_diverging_row_aborts(self):
        data = _four_peak_spectrum().data.copy()
        data[2, :] = np.nan
        with self.assertRaises(RowReconstructionError) as caught:
            reconstruct_nmr(Spectrum2D(data=data), poisson_gap(64, 32, seed=1), config=self.config)
        self.assertEqual(caught.exception.row, 2)
        self.assertEqual(caught.exception.exit_code, 4)

    def test_peak_intensity_correlation(self):
        """
        Given: A synthetic four-peak 2D spectrum at 50% Poisson-gap sampling
        When: Reconstructing every row with the penalty solver
        Then: Peak intensities of truth and reconstruction correlate with r^2 >= 0.99
        """
        spectrum = _four_peak_spectrum()
        pattern = poisson_gap(64, 32, seed=9)
        config = default_config('penalty', 0.5, beta=100.0, rank_cap=4, max_iters=500, tol=1e-9)
        result = reconstruct_nmr(spectrum, pattern, config=config, threads=2)
        c, d = peak_intensities(fft_unitary(spectrum.data, axis=1), fft_unitary(result.data, axis=1))
        self.assertGreaterEqual(len(c), 4)
        self.assertGreaterEqual(pearson_r2(c, d), 0.99)


class MriReconstructionTestCase(SimpleTestCase):
    """Virtual-coil reconstruction of multi-coil k-space."""

    def setUp(self):
        self.volume = coil_phantom(64, 64, n_coils=2, seed=3)
        self.truth_image = rsos(kspace_to_images(self.volume.data))

    def test_full_pattern_passes_through(self):
        kspace, image = reconstruct_mri(self.volume, full(64))
        np.testing.assert_array_equal(kspace.data, self.volume.data)
        self.assertLess(rlne(self.truth_image, image), 1e-8)

    def test_phantom_quality(self):
        """
        Given: A two-coil 64x64 phantom at 40% Cartesian sampling with an 8% centre band
        When: Running the five tabulated blocks with the zero plug-in
        Then: The magnitude image RLNE is at most 0.08
        """
        pattern = cartesian_1d(64, 0.4, center_fraction=0.08, seed=0)
        with self.assertLogs('recon.services', level='WARNING'):
            _, image = reconstruct_mri(self.volume, pattern, mri_config())
        self.assertLessEqual(rlne(self.truth_image, image), 0.08)

    def test_sampled_lines_preserved_for_huge_gamma(self):
        volume = coil_phantom(8, 32, n_coils=2, seed=4)
        pattern = cartesian_1d(32, 0.5, center_fraction=0.125, seed=1)
        blocks = (BlockParams(gamma_dl=1e12, gamma=1e12, beta_p=100.0, beta_q=100.0),) * 2
        kspace, _ = reconstruct_mri(volume, pattern, mri_config(rank_cap=6, blocks=blocks))
        sampled = pattern.indices
        reference = np.abs(volume.data[:, sampled]).max()
        self.assertLess(np.abs(kspace.data[:, sampled] - volume.data[:, sampled]).max(), 1e-8 * reference)

    def test_threads_match_sequential_run(self):
        volume = coil_phantom(8, 32, n_coils=2, seed=6)
        pattern = cartesian_1d(32, 0.5, center_fraction=0.125, seed=2)
        config = mri_config(rank_cap=6)
        sequential, _ = reconstruct_mri(volume, pattern, config)
        parallel, _ = reconstruct_mri(volume, pattern, config, threads=3)
        np.testing.assert_array_equal(parallel.data, sequential.data)

    def test_pattern_mismatch(self):
        with self.assertRaises(ConfigurationError):
            reconstruct_mri(self.volume, full(63))

    def test_sampled_lines_come_from_measurements(self):
        volume = coil_phantom(8, 32, n_coils=1, seed=7)
        pattern = cartesian_1d(32, 0.5, center_fraction=0.125, seed=3)
        undersampled = np.zeros_like(volume.data)
        undersampled[:, pattern.indices] = volume.data[:, pattern.indices]
        from_full, _ = reconstruct_mri(volume, pattern, mri_config(rank_cap=6))
        from_zero_filled, _ = reconstruct_mri(KSpaceVolume(data=undersampled), pattern, mri_config(rank_cap=6))
        np.testing.assert_allclose(from_full.data, from_zero_filled.data, atol=1e-10)

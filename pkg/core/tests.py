"""
Tests for the shared core utilities.

Test Cases:
1. CPLX text format: bit-exact round trip and malformed input
2. Seeded generators and seed derivation
3. Unitary FFT helpers
4. Exit codes of the error hierarchy
"""
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .exceptions import ConfigurationError, DataIOError, ReconError, SolverDivergenceError
from .fft import fft_unitary, fftc, ifft_unitary, ifftc
from .formats import format_cplx, parse_cplx, read_cplx, write_cplx
from .rng import derive_seeds, make_rng, rng_state


class CplxFormatTestCase(SimpleTestCase):
    """CPLX container."""

    def test_round_trip_is_bit_exact(self):
        rng = np.random.default_rng(0)
        for shape in ((7,), (4, 3), (2, 3, 5)):
            data = rng.standard_normal(shape) * 1e-7 + 1j * rng.standard_normal(shape) * 1e9
            parsed = parse_cplx(format_cplx(data))
            self.assertEqual(parsed.shape, shape)
            np.testing.assert_array_equal(parsed.view(np.float64), data.view(np.float64))

    def test_header(self):
        self.assertEqual(format_cplx([1 + 2j, -0.5]), '#CPLX v1 2\n1,2\n-0.5,0\n')

    def test_file_round_trip(self):
        data = np.exp(2j * np.pi * np.arange(9) / 9).reshape(3, 3)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_cplx(Path(tmp) / 'nested' / 'signal.cplx', data)
            np.testing.assert_array_equal(read_cplx(path), data)

    def test_malformed_input(self):
        bad_inputs = (
            '',
            '#CPLX v2 2\n1,0\n2,0\n',
            '#CPLX v1 x\n1,0\n',
            '#CPLX v1 0\n',
            '#CPLX v1 3\n1,0\n2,0\n',
            '#CPLX v1 2\n1,0\n2\n',
            '#CPLX v1 1 1 1 1\n1,0\n',
        )
        for text in bad_inputs:
            with self.assertRaises(DataIOError, msg=text):
                parse_cplx(text)

    def test_missing_file(self):
        with self.assertRaises(DataIOError) as caught:
            read_cplx('/nonexistent/signal.cplx')
        self.assertEqual(caught.exception.exit_code, 3)

    def test_too_many_dimensions(self):
        with self.assertRaises(DataIOError):
            format_cplx(np.zeros((1, 1, 1, 1)))


class RngTestCase(SimpleTestCase):
    """Seeded generation."""

    def test_same_seed_same_draws(self):
        np.testing.assert_array_equal(make_rng(42).standard_normal(5), make_rng(42).standard_normal(5))

    def test_state_is_serializable(self):
        state = rng_state(make_rng(3))
        self.assertEqual(state['bit_generator'], 'PCG64')
        self.assertIsInstance(state['state']['state'], int)

    def test_derived_seeds(self):
        self.assertEqual(derive_seeds(7, 1, 2), derive_seeds(7, 1, 2))
        self.assertNotEqual(derive_seeds(7, 1, 2), derive_seeds(7, 2, 1))
        self.assertEqual(len(derive_seeds(7, 0, count=3)), 3)


class FftTestCase(SimpleTestCase):
    """Unitary transforms."""

    def test_parseval_and_inverse(self):
        x = make_rng(1).standard_normal(64) + 0j
        self.assertAlmostEqual(np.linalg.norm(fft_unitary(x)), np.linalg.norm(x))
        np.testing.assert_allclose(ifft_unitary(fft_unitary(x)), x, atol=1e-12)
        np.testing.assert_allclose(ifftc(fftc(x)), x, atol=1e-12)

    def test_centred_dc(self):
        spectrum = fftc(np.ones(8))
        self.assertAlmostEqual(abs(spectrum[4]), np.sqrt(8))
        self.assertAlmostEqual(float(np.abs(spectrum).sum()), np.sqrt(8))


class ExceptionTestCase(SimpleTestCase):
    """Exit codes reported by the CLI."""

    def test_exit_codes(self):
        self.assertEqual(ReconError('x').exit_code, 1)
        self.assertEqual(ConfigurationError('x').exit_code, 2)
        self.assertEqual(DataIOError('a.cplx', 'bad').exit_code, 3)
        error = SolverDivergenceError('penalty', 12)
        self.assertEqual(error.exit_code, 4)
        self.assertIn('iteration 12', str(error))

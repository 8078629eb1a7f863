"""
Tests for the Hankel operators.

Test Cases:
1. Forward transform definition and rank of exponentials
2. Averaging adjoint: round trip, anti-diagonal means, linearity
3. Unweighted adjoint is the Frobenius adjoint
4. flip_conj involution
5. Virtual-coil transform and its averaging adjoint
"""
import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import svdvals

from .domain import CoilBlock, HankelShape, HankelShapeError
from .services import (
    HankelOperator,
    VirtualCoilOperator,
    anti_diagonal_counts,
    flip_conj,
    hankel,
    hankel_adjoint_avg,
    hankel_adjoint_sum,
    hankel_vc,
    hankel_vc_adjoint,
)


def _random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _conjugate_symmetric_exponential(frequency, length):
    n = np.arange(length)
    omega = 2 * np.pi * frequency
    return np.exp(-1j * omega * (length - 1) / 2) * np.exp(1j * omega * n)


class HankelForwardTestCase(SimpleTestCase):
    """Forward Hankel transform."""

    def test_definition(self):
        np.testing.assert_array_equal(hankel([1, 2, 3], HankelShape(2, 2)), [[1, 2], [2, 3]])

    def test_single_entry(self):
        np.testing.assert_array_equal(hankel([5], HankelShape(1, 1)), [[5]])

    def test_default_shape(self):
        self.assertEqual(HankelShape.for_length(255), HankelShape(128, 128))
        self.assertEqual(HankelShape.for_length(64), HankelShape(33, 32))
        self.assertEqual(hankel(np.arange(7)).shape, (4, 4))

    def test_undamped_exponential_is_rank_one(self):
        x = np.exp(2j * np.pi * 0.21 * np.arange(40))
        for shape in (HankelShape(20, 21), HankelShape(5, 36), HankelShape(33, 8)):
            sv = svdvals(hankel(x, shape))
            self.assertLess(sv[1] / sv[0], 1e-10)

    def test_length_mismatch_rejected(self):
        with self.assertRaises(HankelShapeError):
            hankel(np.zeros(5), HankelShape(2, 2))


class HankelAdjointTestCase(SimpleTestCase):
    """Averaging and summing adjoints."""

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def test_anti_diagonal_means(self):
        np.testing.assert_array_equal(hankel_adjoint_avg(np.array([[1, 2], [2, 3]])), [1, 2, 3])
        np.testing.assert_array_equal(hankel_adjoint_avg(np.array([[0, 2], [4, 6]])), [0, 3, 6])

    def test_round_trip_for_random_lengths(self):
        """
        Given: 200 random complex vectors with lengths 3..1023 and random shapes
        When: Applying H then the averaging adjoint
        Then: The vector is recovered to 1e-12
        """
        for _ in range(200):
            length = int(self.rng.integers(3, 1024))
            n1 = int(self.rng.integers(1, length + 1))
            shape = HankelShape(n1, length + 1 - n1)
            x = _random_complex(self.rng, length)
            np.testing.assert_allclose(hankel_adjoint_avg(hankel(x, shape), shape), x, rtol=1e-12, atol=1e-12)

    def test_linearity(self):
        shape = HankelShape(4, 6)
        a, b = _random_complex(self.rng, 4, 6), _random_complex(self.rng, 4, 6)
        np.testing.assert_allclose(
            hankel_adjoint_avg(2.5 * a - 1j * b, shape),
            2.5 * hankel_adjoint_avg(a, shape) - 1j * hankel_adjoint_avg(b, shape),
            atol=1e-12,
        )

    def test_sum_operator_is_frobenius_adjoint(self):
        """
        Given: Random x and Y
        When: Comparing <Hx, Y>_F with <x, H_sum(Y)>
        Then: They agree, and the averaging adjoint is H_sum divided by the counts
        """
        for n1, n2 in ((3, 5), (16, 16), (1, 9), (12, 2)):
            shape = HankelShape(n1, n2)
            x = _random_complex(self.rng, shape.length)
            Y = _random_complex(self.rng, n1, n2)
            lhs = np.vdot(hankel(x, shape), Y)
            rhs = np.vdot(x, hankel_adjoint_sum(Y, shape))
            self.assertLess(abs(lhs - rhs), 1e-12 * max(1.0, abs(lhs)))
            np.testing.assert_allclose(
                anti_diagonal_counts(shape) * hankel_adjoint_avg(Y, shape), hankel_adjoint_sum(Y, shape), atol=1e-12
            )

    def test_counts(self):
        np.testing.assert_array_equal(anti_diagonal_counts(HankelShape(2, 3)), [1, 2, 2, 1])
        np.testing.assert_array_equal(anti_diagonal_counts(HankelShape(3, 3)), [1, 2, 3, 2, 1])


class FlipConjTestCase(SimpleTestCase):
    """Flip about the centre with conjugation."""

    def test_definition(self):
        np.testing.assert_array_equal(flip_conj(np.array([1 + 1j, 2, 3 - 1j])), [3 + 1j, 2, 1 - 1j])

    def test_involution(self):
        x = _random_complex(np.random.default_rng(0), 11)
        np.testing.assert_array_equal(flip_conj(flip_conj(x)), x)

    def test_real_symmetric_fixed_point(self):
        x = np.array([1.0, 4.0, 2.0, 4.0, 1.0])
        np.testing.assert_array_equal(flip_conj(x), x)


class VirtualCoilTestCase(SimpleTestCase):
    """Hankel transform with virtual coils."""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_single_coil_example(self):
        block = CoilBlock(data=np.array([[1.0], [2.0], [3.0]]), shape=HankelShape(2, 2))
        np.testing.assert_array_equal(hankel_vc(block), [[1, 2, 3, 2], [2, 3, 2, 1]])

    def test_column_count(self):
        shape = HankelShape(4, 5)
        block = CoilBlock(data=_random_complex(self.rng, 8, 3), shape=shape)
        self.assertEqual(hankel_vc(block).shape, (4, 2 * 5 * 3))

    def test_conjugate_symmetric_halves_match(self):
        shape = HankelShape(5, 5)
        x = _conjugate_symmetric_exponential(0.13, shape.length)
        np.testing.assert_allclose(flip_conj(x), x, atol=1e-12)
        matrix = hankel_vc(CoilBlock(data=x, shape=shape))
        np.testing.assert_allclose(matrix[:, :5], matrix[:, 5:], atol=1e-12)

    def test_round_trip(self):
        """
        Given: Random coil blocks up to 127 x 8
        When: Applying H_VC then its averaging adjoint
        Then: The block is recovered to 1e-12
        """
        for rows, coils in ((5, 3), (31, 2), (127, 8), (64, 1)):
            shape = HankelShape.for_length(rows)
            data = _random_complex(self.rng, rows, coils)
            restored = hankel_vc_adjoint(hankel_vc(CoilBlock(data=data, shape=shape)), shape, coils)
            np.testing.assert_allclose(restored.data, data, rtol=1e-12, atol=1e-12)

    def test_symmetric_virtual_half_gives_plain_adjoint(self):
        shape = HankelShape(3, 4)
        first = [_random_complex(self.rng, 3, 4) for _ in range(2)]
        virtual = [hankel(flip_conj(hankel_adjoint_avg(Y, shape)), shape) for Y in first]
        restored = hankel_vc_adjoint(np.hstack(first + virtual), shape, 2)
        for j, Y in enumerate(first):
            np.testing.assert_allclose(restored.data[:, j], hankel_adjoint_avg(Y, shape), atol=1e-12)

    def test_zero_matrix(self):
        shape = HankelShape(3, 3)
        restored = hankel_vc_adjoint(np.zeros((3, 12)), shape, 2)
        np.testing.assert_array_equal(restored.data, np.zeros((5, 2)))

    def test_width_mismatch_rejected(self):
        with self.assertRaises(HankelShapeError):
            hankel_vc_adjoint(np.zeros((3, 10)), HankelShape(3, 3), 2)

    def test_virtual_coils_add_no_rank_for_symmetric_rows(self):
        """
        Given: A rank-2 conjugate-symmetric signal
        When: Comparing the rank with and without virtual coils
        Then: Both are 2
        """
        shape = HankelShape(16, 16)
        x = (_conjugate_symmetric_exponential(0.11, shape.length)
             + 0.5 * _conjugate_symmetric_exponential(0.37, shape.length))
        plain = svdvals(hankel(x, shape))
        augmented = svdvals(hankel_vc(CoilBlock(data=x, shape=shape)))
        self.assertEqual(int(np.sum(plain > 1e-9 * plain[0])), 2)
        self.assertEqual(int(np.sum(augmented > 1e-9 * augmented[0])), 2)


class OperatorPairTestCase(SimpleTestCase):
    """Operator objects used by the solvers."""

    def test_vector_operator(self):
        x = np.arange(9, dtype=complex)
        operator = HankelOperator.for_signal(x)
        self.assertEqual(operator.shape, HankelShape(5, 5))
        np.testing.assert_allclose(operator.adjoint(operator.forward(x)), x)

    def test_virtual_coil_operator(self):
        data = _random_complex(np.random.default_rng(1), 9, 2)
        operator = VirtualCoilOperator.for_signal(data)
        self.assertEqual(operator.forward(data).shape, (5, 20))
        self.assertEqual(operator.max_rank, 5)
        np.testing.assert_allclose(operator.adjoint(operator.forward(data)), data, atol=1e-12)

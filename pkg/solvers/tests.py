"""
Tests for the low-rank solvers.

Test Cases:
1. Balanced SVD initialization and the factorization bound on the nuclear norm
2. Exact P / Q sub-problem updates
3. Exact x update against the dense normal equations, its limits, virtual coils
4. Penalty-weight continuation schedule
5. Penalty solver: monotone objective, exact recovery, noisy recovery
6. ADMM: reduction to the penalty solver, primal residual
7. Cross-solver agreement with the nuclear-norm oracle
8. Compressed sensing baseline
9. Regularization tables, dispatcher and trace export
"""
import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import svdvals

from core.exceptions import ConfigurationError, SolverDivergenceError
from exponentials.domain import ExponentialModel, NoiseKind, NoiseSpec, PeakParams
from exponentials.services import add_noise, synthesize, table_signal
from hankel.domain import HankelShape
from hankel.services import VirtualCoilOperator, hankel, hankel_adjoint_avg
from metrics.services import rlne
from sampling.domain import SamplingPattern
from sampling.services import apply_U, apply_U_star, full, poisson_gap, rate_to_count
from .domain import FactorPair, ObjectiveTrace, SolverConfig, TRACE_COLUMNS
from .factorization import balanced_factors, init_factors, penalty_objective, update_P, update_Q, update_x
from .services import (
    SolverName,
    admm_lrhmf_solve,
    cs_lambda,
    cs_solve,
    default_config,
    lrhmf_lambda,
    penalty_solve,
    solve,
    svt_nuclear_solve,
)


def _random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _single_peak_signal():
    """Largest tabulated peak alone: A=1, tau=150."""
    return synthesize(table_signal('S2').with_peaks(table_signal('S2').peaks[4:]))


def _rank_two_instance():
    """Length-31 undamped two-tone signal sampled at 19 positions including both ends."""
    n = np.arange(31)
    truth = np.exp(2j * np.pi * 0.12 * n) + 0.8 * np.exp(2j * np.pi * 0.37 * n + 0.5j)
    omega = (0, 1, 2, 3, 5, 6, 8, 10, 11, 13, 15, 17, 19, 20, 22, 24, 26, 28, 30)
    return truth, SamplingPattern(omega=omega, n_total=31, seed=0, kind='uniform_random')


def _p_subproblem_objective(P, x, Q, beta, shape):
    return 0.5 * np.linalg.norm(P) ** 2 + 0.5 * beta * np.linalg.norm(hankel(x, shape) - P @ Q.conj().T) ** 2


class FactorInitTestCase(SimpleTestCase):
    """Balanced truncated SVD."""

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_rank_one_signal_is_exact(self):
        x = np.exp((-1 / 40 + 2j * np.pi * 0.2) * np.arange(63))
        shape = HankelShape.for_length(63)
        pair = init_factors(x, shape, 1)
        hx = hankel(x, shape)
        self.assertLess(np.linalg.norm(pair.product() - hx) / np.linalg.norm(hx), 1e-10)

    def test_nuclear_proxy_equals_sum_of_kept_singular_values(self):
        x = _random_complex(self.rng, 41)
        shape = HankelShape.for_length(41)
        pair = init_factors(x, shape, 5)
        self.assertAlmostEqual(pair.nuclear_proxy(), float(np.sum(svdvals(hankel(x, shape))[:5])), delta=1e-10)

    def test_full_rank_reproduces_matrix(self):
        x = _random_complex(self.rng, 21)
        shape = HankelShape.for_length(21)
        pair = init_factors(x, shape, shape.max_rank)
        np.testing.assert_allclose(pair.product(), hankel(x, shape), atol=1e-10)

    def test_rank_cap_is_clamped(self):
        x = _random_complex(self.rng, 9)
        with self.assertLogs('solvers.factorization', level='WARNING'):
            pair = init_factors(x, HankelShape(5, 5), 40)
        self.assertEqual(pair.rank, 5)

    def test_balanced_split_attains_nuclear_norm(self):
        """
        Given: 100 random 32x32 matrices
        When: Splitting each by its balanced SVD, then re-factorizing 50 times
        Then: The balanced cost equals the nuclear norm and no re-factorization is cheaper
        """
        for trial in range(100):
            X = _random_complex(self.rng, 32, 32)
            nuclear = float(np.sum(svdvals(X)))
            pair = balanced_factors(X, 32)
            self.assertAlmostEqual(pair.nuclear_proxy(), nuclear, delta=1e-9 * nuclear)
            if trial % 20 == 0:
                for _ in range(50):
                    M = np.eye(32) + 0.3 * _random_complex(self.rng, 32, 32)
                    other = FactorPair(p=pair.p @ M, q=pair.q @ np.linalg.inv(M).conj().T)
                    np.testing.assert_allclose(other.product(), X, atol=1e-8)
                    self.assertGreaterEqual(other.nuclear_proxy(), nuclear - 1e-9 * nuclear)


class FactorUpdateTestCase(SimpleTestCase):
    """Exact P and Q sub-problem updates."""

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.shape = HankelShape(6, 8)
        self.x = _random_complex(self.rng, self.shape.length)

    def test_scalar_cases(self):
        shape = HankelShape(1, 1)
        np.testing.assert_allclose(update_P(np.array([2.0]), np.array([[1.0]]), 1.0, shape), [[1.0]])
        np.testing.assert_allclose(update_Q(np.array([2.0]), np.array([[1.0]]), 1.0, shape), [[1.0]])

    def test_large_beta_approaches_least_squares(self):
        Q = _random_complex(self.rng, 8, 3)
        P = update_P(self.x, Q, 1e8, self.shape)
        least_squares = hankel(self.x, self.shape) @ Q @ np.linalg.inv(Q.conj().T @ Q)
        np.testing.assert_allclose(P, least_squares, atol=1e-6)

    def test_normal_equations_hold(self):
        Q = _random_complex(self.rng, 8, 3)
        beta = 2.5
        P = update_P(self.x, Q, beta, self.shape)
        residual = P @ (np.eye(3) + beta * Q.conj().T @ Q) - beta * hankel(self.x, self.shape) @ Q
        self.assertLess(np.linalg.norm(residual), 1e-10)

        Pfix = _random_complex(self.rng, 6, 3)
        Qnew = update_Q(self.x, Pfix, beta, self.shape)
        residual = Qnew @ (np.eye(3) + beta * Pfix.conj().T @ Pfix) - beta * hankel(self.x, self.shape).conj().T @ Pfix
        self.assertLess(np.linalg.norm(residual), 1e-10)

    def test_update_is_the_minimizer(self):
        """
        Given: The exact P update for fixed x and Q
        When: Perturbing P randomly
        Then: The sub-problem objective never decreases
        """
        Q = _random_complex(self.rng, 8, 3)
        beta = 0.7
        P = update_P(self.x, Q, beta, self.shape)
        best = _p_subproblem_objective(P, self.x, Q, beta, self.shape)
        for _ in range(20):
            perturbed = P + 1e-3 * _random_complex(self.rng, 6, 3)
            self.assertGreater(_p_subproblem_objective(perturbed, self.x, Q, beta, self.shape), best)

    def test_hermitian_scalar_symmetry(self):
        shape = HankelShape(1, 1)
        x = np.array([3.0])
        v = np.array([[0.5]])
        np.testing.assert_allclose(update_Q(x, v, 2.0, shape), update_P(x, v, 2.0, shape).conj())


class UpdateXTestCase(SimpleTestCase):
    """Exact x update."""

    def setUp(self):
        self.rng = np.random.default_rng(5)
        self.shape = HankelShape(8, 8)
        self.pattern = poisson_gap(15, 7, seed=1)
        self.y = _random_complex(self.rng, 7)
        self.pair = FactorPair(p=_random_complex(self.rng, 8, 2), q=_random_complex(self.rng, 8, 2))

    def test_huge_gamma_keeps_measurements(self):
        x = update_x(self.y, self.pattern, self.pair, 1e12, 1.0, self.shape)
        self.assertLess(np.max(np.abs(apply_U(x, self.pattern) - self.y)), 1e-6)

    def test_tiny_gamma_keeps_low_rank_estimate(self):
        x = update_x(self.y, self.pattern, self.pair, 1e-14, 1.0, self.shape)
        np.testing.assert_allclose(x, hankel_adjoint_avg(self.pair.product(), self.shape), atol=1e-10)

    def test_matches_normal_equations(self):
        """
        Given: Random factors, measurements and weights on a 15-sample grid
        When: Solving (lam U*U + beta H*H) x = lam U*y + beta H*(P Q^H) with dense matrices
        Then: update_x agrees with the dense solve to 1e-12
        """
        length = self.shape.length
        lifting = np.stack([hankel(np.eye(length)[k], self.shape).ravel() for k in range(length)], axis=1)
        selection = np.eye(length)[list(self.pattern.omega)]
        zero_filled = apply_U_star(self.y, self.pattern)
        for lam, beta in ((10 ** 2.5, 1.0), (3.0, 1.5), (0.2, 40.0)):
            system = lam * selection.T @ selection + beta * lifting.conj().T @ lifting
            rhs = lam * zero_filled + beta * lifting.conj().T @ self.pair.product().ravel()
            np.testing.assert_allclose(
                update_x(self.y, self.pattern, self.pair, lam, beta, self.shape),
                np.linalg.solve(system, rhs), atol=1e-12,
            )

    def test_minimizes_virtual_coil_subproblem(self):
        """
        Given: A two-coil block, virtual-coil factors and a multiplier
        When: Updating x and perturbing the result at random
        Then: Every perturbation raises lam/2 ||y - U x||^2 + beta/2 ||H_vc x - (P Q^H - D / beta)||^2
        """
        shape = HankelShape(8, 8)
        operator = VirtualCoilOperator(shape, 2)
        zero_filled = apply_U_star(_random_complex(self.rng, 7, 2), self.pattern)
        pair = FactorPair(p=_random_complex(self.rng, 8, 3), q=_random_complex(self.rng, 32, 3))
        multiplier = _random_complex(self.rng, 8, 32)
        lam, beta = 5.0, 2.0
        target = pair.product() - multiplier / beta

        def subproblem(x):
            fidelity = np.linalg.norm(apply_U(zero_filled - x, self.pattern)) ** 2
            return 0.5 * lam * fidelity + 0.5 * beta * np.linalg.norm(operator.forward(x) - target) ** 2

        x = update_x(zero_filled, self.pattern, pair, lam, beta, operator, multiplier)
        best = subproblem(x)
        for _ in range(20):
            self.assertGreater(subproblem(x + 1e-4 * _random_complex(self.rng, 15, 2)), best)

    def test_accepts_zero_filled_input(self):
        zero_filled = apply_U_star(self.y, self.pattern)
        np.testing.assert_array_equal(
            update_x(zero_filled, self.pattern, self.pair, 3.0, 1.5, self.shape),
            update_x(self.y, self.pattern, self.pair, 3.0, 1.5, self.shape),
        )

    def test_rejects_non_positive_weights(self):
        with self.assertRaises(ConfigurationError):
            update_x(self.y, self.pattern, self.pair, 0.0, 1.0, self.shape)
        with self.assertRaises(ConfigurationError):
            update_x(self.y, self.pattern, self.pair, 1.0, -1.0, self.shape)


class BetaScheduleTestCase(SimpleTestCase):
    """Penalty-weight continuation."""

    def test_geometric_growth_up_to_cap(self):
        config = SolverConfig(lam=100.0, beta=2.0, beta_growth=2.0, beta_cap=8.0)
        self.assertEqual([config.beta_at(k) for k in (1, 2, 3)], [2.0, 4.0, 8.0])
        self.assertAlmostEqual(config.beta_at(4), 16.0)
        self.assertEqual(config.beta_at(50), 16.0)
        self.assertAlmostEqual(config.lam_at(50), 800.0)
        self.assertFalse(config.ramp_done(2))
        self.assertTrue(config.ramp_done(5))

    def test_unit_growth_keeps_weights(self):
        config = SolverConfig(lam=30.0, beta=3.0, beta_growth=1.0)
        self.assertEqual({config.beta_at(k) for k in range(1, 100)}, {3.0})
        self.assertEqual(config.lam_at(99), 30.0)
        self.assertTrue(config.ramp_done(1))

    def test_rejects_shrinking_schedule(self):
        with self.assertRaises(ConfigurationError):
            SolverConfig(lam=1.0, beta_growth=0.9)
        with self.assertRaises(ConfigurationError):
            SolverConfig(lam=1.0, beta_cap=0.5)


def _random_two_peak_problems(count=20, seed=21):
    rng = np.random.default_rng(seed)
    n = np.arange(31)
    for trial in range(count):
        signal = sum(rng.uniform(0.2, 1.0) * np.exp((-1 / rng.uniform(10, 60) + 2j * np.pi * rng.uniform()) * n)
                     for _ in range(2))
        signal = signal + 0.01 * _random_complex(rng, 31)
        pattern = poisson_gap(31, 16, seed=trial)
        yield apply_U(signal, pattern), pattern


def _non_increasing(values, slack=1e-9) -> bool:
    return bool(np.all(np.diff(values) <= slack * np.abs(values[:-1])))


class PenaltySolverTestCase(SimpleTestCase):
    """Penalty factorization solver."""

    def test_objective_is_monotone(self):
        """
        Given: 20 random two-peak problems of length 31 at about 50% sampling
        When: Running 60 iterations with lambda / beta = 10^2.5, beta = 1 held fixed and R = 3
        Then: The recorded objective never increases beyond 1e-9 relative slack
        """
        config = SolverConfig(lam=10 ** 2.5, beta=1.0, rank_cap=3, max_iters=60, tol=0.0, beta_growth=1.0)
        for y, pattern in _random_two_peak_problems():
            _, trace = penalty_solve(y, pattern, config)
            self.assertEqual(len(trace), 60)
            self.assertTrue(_non_increasing(trace.objectives), np.diff(trace.objectives).max())

    def test_scaled_objective_is_monotone_under_continuation(self):
        """
        Given: The same random problems with beta growing from 1 by 10% per iteration
        When: Running the penalty solver past the end of the ramp
        Then: Objective / beta never increases and beta ends at its cap
        """
        config = SolverConfig(lam=10 ** 2.5, beta=1.0, rank_cap=3, max_iters=60, tol=0.0)
        for y, pattern in _random_two_peak_problems(count=5):
            _, trace = penalty_solve(y, pattern, config)
            self.assertTrue(_non_increasing(trace.scaled_objectives), np.diff(trace.scaled_objectives).max())
            self.assertEqual(trace.records[-1].beta, config.beta * config.beta_cap)

    def test_exact_recovery_single_peak(self):
        """
        Given: The noise-free single peak (A=1, tau=150) at 50% Poisson-gap sampling
        When: Running the penalty solver from beta = 1 with the tabulated lambda / beta and R = 20
        Then: RLNE is below 1e-3 within 500 iterations
        """
        truth = _single_peak_signal()
        pattern = poisson_gap(255, rate_to_count(255, 0.5), seed=4)
        config = SolverConfig(lam=lrhmf_lambda(0.5), beta=1.0, max_iters=500, tol=1e-10)
        x, trace = penalty_solve(apply_U(truth, pattern), pattern, config)
        self.assertLessEqual(len(trace), 500)
        self.assertLess(rlne(truth, x), 1e-3)

    def test_noisy_recovery_improves_with_rate(self):
        """
        Given: The S2 signal with sigma=0.03 over 10 seeds
        When: Reconstructing at 25% and 50% Poisson-gap sampling with the default solver settings
        Then: Mean RLNE at 25% is at most 0.10 and lower at 50%
        """
        truth = synthesize(table_signal('S2'))
        means = {}
        for rate in (0.25, 0.50):
            config = default_config(SolverName.PENALTY, rate)
            errors = []
            for seed in range(10):
                pattern = poisson_gap(255, rate_to_count(255, rate), seed=seed)
                noisy = add_noise(truth, NoiseSpec(kind=NoiseKind.GAUSSIAN, scale=0.03, seed=1000 + seed))
                x, _ = penalty_solve(apply_U(noisy, pattern), pattern, config)
                errors.append(rlne(truth, x))
            means[rate] = float(np.mean(errors))
        self.assertLessEqual(means[0.25], 0.10)
        self.assertLess(means[0.50], means[0.25])

    def test_full_sampling_returns_data(self):
        truth = _single_peak_signal()
        config = SolverConfig(lam=1e12, beta=1.0, rank_cap=2, max_iters=5)
        x, _ = penalty_solve(truth, full(255), config)
        self.assertLess(rlne(truth, x), 1e-8)

    def test_divergence_is_reported(self):
        pattern = full(9)
        y = np.full(9, np.nan + 0j)
        with self.assertRaises(SolverDivergenceError):
            penalty_solve(y, pattern, SolverConfig(lam=1.0, beta=1.0, rank_cap=2, max_iters=3))


class AdmmSolverTestCase(SimpleTestCase):
    """ADMM factorization solver."""

    def test_frozen_multiplier_reproduces_penalty_solver(self):
        truth, pattern = _rank_two_instance()
        config = SolverConfig(lam=10.0, beta=1.0, rank_cap=2, max_iters=40, tol=0.0)
        x_penalty, _ = penalty_solve(apply_U(truth, pattern), pattern, config)
        x_admm, _ = admm_lrhmf_solve(apply_U(truth, pattern), pattern, config, update_multiplier=False)
        np.testing.assert_array_equal(x_admm, x_penalty)

    def test_primal_residual_vanishes(self):
        truth, pattern = _rank_two_instance()
        config = SolverConfig(lam=1e9, beta=1000.0, rank_cap=2, max_iters=5000, tol=1e-13, beta_growth=1.0)
        _, trace = admm_lrhmf_solve(apply_U(truth, pattern), pattern, config)
        self.assertLess(trace.residuals[-1], 1e-6)

    def test_primal_residual_vanishes_with_tabulated_weights(self):
        """
        Given: The length-31 rank-2 instance at 60% sampling
        When: Running ADMM from beta = 1 with the tabulated lambda / beta
        Then: It converges with ||Hx - P Q^H|| below 1e-6 ||Hx||
        """
        truth, pattern = _rank_two_instance()
        config = SolverConfig(lam=lrhmf_lambda(0.6), beta=1.0, rank_cap=2, max_iters=3000, tol=1e-10)
        _, trace = admm_lrhmf_solve(apply_U(truth, pattern), pattern, config)
        self.assertTrue(trace.converged)
        self.assertLess(trace.residuals[-1], 1e-6)


class CrossSolverTestCase(SimpleTestCase):
    """Penalty, ADMM and the nuclear-norm oracle on a small exact instance."""

    def test_solvers_agree_on_rank_two_instance(self):
        """
        Given: A length-31 rank-2 noise-free signal at 60% sampling
        When: Solving with the penalty solver, ADMM and the SVT oracle at large fixed weights
        Then: Each recovers the signal and their RLNEs agree to 1e-3
        """
        truth, pattern = _rank_two_instance()
        y = apply_U(truth, pattern)
        config = SolverConfig(lam=1e9, beta=1000.0, rank_cap=2, max_iters=5000, tol=1e-13, beta_growth=1.0)

        x_penalty, _ = penalty_solve(y, pattern, config)
        x_admm, _ = admm_lrhmf_solve(y, pattern, config)
        x_svt = svt_nuclear_solve(y, pattern, lam=1e6, iters=3000)

        errors = [rlne(truth, x) for x in (x_penalty, x_admm, x_svt)]
        self.assertLess(errors[2], 1e-3)
        self.assertLess(max(errors) - min(errors), 1e-3)

    def test_solvers_agree_with_tabulated_weights(self):
        """
        Given: The same instance and the tabulated lambda / beta with beta starting at 1
        When: Ramping beta to 1000 in the factorization solvers and running the SVT oracle
              at the final lambda
        Then: All three RLNEs are below 1e-3 and agree to 1e-3
        """
        truth, pattern = _rank_two_instance()
        y = apply_U(truth, pattern)
        config = SolverConfig(lam=lrhmf_lambda(0.6), beta=1.0, rank_cap=2, max_iters=2000, tol=1e-10,
                              beta_cap=1e3)

        x_penalty, _ = penalty_solve(y, pattern, config)
        x_admm, _ = admm_lrhmf_solve(y, pattern, config)
        x_svt = svt_nuclear_solve(y, pattern, lam=config.lam_at(config.max_iters), iters=3000)

        errors = [rlne(truth, x) for x in (x_penalty, x_admm, x_svt)]
        self.assertLess(max(errors), 1e-3, errors)
        self.assertLess(max(errors) - min(errors), 1e-3)

    def test_svt_without_threshold_keeps_data(self):
        truth, pattern = _rank_two_instance()
        y = apply_U(truth, pattern)
        x = svt_nuclear_solve(y, pattern, lam=1.0, iters=20, nuclear_weight=0.0)
        np.testing.assert_allclose(x, apply_U_star(y, pattern), atol=1e-12)

    def test_svt_full_sampling_returns_data(self):
        truth, _ = _rank_two_instance()
        x = svt_nuclear_solve(truth, full(31), lam=1e12, iters=5)
        self.assertLess(rlne(truth, x), 1e-8)


class CompressedSensingTestCase(SimpleTestCase):
    """FISTA baseline."""

    def test_sparse_tones_recovered(self):
        """
        Given: Three undamped on-grid tones at 50% sampling
        When: Running FISTA with the tabulated lambda
        Then: RLNE is below 0.05
        """
        model = ExponentialModel(peaks=tuple(
            PeakParams(amplitude=a, damping=1e12, frequency=k / 255)
            for a, k in ((1.0, 40), (0.7, 101), (0.5, 190))
        ))
        truth = synthesize(model)
        pattern = poisson_gap(255, rate_to_count(255, 0.5), seed=8)
        x = cs_solve(apply_U(truth, pattern), pattern, lam=cs_lambda(0.5), iters=1000)
        self.assertLess(rlne(truth, x), 0.05)

    def test_tiny_lambda_full_sampling_returns_data(self):
        truth = synthesize(table_signal('S1'))
        x = cs_solve(truth, full(255), lam=1e-10, iters=3)
        self.assertLess(rlne(truth, x), 1e-8)

    def test_objective_is_monotone(self):
        truth = synthesize(table_signal('S2'))
        pattern = poisson_gap(255, 64, seed=2)
        trace = ObjectiveTrace(solver='cs')
        cs_solve(apply_U(truth, pattern), pattern, lam=0.05, iters=200, trace=trace)
        self.assertTrue(np.all(np.diff(trace.objectives) <= 1e-12 * np.abs(trace.objectives[:-1])))

    def test_heavily_damped_signal_favours_factorization(self):
        """
        Given: Two heavily damped peaks (tau=10) at 50% sampling
        When: Comparing compressed sensing with the penalty solver
        Then: The penalty solver has the lower RLNE
        """
        model = ExponentialModel(peaks=(PeakParams(1.0, 10.0, 0.2), PeakParams(0.8, 10.0, 0.6, 1.0)))
        truth = synthesize(model)
        pattern = poisson_gap(255, rate_to_count(255, 0.5), seed=6)
        y = apply_U(truth, pattern)
        x_cs = cs_solve(y, pattern, lam=cs_lambda(0.5), iters=500)
        x_lr, _ = penalty_solve(y, pattern, SolverConfig(lam=100.0 * 1e2, beta=100.0, rank_cap=2,
                                                         max_iters=500, tol=1e-10))
        self.assertLess(rlne(truth, x_lr), rlne(truth, x_cs))


class SolverPlumbingTestCase(SimpleTestCase):
    """Tables, dispatcher, configuration and trace export."""

    def test_regularization_tables(self):
        self.assertEqual(lrhmf_lambda(0.10), 1e6)
        self.assertEqual(lrhmf_lambda(0.15), 1e3)
        self.assertAlmostEqual(lrhmf_lambda(0.25), 10 ** 2.5)
        self.assertEqual(lrhmf_lambda(0.50), 1e2)
        self.assertEqual(cs_lambda(0.10), 0.17)
        self.assertEqual(cs_lambda(0.50), 0.03)
        self.assertEqual(cs_lambda(0.27), cs_lambda(0.25))
        with self.assertRaises(ConfigurationError):
            lrhmf_lambda(0.0)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            SolverConfig(lam=0.0)
        with self.assertRaises(ConfigurationError):
            SolverConfig(lam=1.0, beta=-1.0)
        self.assertEqual(SolverConfig(lam=10.0, beta=4.0).gamma, 2.5)

    def test_dispatcher(self):
        truth, pattern = _rank_two_instance()
        y = apply_U(truth, pattern)
        config = SolverConfig(lam=10.0, beta=1.0, rank_cap=2, max_iters=5)
        for name in (SolverName.PENALTY, SolverName.ADMM, SolverName.SVT, SolverName.CS):
            x, trace = solve(name, y, pattern, config)
            self.assertEqual(x.shape, (31,))
            self.assertEqual(len(trace), 5)
        with self.assertRaises(ConfigurationError):
            solve('magic', y, pattern, config)
        with self.assertRaises(ConfigurationError):
            solve(SolverName.ADLR, y, pattern, config)

    def test_trace_csv(self):
        truth, pattern = _rank_two_instance()
        _, trace = penalty_solve(apply_U(truth, pattern), pattern,
                                 SolverConfig(lam=10.0, beta=1.0, rank_cap=2, max_iters=4, tol=0.0))
        lines = trace.to_csv().splitlines()
        self.assertEqual(lines[0], ','.join(TRACE_COLUMNS))
        self.assertEqual(len(lines), 5)
        self.assertEqual(lines[1].split(',')[0], '1')

    def test_objective_terms(self):
        truth, pattern = _rank_two_instance()
        shape = HankelShape.for_length(31)
        pair = init_factors(truth, shape, 2)
        terms = penalty_objective(apply_U(truth, pattern), pattern, truth, pair, 3.0, 2.0, shape)
        self.assertAlmostEqual(terms.fidelity, 0.0)
        self.assertAlmostEqual(terms.objective, terms.nucproxy + terms.penalty)
        self.assertLess(terms.residual, 1e-10)

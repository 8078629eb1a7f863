"""
Tests for the experiment harness.

Test Cases:
1. Config validation: example fixtures, malformed files, invalid values
2. Trial payloads and seed derivation
3. Benchmark reports: provenance, determinism across thread counts, rate trend
4. Run records in the database, including failed runs
5. Dataset mismatch: matched sampling rate is closest to the reference
6. Management commands end to end, exit codes
7. Celery trial task and executor
8. SVG plots and PGM export
"""
import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from PIL import Image

from config.celery import app as celery_app
from core.exceptions import ConfigurationError, DataIOError, SolverDivergenceError
from core.formats import read_cplx
from pipeline.domain import Normalization
from .domain import ReconReport
from .factories import ExperimentConfigFactory, ExperimentRunFactory, TrialOutcomeFactory, TrialResultFactory
from .images import PGM_MAX, write_pgm
from .management.commands._base import ReconCommand
from .models import ExperimentRun, TrialResult
from .plots import render
from .services import (
    execute_trials,
    load_config,
    load_mismatch_config,
    run_benchmark,
    run_mismatch,
    run_trial,
    solver_setup,
    trial_payloads,
)
from .tasks import run_trial_task

FIXTURES = Path(__file__).resolve().parent / 'fixtures'


def _write_json(directory, data, name='config.json'):
    path = Path(directory) / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding='utf-8')
    return path


def _without_timing(outcome: dict) -> dict:
    return {key: value for key, value in outcome.items() if key != 'seconds'}


class ConfigTestCase(SimpleTestCase):
    """Experiment configuration files."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _base(self):
        return json.loads((FIXTURES / 'benchmark_example.json').read_text())

    def test_example_fixture_is_valid(self):
        config = load_config(FIXTURES / 'benchmark_example.json')
        self.assertEqual(len(config.rates), 9)
        self.assertEqual(config.trials, 100)
        self.assertEqual(config.noise_scales, [0.0])
        self.assertIsNone(config.solver['lam'])
        self.assertNotIn('_notes', config.resolved())
        self.assertNotIn('output', config.resolved())

    def test_mismatch_fixture_is_valid(self):
        config = load_mismatch_config(FIXTURES / 'mismatch_example.json')
        self.assertEqual(config['dataset'], 'exponential')
        self.assertIn(config['reference'], config['targets'])

    def test_defaults_fill_optional_sections(self):
        data = {'signal': {'source': 'table', 'name': 'S1'}, 'pattern': {'rates': [0.3]},
                'solver': {'name': 'cs'}}
        config = load_config(_write_json(self.tmp.name, data))
        self.assertEqual(config.noise, {'kind': 'gaussian', 'scales': [0.0]})
        self.assertEqual(config.pattern['kind'], 'poisson_gap')
        self.assertEqual(config.trials, 1)

    def test_invalid_values(self):
        cases = (
            ('pattern', {'rates': [0.0, 0.5]}),
            ('pattern', {'rates': [1.2]}),
            ('pattern', {'rates': []}),
            ('solver', {'name': 'magic'}),
            ('solver', {'name': 'penalty', 'beta': 0.0}),
            ('signal', {'source': 'table'}),
            ('signal', {'source': 'file'}),
            ('trials', 0),
        )
        for key, value in cases:
            data = self._base()
            data[key] = value
            with self.assertRaises(ConfigurationError, msg=f"{key}={value}") as caught:
                load_config(_write_json(self.tmp.name, data))
            self.assertEqual(caught.exception.exit_code, 2)

    def test_malformed_json(self):
        with self.assertRaises(ConfigurationError):
            load_config(_write_json(self.tmp.name, '{"signal": '))
        with self.assertRaises(ConfigurationError):
            load_config(_write_json(self.tmp.name, '[1, 2]'))

    def test_missing_file(self):
        with self.assertRaises(DataIOError) as caught:
            load_config(Path(self.tmp.name) / 'absent.json')
        self.assertEqual(caught.exception.exit_code, 3)


class TrialTestCase(SimpleTestCase):
    """Trial payloads and single-trial execution."""

    def test_payload_grid_and_seeds(self):
        config = ExperimentConfigFactory(noise={'kind': 'gaussian', 'scales': [0.0, 0.02]}, trials=3)
        payloads = trial_payloads(config)
        self.assertEqual(len(payloads), 2 * 2 * 3)
        self.assertEqual([(p['rate'], p['noise_scale'], p['trial']) for p in payloads[:4]],
                         [(0.25, 0.0, 0), (0.25, 0.0, 1), (0.25, 0.0, 2), (0.25, 0.02, 0)])
        seeds = {(p['pattern_seed'], p['noise_seed']) for p in payloads}
        self.assertEqual(len(seeds), len(payloads))
        self.assertEqual(trial_payloads(config), payloads)

    def test_trial_is_deterministic(self):
        payload = trial_payloads(ExperimentConfigFactory())[0]
        first, second = run_trial(payload), run_trial(payload)
        self.assertEqual(_without_timing(first), _without_timing(second))
        self.assertLessEqual(first['iterations'], 60)
        self.assertEqual(len(first['peak_rlnes']), 5)
        self.assertLess(first['rlne'], 1.0)

    def test_solver_setup_defaults(self):
        config, pipeline = solver_setup(ExperimentConfigFactory().solver, 0.25)
        self.assertIsNone(pipeline)
        self.assertAlmostEqual(config.lam, 10 ** 2.5)
        self.assertEqual(config.rank_cap, 8)
        self.assertEqual((config.beta_growth, config.beta_cap), (1.1, 64.0))
        fixed, _ = solver_setup(dict(ExperimentConfigFactory().solver, beta_growth=1.0), 0.25)
        self.assertFalse(fixed.continued)

        adlr = dict(ExperimentConfigFactory().solver, name='adlr', rank_cap=None)
        config, pipeline = solver_setup(adlr, 0.25)
        self.assertEqual(pipeline.block_count, 10)
        self.assertEqual(pipeline.rank_cap, 20)
        self.assertEqual(pipeline.normalization, Normalization.NUCLEAR)


@override_settings(RECON_PERSIST_RUNS=False)
class BenchmarkReportTestCase(SimpleTestCase):
    """CSV reports written by a benchmark."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_reports_and_provenance(self):
        report, paths = run_benchmark(ExperimentConfigFactory(), out_dir=self.tmp.name, threads=1,
                                      executor='threads')
        self.assertEqual(len(report.outcomes), 4)
        self.assertEqual([s.trials for s in report.summaries()], [2, 2])

        lines = paths['report'].read_text().splitlines()
        self.assertEqual(lines[0], f'# hankelrecon {settings.RECON_VERSION}')
        self.assertTrue(lines[1].startswith('# config {'))
        self.assertEqual(lines[2].split(',')[:3], ['rate', 'noise_scale', 'trials'])
        self.assertEqual(len(lines), 5)
        embedded = json.loads(lines[1][len('# config '):])
        self.assertEqual(embedded['seed'], 11)
        self.assertEqual(embedded['pattern']['rates'], [0.25, 0.5])

        self.assertEqual(len(paths['trials'].read_text().splitlines()), 3 + 4)
        self.assertIn('seconds', paths['timings'].read_text())
        self.assertNotIn('seconds', paths['trials'].read_text())

    def test_byte_identical_across_thread_counts(self):
        """
        Given: One benchmark config with fixed seeds
        When: Running it with 1 and with 8 worker threads
        Then: report.csv and trials.csv are byte-identical
        """
        config = ExperimentConfigFactory()
        _, single = run_benchmark(config, out_dir=Path(self.tmp.name) / 'one', threads=1, executor='threads')
        _, multi = run_benchmark(config, out_dir=Path(self.tmp.name) / 'eight', threads=8, executor='threads')
        for name in ('report', 'trials'):
            self.assertEqual(single[name].read_bytes(), multi[name].read_bytes())

    def test_mean_rlne_decreases_with_rate(self):
        """
        Given: The noise-free S2 signal at 10%, 25% and 50% Poisson-gap sampling
        When: Benchmarking the penalty solver over three trials per rate
        Then: Mean RLNE strictly decreases as the rate grows
        """
        config = ExperimentConfigFactory(
            pattern={'kind': 'poisson_gap', 'rates': [0.10, 0.25, 0.50], 'center_fraction': 0.04},
            solver=dict(ExperimentConfigFactory().solver, beta=2.0, rank_cap=10, max_iters=300),
            trials=3,
        )
        report, _ = run_benchmark(config, out_dir=self.tmp.name, threads=3, executor='threads')
        means = [summary.rlne_mean for summary in report.summaries()]
        self.assertEqual(len(means), 3)
        self.assertGreater(means[0], means[1])
        self.assertGreater(means[1], means[2])

    def test_summary_statistics(self):
        outcomes = [TrialOutcomeFactory(rlne=value, r2=None if value > 0.3 else 0.9) for value in (0.1, 0.2, 0.6)]
        summary = ReconReport(config=ExperimentConfigFactory(), tool_version='x', outcomes=outcomes).summaries()[0]
        self.assertAlmostEqual(summary.rlne_mean, 0.3)
        self.assertAlmostEqual(summary.rlne_std, np.std([0.1, 0.2, 0.6]))
        self.assertAlmostEqual(summary.r2_mean, 0.9)


class RunRecordTestCase(TestCase):
    """ExperimentRun and TrialResult persistence."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_completed_run_with_trials(self):
        run_benchmark(ExperimentConfigFactory(), out_dir=self.tmp.name, threads=1, executor='threads', persist=True)
        run = ExperimentRun.objects.get()
        self.assertTrue(run.is_completed)
        self.assertEqual(run.command, 'benchmark')
        self.assertEqual(run.tool_version, settings.RECON_VERSION)
        self.assertEqual(run.trial_count, 4)
        self.assertEqual(set(run.trials.values_list('rate', flat=True)), {0.25, 0.5})
        self.assertEqual(len(run.trials.first().peak_rlnes), 5)

    def test_failed_run_records_reason(self):
        """
        Given: A config whose signal file does not exist
        When: Running the benchmark
        Then: The I/O error propagates and the run is stored as FAILED with the reason
        """
        config = ExperimentConfigFactory(signal={'source': 'file', 'path': str(Path(self.tmp.name) / 'nope.cplx'),
                                                 'length': 255, 'peak_count': [1, 10]})
        with self.assertRaises(DataIOError):
            run_benchmark(config, out_dir=self.tmp.name, threads=1, executor='threads', persist=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.FAILED)
        self.assertIn('nope.cplx', run.failure_reason)
        self.assertEqual(run.trial_count, 0)

    def test_persistence_disabled(self):
        run_benchmark(ExperimentConfigFactory(), out_dir=self.tmp.name, threads=1, executor='threads', persist=False)
        self.assertFalse(ExperimentRun.objects.exists())

    def test_factories(self):
        result = TrialResultFactory(rlne=0.125)
        self.assertIn('RLNE 0.1250', str(result))
        self.assertIn('benchmark', str(ExperimentRunFactory()))
        self.assertEqual(TrialResult.objects.count(), 1)


class MismatchTestCase(SimpleTestCase):
    """Histogram distances between datasets."""

    def test_matched_rate_is_closest(self):
        """
        Given: A reference training set at 25% and target sets at 10%..50%
        When: Computing the 0/1-cost Wasserstein distance to each target
        Then: The 25% target has the smallest distance
        """
        config = {
            'dataset': 'exponential', 'reference': 0.25,
            'targets': [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50],
            'count': 200, 'seed': 7, 'log_scaled': False,
        }
        report = run_mismatch(config)
        self.assertEqual([row.target for row in report.rows], config['targets'])
        self.assertEqual(report.best_target, 0.25)
        distances = [row.distance for row in report.rows]
        self.assertTrue(all(0.0 <= d <= 1.0 for d in distances))

    def test_kspace_datasets(self):
        """
        Given: A k-space reference at contrast 1.0 and three target contrasts
        When: Writing the mismatch report
        Then: The reference sits in a provenance line and each target row carries
              dataset, rate_or_contrast and distance
        """
        config = {
            'dataset': 'kspace', 'reference': 1.0, 'targets': [0.5, 1.0, 2.0], 'count': 2, 'seed': 0,
            'log_scaled': False, 'kspace': {'size': 16, 'coils': 1, 'rate': 0.5, 'center_fraction': 0.125},
        }
        with tempfile.TemporaryDirectory() as tmp:
            report = run_mismatch(config, out_dir=tmp)
            text = (Path(tmp) / 'mismatch.csv').read_text()
        self.assertEqual(len(report.rows), 3)
        self.assertTrue(all(row.distance >= 0 for row in report.rows))
        self.assertTrue(text.startswith('# hankelrecon'))
        self.assertIn('# reference 1.0\n', text)
        rows = [line for line in text.splitlines() if not line.startswith('#')]
        self.assertEqual(rows[0], 'dataset,rate_or_contrast,distance')
        self.assertEqual([row.split(',')[:2] for row in rows[1:]],
                         [['kspace', '0.5'], ['kspace', '1.0'], ['kspace', '2.0']])


@override_settings(RECON_PERSIST_RUNS=False)
class CommandTestCase(SimpleTestCase):
    """End-to-end management commands."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def _call(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, **options)
        return out.getvalue()

    def test_full_rate_reconstruction_is_exact(self):
        self._call('synth', signal='S2', noise_scale=0.0, out=str(self.root / 'data'))
        self._call('mask', kind='full', n=255, out=str(self.root / 'full.mask'))
        output = self._call('reconstruct', input=str(self.root / 'data' / 'truth.cplx'),
                            mask=str(self.root / 'full.mask'), out=str(self.root / 'recon'))
        recon = read_cplx(self.root / 'recon' / 'recon.cplx')
        truth = read_cplx(self.root / 'data' / 'truth.cplx')
        self.assertLess(np.linalg.norm(recon - truth) / np.linalg.norm(truth), 1e-8)
        self.assertIn('RLNE vs input', output)

    def test_undersampled_reconstruction_writes_trace(self):
        self._call('synth', signal='S2', noise_scale=0.02, seed=4, out=str(self.root / 'data'))
        self._call('mask', kind='poisson_gap', n=255, rate=0.3, seed=2, out=str(self.root / 'pg.mask'))
        output = self._call('reconstruct', input=str(self.root / 'data' / 'noisy.cplx'),
                            mask=str(self.root / 'pg.mask'), truth=str(self.root / 'data' / 'truth.cplx'),
                            solver='penalty', beta=2.0, rank=10, iters=50, out=str(self.root / 'recon'))
        trace = (self.root / 'recon' / 'trace.csv').read_text().splitlines()
        self.assertTrue(trace[0].startswith('# hankelrecon'))
        self.assertIn('objective', trace[2])
        self.assertIn('RLNE vs truth', output)

    def test_kspace_reconstruction_writes_image(self):
        self._call('synth', dataset='kspace', size=16, coils=2, seed=1, out=str(self.root / 'data'))
        self._call('mask', kind='cartesian_1d', n=16, rate=0.5, center_fraction=0.125, seed=1,
                   out=str(self.root / 'c.mask'))
        self._call('reconstruct', input=str(self.root / 'data' / 'kspace.cplx'), mask=str(self.root / 'c.mask'),
                   solver='adlr', rank=6, out=str(self.root / 'recon'))
        self.assertEqual(read_cplx(self.root / 'recon' / 'recon.cplx').shape, (16, 16, 2))
        with Image.open(self.root / 'recon' / 'image.pgm') as image:
            pixels = np.array(image)
        self.assertEqual(pixels.shape, (16, 16))
        self.assertEqual(int(pixels.max()), PGM_MAX)

    def test_benchmark_command(self):
        config = json.loads((FIXTURES / 'benchmark_example.json').read_text())
        config.update(trials=1, pattern={'rates': [0.5]})
        config['solver'].update(max_iters=20, rank_cap=6)
        output = self._call('benchmark', config=str(_write_json(self.root, config)), threads=2,
                            executor='threads', out=str(self.root / 'bench'))
        self.assertIn('rate 0.50', output)
        self.assertTrue((self.root / 'bench' / 'report.csv').exists())

    def test_exit_codes(self):
        self._call('mask', kind='full', n=8, out=str(self.root / 'm.mask'))
        with self.assertRaises(CommandError) as caught:
            self._call('reconstruct', input=str(self.root / 'absent.cplx'), mask=str(self.root / 'm.mask'))
        self.assertEqual(caught.exception.returncode, 3)

        with self.assertRaises(CommandError) as caught:
            self._call('benchmark', config=str(_write_json(self.root, 'not json')))
        self.assertEqual(caught.exception.returncode, 2)

        with self.assertRaises(CommandError) as caught:
            self._call('mask', kind='poisson_gap', n=10, rate=1.5)
        self.assertEqual(caught.exception.returncode, 2)

    def test_divergence_maps_to_exit_code_four(self):
        class DivergingCommand(ReconCommand):
            def run(self, **options):
                raise SolverDivergenceError('penalty', 3)

        with self.assertRaises(CommandError) as caught:
            DivergingCommand().handle()
        self.assertEqual(caught.exception.returncode, 4)
        self.assertIn('iteration 3', str(caught.exception))


class CeleryTrialTestCase(SimpleTestCase):
    """Trials dispatched through Celery in eager mode."""

    def setUp(self):
        previous = celery_app.conf.task_always_eager
        celery_app.conf.task_always_eager = True
        self.addCleanup(setattr, celery_app.conf, 'task_always_eager', previous)

    def test_task_matches_direct_call(self):
        payload = trial_payloads(ExperimentConfigFactory())[1]
        result = run_trial_task.apply(args=(payload,)).get()
        self.assertEqual(_without_timing(result), _without_timing(run_trial(payload)))

    def test_celery_executor_keeps_order(self):
        payloads = trial_payloads(ExperimentConfigFactory())
        via_celery = execute_trials(payloads, executor='celery')
        via_threads = execute_trials(payloads, executor='threads', threads=2)
        self.assertEqual([_without_timing(r) for r in via_celery], [_without_timing(r) for r in via_threads])

    def test_unknown_executor(self):
        with self.assertRaises(ConfigurationError):
            execute_trials([], executor='mpi')


class ExportTestCase(SimpleTestCase):
    """SVG and PGM outputs."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_svg_is_reproducible(self):
        csv_path = self.root / 'report.csv'
        csv_path.write_text('# hankelrecon test\nrate,noise_scale,rlne_mean,rlne_std\n'
                            '0.1,0,0.5,0.1\n0.3,0,0.2,0.05\n0.1,0.02,0.6,0.1\n0.3,0.02,0.3,0.05\n')
        first = render(csv_path, self.root / 'a.svg', 'rate', 'rlne_mean', yerr='rlne_std', group='noise_scale')
        second = render(csv_path, self.root / 'b.svg', 'rate', 'rlne_mean', yerr='rlne_std', group='noise_scale')
        self.assertIn('<svg', first.read_text())
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_unknown_column(self):
        csv_path = self.root / 'r.csv'
        csv_path.write_text('rate,rlne_mean\n0.1,0.5\n')
        with self.assertRaises(ConfigurationError):
            render(csv_path, self.root / 'x.svg', 'rate', 'missing')

    def test_pgm_is_max_normalized(self):
        image = np.outer(np.arange(4.0), np.ones(3))
        with Image.open(write_pgm(self.root / 'g.pgm', image)) as pgm:
            pixels = np.array(pgm)
        self.assertEqual(pixels.shape, (4, 3))
        self.assertEqual(int(pixels.max()), PGM_MAX)
        self.assertEqual(int(pixels.min()), 0)

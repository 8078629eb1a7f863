"""
Management command to sweep sampling rates, noise levels and trials.

Writes report.csv (per-cell mean/std), trials.csv (per-trial metrics) and
timings.csv (wall times) to --out. report.csv and trials.csv depend only on the
config and seeds.

Usage:
    python manage.py benchmark --config experiments/fixtures/benchmark_example.json --threads 8 --out out/bench
    RECON_EXECUTOR=celery python manage.py benchmark --config bench.json
"""
import dataclasses

from core.exceptions import ConfigurationError
from experiments.services import Executor, load_config, run_benchmark
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Run a rate x noise x trial benchmark and write CSV reports'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--executor', choices=[Executor.THREADS, Executor.CELERY], default=None,
                            help='Trial executor (default: RECON_EXECUTOR)')

    def run(self, **options):
        if not options['config']:
            raise ConfigurationError('benchmark needs --config')
        config = load_config(options['config'])
        if options['seed'] is not None:
            config = dataclasses.replace(config, seed=options['seed'])

        report, paths = run_benchmark(config, out_dir=options['out'], threads=options['threads'],
                                      executor=options['executor'])
        for summary in report.summaries():
            self.stdout.write(f"rate {summary.rate:.2f}  noise {summary.noise_scale:g}  "
                              f"RLNE {summary.rlne_mean:.4f} +/- {summary.rlne_std:.4f}  (n={summary.trials})")
        for path in paths.values():
            self.success(f'Wrote {path}')

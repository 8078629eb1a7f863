"""
Management command to measure dataset mismatch with the 0/1-cost Wasserstein distance.

Usage:
    python manage.py mismatch --config mismatch.json --out out/mismatch
"""
from pathlib import Path

from django.conf import settings

from core.exceptions import ConfigurationError
from experiments.services import RunRecorder, load_mismatch_config, run_mismatch
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Compare target datasets against a reference dataset via histogram distances'

    def run(self, **options):
        if not options['config']:
            raise ConfigurationError('mismatch needs --config')
        config = load_mismatch_config(options['config'])
        if options['seed'] is not None:
            config['seed'] = options['seed']
        out_dir = Path(options['out'] or config['output'] or Path(settings.RECON_OUTPUT_DIR) / 'mismatch')

        recorder = RunRecorder('mismatch', config, out_dir).start()
        try:
            report = run_mismatch(config, out_dir=out_dir)
        except Exception as e:
            recorder.fail(e)
            raise
        recorder.complete()

        for row in report.rows:
            marker = '  <- closest' if row.target == report.best_target else ''
            self.stdout.write(f"{report.dataset} {row.target:g}: {row.distance:.4f}{marker}")
        self.success(f"Wrote {out_dir / 'mismatch.csv'}")

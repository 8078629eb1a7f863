"""
Management command to reconstruct undersampled data from CPLX + MASK files.

The input's dimensionality selects the problem: 1D signal, 2D spectrum
(indirect dimension along rows), or A x Z x C k-space.

Outputs in --out:
- recon.cplx: reconstruction on the full grid
- trace.csv: per-iteration objective (1D, factorization/svt/cs solvers)
- diagnostics.csv: per-stage pipeline diagnostics (1D, adlr)
- image.pgm: root-sum-of-squares magnitude image (k-space)

Usage:
    python manage.py reconstruct --input data/s2/noisy.cplx --mask masks/pg25.mask --solver penalty --out out/s2
"""
import json
from pathlib import Path

from django.conf import settings

from core.formats import read_cplx, write_cplx
from metrics.services import rlne
from sampling.formats import read_mask
from solvers.services import SolverName
from experiments.images import write_pgm
from experiments.services import RunRecorder, load_solver_config, reconstruct_data
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Reconstruct a signal, 2D spectrum or k-space volume'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--input', required=True, help='CPLX data on the full grid')
        parser.add_argument('--mask', required=True, help='MASK sampling pattern')
        parser.add_argument('--truth', help='Optional CPLX ground truth for RLNE')
        parser.add_argument('--solver', choices=SolverName.values, default=None)
        parser.add_argument('--lam', type=float, default=None, help='Data-fidelity weight lambda')
        parser.add_argument('--beta', type=float, default=None, help='Penalty weight beta')
        parser.add_argument('--rank', type=int, default=None, help='Rank cap R')
        parser.add_argument('--iters', type=int, default=None, help='Maximum iterations')
        parser.add_argument('--tol', type=float, default=None, help='Relative-change stopping tolerance')
        parser.add_argument('--plugin', default=None, help='Pipeline plug-in (zero, svt_shrink)')

    def run(self, **options):
        solver = load_solver_config(
            options['config'],
            name=options['solver'] or (None if options['config'] else SolverName.PENALTY),
            lam=options['lam'],
            beta=options['beta'],
            rank_cap=options['rank'],
            max_iters=options['iters'],
            tol=options['tol'],
            plugin=options['plugin'],
        )
        out_dir = Path(options['out'] or Path(settings.RECON_OUTPUT_DIR) / 'reconstruct')
        data = read_cplx(options['input'])
        pattern = read_mask(options['mask'])
        provenance = [f"hankelrecon {settings.RECON_VERSION}",
                      f"config {json.dumps(solver, sort_keys=True, separators=(',', ':'))}"]

        recorder = RunRecorder('reconstruct', {'solver': solver, 'input': options['input'],
                                               'mask': options['mask']}, out_dir).start()
        try:
            result = reconstruct_data(data, pattern, solver, threads=options['threads'])
            self._write(out_dir, result, provenance)
        except Exception as e:
            recorder.fail(e)
            raise
        recorder.complete()

        reference = read_cplx(options['truth']) if options['truth'] else data
        label = 'truth' if options['truth'] else 'input'
        self.stdout.write(f"RLNE vs {label}: {rlne(reference, result['output']):.6e}")

    def _write(self, out_dir, result, provenance):
        self.success(f"Wrote {write_cplx(out_dir / 'recon.cplx', result['output'])}")
        if result['trace'] is not None:
            self.success(f"Wrote {result['trace'].write_csv(out_dir / 'trace.csv', provenance)}")
        if result['diagnostics'] is not None:
            self.success(f"Wrote {result['diagnostics'].write_csv(out_dir / 'diagnostics.csv', provenance)}")
        if result['image'] is not None:
            self.success(f"Wrote {write_pgm(out_dir / 'image.pgm', result['image'])}")

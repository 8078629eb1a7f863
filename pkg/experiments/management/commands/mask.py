"""
Management command to generate a sampling pattern in the MASK format.

Usage:
    python manage.py mask --kind poisson_gap --n 255 --rate 0.25 --seed 3 --out masks/pg25.mask
    python manage.py mask --kind cartesian_1d --n 64 --rate 0.4 --center-fraction 0.08 --out masks/c40.mask
"""
from pathlib import Path

from django.conf import settings

from sampling.domain import PatternKind
from sampling.formats import write_mask
from sampling.services import DEFAULT_CENTER_FRACTION, make_pattern
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Generate a Poisson-gap, Cartesian, uniform or full sampling pattern'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--kind', choices=PatternKind.values, default=PatternKind.POISSON_GAP)
        parser.add_argument('--n', type=int, required=True, help='Grid length N (or phase encodes Z)')
        parser.add_argument('--rate', type=float, default=1.0, help='Sampling rate in (0, 1] (default: 1.0)')
        parser.add_argument('--center-fraction', type=float, default=DEFAULT_CENTER_FRACTION,
                            help=f'Fully sampled centre band for cartesian_1d (default: {DEFAULT_CENTER_FRACTION})')

    def run(self, **options):
        seed = options['seed'] or 0
        pattern = make_pattern(options['kind'], options['n'], options['rate'], seed,
                               center_fraction=options['center_fraction'])
        path = Path(options['out'] or Path(settings.RECON_OUTPUT_DIR) / f"{pattern.kind}_{pattern.m}.mask")
        write_mask(path, pattern)
        self.success(f'Wrote {path}: {pattern.m} of {pattern.n_total} samples ({pattern.rate:.1%})')

"""
Management command to render a report CSV as an SVG chart.

Usage:
    python manage.py plot --input out/bench/report.csv --x rate --y rlne_mean --yerr rlne_std --group noise_scale
    python manage.py plot --input out/mismatch/mismatch.csv --x target --y distance --out out/mismatch.svg
"""
from pathlib import Path

from experiments.plots import PLOT_KINDS, render
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Render CSV columns to an SVG line or scatter chart'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--input', required=True, help='CSV file (leading # lines are skipped)')
        parser.add_argument('--x', required=True, help='Column for the horizontal axis')
        parser.add_argument('--y', required=True, help='Column for the vertical axis')
        parser.add_argument('--yerr', help='Column of error-bar half widths')
        parser.add_argument('--group', help='Column whose values split the rows into series')
        parser.add_argument('--kind', choices=PLOT_KINDS, default='line')
        parser.add_argument('--title')

    def run(self, **options):
        svg_path = options['out'] or Path(options['input']).with_suffix('.svg')
        path = render(options['input'], svg_path, options['x'], options['y'], yerr=options['yerr'],
                      group=options['group'], kind=options['kind'], title=options['title'])
        self.success(f'Wrote {path}')

"""
SVG charts of report CSVs.

Figures are drawn on the object-oriented matplotlib API (no pyplot state, safe
off the main thread). The SVG writer gets a fixed hash salt and no Date
metadata, so identical CSVs render to identical files.
"""
import csv
import logging
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from core.exceptions import ConfigurationError, DataIOError

logger = logging.getLogger(__name__)

SVG_RC = {'svg.hashsalt': 'hankelrecon', 'svg.fonttype': 'none'}
PLOT_KINDS = ('line', 'scatter')


def read_report(path) -> list:
    """Rows of a report CSV as dicts; leading ``#`` provenance lines are skipped."""
    path = Path(path)
    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(path, f"cannot read: {getattr(e, 'strerror', None) or e}")
    rows = list(csv.DictReader(line for line in lines if not line.startswith('#')))
    if not rows:
        raise DataIOError(path, 'no data rows')
    return rows


def _column(rows, name, path) -> list:
    if name not in rows[0]:
        raise ConfigurationError(f"{path}: no column {name!r}, available {sorted(rows[0])}")
    return [float(row[name]) if row[name] != '' else float('nan') for row in rows]


def render(csv_path, svg_path, x: str, y: str, yerr: str = None, group: str = None, kind: str = 'line',
           title: str = None) -> Path:
    """
    Plot column ``y`` against ``x`` (optionally with ``yerr`` error bars), one
    series per distinct value of ``group``.
    """
    if kind not in PLOT_KINDS:
        raise ConfigurationError(f"unknown plot kind {kind!r}, expected one of {PLOT_KINDS}")
    rows = read_report(csv_path)
    series = {}
    for row in rows:
        series.setdefault(row[group] if group else y, []).append(row)

    with matplotlib.rc_context(SVG_RC):
        figure = Figure(figsize=(6, 4))
        axes = figure.add_subplot()
        for label, members in series.items():
            xs, ys = _column(members, x, csv_path), _column(members, y, csv_path)
            if kind == 'scatter':
                axes.scatter(xs, ys, s=12, label=label)
            elif yerr:
                axes.errorbar(xs, ys, yerr=_column(members, yerr, csv_path), marker='o', capsize=3, label=label)
            else:
                axes.plot(xs, ys, marker='o', label=label)
        axes.set_xlabel(x)
        axes.set_ylabel(y)
        if title:
            axes.set_title(title)
        axes.legend(title=group)
        axes.grid(True, alpha=0.3)

        svg_path = Path(svg_path)
        try:
            svg_path.parent.mkdir(parents=True, exist_ok=True)
            figure.savefig(svg_path, format='svg', metadata={'Date': None})
        except OSError as e:
            raise DataIOError(svg_path, f"cannot write: {e.strerror or e}")

    logger.info(f"Plotted {len(rows)} rows of {csv_path} to {svg_path}")
    return svg_path

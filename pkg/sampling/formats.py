"""
MASK text format for sampling patterns.

    line 1: ``#MASK v1 <N> <M> <seed> <kind>``
    then one sampled index per line, ASCII decimal.
"""
from pathlib import Path

from core.exceptions import ConfigurationError, DataIOError
from .domain import PatternKind, SamplingPattern

MASK_MAGIC = '#MASK'
MASK_VERSION = 'v1'


def format_mask(pattern: SamplingPattern) -> str:
    header = f"{MASK_MAGIC} {MASK_VERSION} {pattern.n_total} {pattern.m} {pattern.seed} {pattern.kind}"
    return '\n'.join([header, *(str(i) for i in pattern.omega)]) + '\n'


def parse_mask(text: str, source='<string>') -> SamplingPattern:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DataIOError(source, 'empty MASK file')

    header = lines[0].split()
    if len(header) != 6 or header[0] != MASK_MAGIC or header[1] != MASK_VERSION:
        raise DataIOError(source, f"bad MASK header {lines[0]!r}")
    try:
        n_total, m, seed = (int(token) for token in header[2:5])
        omega = tuple(int(line) for line in lines[1:])
    except ValueError as e:
        raise DataIOError(source, f"non-integer value: {e}")

    kind = header[5]
    if kind not in PatternKind.values:
        raise DataIOError(source, f"unknown pattern kind {kind!r}")
    if len(omega) != m:
        raise DataIOError(source, f"header declares {m} indices, found {len(omega)}")

    try:
        return SamplingPattern(omega=omega, n_total=n_total, seed=seed, kind=kind)
    except ConfigurationError as e:
        raise DataIOError(source, str(e))


def write_mask(path, pattern: SamplingPattern) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_mask(pattern), encoding='ascii')
    except OSError as e:
        raise DataIOError(path, f"cannot write: {e.strerror or e}")
    return path


def read_mask(path) -> SamplingPattern:
    path = Path(path)
    try:
        text = path.read_text(encoding='ascii')
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(path, f"cannot read: {getattr(e, 'strerror', None) or e}")
    return parse_mask(text, source=str(path))

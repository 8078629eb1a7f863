"""
CPLX text container for complex arrays.

Layout:
    line 1: ``#CPLX v1 <d1>[ <d2>[ <d3>]]``
    then one ``re,im`` pair per line in row-major order, 17 significant digits
    so that every double survives a write/read cycle bit-exactly.
"""
import logging
from pathlib import Path

import numpy as np

from .exceptions import DataIOError

logger = logging.getLogger(__name__)

CPLX_MAGIC = '#CPLX'
CPLX_VERSION = 'v1'
MAX_DIMS = 3


def format_cplx(data) -> str:
    """Render a complex array (1 to 3 dimensions) as CPLX text."""
    array = np.asarray(data, dtype=np.complex128)
    if not 1 <= array.ndim <= MAX_DIMS:
        raise DataIOError('<memory>', f"CPLX supports 1 to {MAX_DIMS} dimensions, got {array.ndim}")

    lines = [' '.join([CPLX_MAGIC, CPLX_VERSION, *(str(d) for d in array.shape)])]
    lines.extend(f"{value.real:.17g},{value.imag:.17g}" for value in array.ravel(order='C'))
    return '\n'.join(lines) + '\n'


def parse_cplx(text: str, source='<string>') -> np.ndarray:
    """Parse CPLX text back into a complex128 array."""
    lines = text.splitlines()
    if not lines:
        raise DataIOError(source, 'empty CPLX file')

    header = lines[0].split()
    if len(header) < 3 or header[0] != CPLX_MAGIC or header[1] != CPLX_VERSION:
        raise DataIOError(source, f"bad CPLX header {lines[0]!r}")
    if len(header) - 2 > MAX_DIMS:
        raise DataIOError(source, f"CPLX header declares more than {MAX_DIMS} dimensions")
    try:
        shape = tuple(int(token) for token in header[2:])
    except ValueError:
        raise DataIOError(source, f"non-integer dimension in header {lines[0]!r}")
    if any(d < 1 for d in shape):
        raise DataIOError(source, f"dimensions must be positive, got {shape}")

    body = [line for line in lines[1:] if line.strip()]
    expected = int(np.prod(shape))
    if len(body) != expected:
        raise DataIOError(source, f"expected {expected} values, found {len(body)}")

    values = np.empty(expected, dtype=np.complex128)
    for idx, line in enumerate(body):
        try:
            re_part, im_part = line.split(',')
            values[idx] = complex(float(re_part), float(im_part))
        except ValueError:
            raise DataIOError(source, f"line {idx + 2}: expected 're,im', got {line!r}")
    return values.reshape(shape)


def write_cplx(path, data) -> Path:
    """Write a complex array to ``path`` in CPLX format."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_cplx(data), encoding='ascii')
    except OSError as e:
        raise DataIOError(path, f"cannot write: {e.strerror or e}")
    logger.debug(f"Wrote CPLX {np.shape(data)} to {path}")
    return path


def read_cplx(path) -> np.ndarray:
    """Read a CPLX file."""
    path = Path(path)
    try:
        text = path.read_text(encoding='ascii')
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(path, f"cannot read: {getattr(e, 'strerror', None) or e}")
    return parse_cplx(text, source=str(path))

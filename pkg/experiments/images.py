"""
Magnitude image export.
"""
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from core.exceptions import ConfigurationError, DataIOError

logger = logging.getLogger(__name__)

PGM_MAX = 65535


def to_uint16(image) -> np.ndarray:
    """Max-normalize a non-negative 2D image onto 0..65535."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ConfigurationError(f"PGM export needs a 2D image, got shape {image.shape}")
    peak = image.max()
    if not peak > 0:
        return np.zeros(image.shape, dtype=np.uint16)
    return np.round(np.clip(image, 0, None) / peak * PGM_MAX).astype(np.uint16)


def write_pgm(path, image) -> Path:
    """16-bit binary PGM of ``image``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint16(image)).save(path, format='PPM')
    except OSError as e:
        raise DataIOError(path, f"cannot write: {e.strerror or e}")
    logger.info(f"Wrote {np.shape(image)} image to {path}")
    return path

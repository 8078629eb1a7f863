"""
Reconstruction Service Layer - 2D NMR spectra and multi-coil MRI.

NMR:
    Each direct-dimension row holds an indirect-dimension time signal acquired
    on the same sampling pattern. Rows are reconstructed independently with the
    chosen solver and reassembled in row order.

MRI:
    1. Inverse FFT along the fully sampled frequency-encode axis
    2. Each of the A rows (Z x C) is completed by the virtual-coil block pipeline
    3. Forward FFT restores k-space
    4. Coil images are combined by root sum of squares
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence

import numpy as np

from core.exceptions import ConfigurationError
from core.fft import fftc, ifftc
from core.rng import make_rng
from exponentials.domain import ExponentialModel
from exponentials.services import synthesize
from hankel.domain import HankelShape
from hankel.services import VirtualCoilOperator
from pipeline.domain import Normalization, PipelineConfig
from pipeline.services import exponential_blocks, mri_blocks, run_pipeline
from sampling.domain import SamplingPattern
from solvers.domain import SolverConfig
from solvers.services import SolverName, default_config, solve
from .domain import KSpaceVolume, RowReconstructionError, Spectrum2D

logger = logging.getLogger(__name__)

MRI_RANK_CAP = 40


def map_rows(func: Callable[[int], np.ndarray], count: int, threads: int = 1) -> List[np.ndarray]:
    """
    Evaluate ``func`` for rows 0..count-1 and return the results in row order.

    Raises:
        RowReconstructionError: For the first failing row; no partial result is returned
    """
    def guarded(index: int):
        try:
            return func(index)
        except Exception as e:
            raise RowReconstructionError(index, e) from e

    if threads <= 1:
        return [guarded(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(guarded, range(count)))


def reconstruct_nmr(spectrum: Spectrum2D, pattern: SamplingPattern, solver: str = SolverName.PENALTY,
                    config: SolverConfig = None, pipeline_config: PipelineConfig = None,
                    threads: int = 1) -> Spectrum2D:
    """
    Reconstruct a 2D spectrum row by row along the indirect dimension.

    Args:
        spectrum: Full-grid data; unsampled indirect positions are ignored
        pattern: Sampling pattern shared by every row
        solver: penalty, admm, svt, cs or adlr
        config: Solver weights; defaults to the regularization table at the pattern's rate
        pipeline_config: Block pipeline for ``adlr``; defaults to the ten tabulated blocks
        threads: Worker threads for the row map

    Raises:
        ConfigurationError: If the pattern does not match the indirect dimension
        RowReconstructionError: If any row fails
    """
    if pattern.n_total != spectrum.indirect_dim:
        raise ConfigurationError(
            f"pattern covers {pattern.n_total} points but the indirect dimension has {spectrum.indirect_dim}"
        )
    if solver not in SolverName.values:
        raise ConfigurationError(f"unknown solver {solver!r}, expected one of {SolverName.values}")
    if pattern.is_full:
        logger.info('NMR reconstruction skipped: pattern is fully sampled')
        return spectrum.with_data(spectrum.data.copy())

    config = config or default_config(solver, pattern.rate)
    if solver == SolverName.ADLR and pipeline_config is None:
        pipeline_config = PipelineConfig(blocks=exponential_blocks(), rank_cap=config.rank_cap)

    data = spectrum.data

    def reconstruct_row(index: int) -> np.ndarray:
        x, _ = solve(solver, data[index], pattern, config, pipeline_config=pipeline_config)
        return x

    logger.info(f"NMR reconstruction: {spectrum.direct_dim} rows, solver {solver}, "
                f"rate {pattern.rate:.3f}, {threads} thread(s)")
    rows = map_rows(reconstruct_row, spectrum.direct_dim, threads)
    return spectrum.with_data(np.vstack(rows))


def mri_config(rank_cap: int = MRI_RANK_CAP, plugin: str = 'zero', blocks: Sequence = None) -> PipelineConfig:
    """Five tabulated MRI blocks with R = 40 unless overridden, on raw k-space scale."""
    return PipelineConfig(blocks=tuple(blocks) if blocks else mri_blocks(), rank_cap=rank_cap, plugin=plugin,
                          normalization=Normalization.NONE)


def reconstruct_mri(volume: KSpaceVolume, pattern: SamplingPattern, config: PipelineConfig = None,
                    threads: int = 1):
    """
    Complete undersampled multi-coil k-space row by row.

    Args:
        volume: A x Z x C k-space; unsampled phase-encode lines are ignored
        pattern: Pattern over the Z phase-encode lines
        config: Block pipeline; defaults to :func:`mri_config`
        threads: Worker threads for the row map

    Returns:
        (KSpaceVolume, root-sum-of-squares magnitude image)

    Raises:
        ConfigurationError: If the pattern does not match the phase-encode dimension
        RowReconstructionError: If any row fails
    """
    if pattern.n_total != volume.phase_encodes:
        raise ConfigurationError(
            f"pattern covers {pattern.n_total} lines but k-space has {volume.phase_encodes} phase encodes"
        )
    if pattern.is_full:
        logger.info('MRI reconstruction skipped: pattern is fully sampled')
        return volume, rsos(kspace_to_images(volume.data))

    operator = VirtualCoilOperator(HankelShape.for_length(volume.phase_encodes), volume.n_coils)
    config = config or mri_config()
    if config.rank_cap > operator.max_rank:
        logger.warning(f"Rank cap {config.rank_cap} exceeds the virtual-coil Hankel dimension "
                       f"{operator.max_rank}; using {operator.max_rank}")
        config = dataclasses.replace(config, rank_cap=operator.max_rank)

    hybrid = ifftc(volume.data, axis=0)

    def reconstruct_row(index: int) -> np.ndarray:
        x, _ = run_pipeline(hybrid[index], pattern, config, shape=operator)
        return x

    logger.info(f"MRI reconstruction: {volume.frequency_encodes} rows of {volume.phase_encodes}x{volume.n_coils}, "
                f"{config.block_count} blocks, rank {config.rank_cap}, {threads} thread(s)")
    rows = map_rows(reconstruct_row, volume.frequency_encodes, threads)
    kspace = fftc(np.stack(rows), axis=0)
    return KSpaceVolume(data=kspace), rsos(kspace_to_images(kspace))


def rsos(images) -> np.ndarray:
    """Root sum of squares over the coil axis (last axis of a 3D array)."""
    images = np.asarray(images)
    if images.ndim == 2:
        return np.abs(images)
    return np.sqrt(np.sum(np.abs(images) ** 2, axis=-1))


def kspace_to_images(kspace) -> np.ndarray:
    """Centred unitary 2D inverse FFT over the first two axes."""
    return ifftc(ifftc(np.asarray(kspace, dtype=np.complex128), axis=0), axis=1)


def images_to_kspace(images) -> np.ndarray:
    return fftc(fftc(np.asarray(images, dtype=np.complex128), axis=0), axis=1)


def synthetic_spectrum2d(direct_dim: int, model: ExponentialModel, direct_centers: Sequence[float],
                         direct_width: float = 1.5) -> Spectrum2D:
    """
    2D data whose peaks have Lorentzian line shapes along the direct dimension
    and damped-exponential time signals along the indirect dimension.

    Row d is sum_g L_g(d) x_g, with L_g peaking at 1 on ``direct_centers[g]``.
    """
    centers = list(direct_centers)
    if len(centers) != model.peak_count:
        raise ConfigurationError(f"need one direct centre per peak: {model.peak_count} peaks, {len(centers)} centres")
    if direct_dim < 1 or not direct_width > 0:
        raise ConfigurationError(f"direct_dim and direct_width must be positive, got {direct_dim}, {direct_width}")

    d = np.arange(direct_dim)
    data = np.zeros((direct_dim, model.length), dtype=np.complex128)
    for peak, center in zip(model.peaks, centers):
        line_shape = direct_width ** 2 / ((d - center) ** 2 + direct_width ** 2)
        data += np.outer(line_shape, synthesize(model.with_peaks([peak])))
    return Spectrum2D(data=data)


def phantom_image(frequency_encodes: int, phase_encodes: int, seed: int = 0, blobs: int = 4,
                  width: float = 9.0, contrast: float = 1.0) -> np.ndarray:
    """
    Real non-negative image made of Gaussian blobs, max-normalized, raised to ``contrast``.
    """
    if blobs < 1 or not width > 0 or not contrast > 0:
        raise ConfigurationError(f"phantom needs blobs >= 1, width > 0, contrast > 0; got {blobs}, {width}, {contrast}")
    rng = make_rng(seed)
    rows, cols = np.mgrid[0:frequency_encodes, 0:phase_encodes]
    image = np.zeros((frequency_encodes, phase_encodes))
    for _ in range(blobs):
        center_row = rng.uniform(0.4, 0.6) * frequency_encodes
        center_col = rng.uniform(0.4, 0.6) * phase_encodes
        amplitude = rng.uniform(0.5, 1.0)
        image += amplitude * np.exp(-((rows - center_row) ** 2 + (cols - center_col) ** 2) / (2 * width ** 2))
    return (image / image.max()) ** contrast


def coil_maps(frequency_encodes: int, phase_encodes: int, n_coils: int) -> np.ndarray:
    """Smooth complex sensitivities centred on a ring around the field of view."""
    rows, cols = np.mgrid[0:frequency_encodes, 0:phase_encodes]
    maps = np.empty((frequency_encodes, phase_encodes, n_coils), dtype=np.complex128)
    radius = max(frequency_encodes, phase_encodes)
    for coil in range(n_coils):
        angle = 2 * np.pi * coil / n_coils
        center_row = frequency_encodes / 2 + 0.5 * frequency_encodes * np.cos(angle)
        center_col = phase_encodes / 2 + 0.5 * phase_encodes * np.sin(angle)
        magnitude = np.exp(-((rows - center_row) ** 2 + (cols - center_col) ** 2) / (2 * radius ** 2))
        maps[:, :, coil] = magnitude * np.exp(1j * angle)
    return maps


def coil_phantom(frequency_encodes: int = 64, phase_encodes: int = 64, n_coils: int = 2, seed: int = 0,
                 contrast: float = 1.0) -> KSpaceVolume:
    """Fully sampled k-space of a Gaussian-blob phantom seen through smooth coil maps."""
    if n_coils < 1:
        raise ConfigurationError(f"need at least one coil, got {n_coils}")
    image = phantom_image(frequency_encodes, phase_encodes, seed=seed, contrast=contrast)
    images = image[:, :, None] * coil_maps(frequency_encodes, phase_encodes, n_coils)
    return KSpaceVolume(data=images_to_kspace(images))

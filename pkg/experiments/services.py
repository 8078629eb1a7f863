"""
Experiment Service Layer - configuration loading, benchmark trials, dataset mismatch.

Benchmark flow:
1. Validate the JSON config through the serializers
2. Expand rates x noise levels x trials into JSON payloads with derived seeds
3. Run the payloads on the thread pool or as Celery tasks
4. Gather outcomes by index, aggregate, and write CSV reports
5. Record the run and its trials (failures to record are logged, never fatal)
"""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np
from django.conf import settings
from django.db import DatabaseError

from core.exceptions import ConfigurationError, DataIOError
from core.formats import read_cplx
from core.rng import derive_seeds, make_rng
from exponentials.domain import NoiseSpec, TrainingRanges
from exponentials.services import (
    add_noise,
    generate_training_set,
    sample_training_model,
    synthesize,
    table_signal,
    to_spectrum,
)
from metrics.domain import MetricError
from metrics.services import (
    build_histogram,
    effective_rank,
    peak_intensities,
    peak_rlne,
    pearson_r2,
    rlne,
    shared_range,
    wasserstein_01,
)
from pipeline.domain import Normalization, PipelineConfig
from pipeline.services import exponential_blocks, initial_blocks, mri_blocks
from recon.domain import KSpaceVolume, Spectrum2D
from recon.services import MRI_RANK_CAP, coil_phantom, reconstruct_mri, reconstruct_nmr
from sampling.services import apply_U, cartesian_1d, make_pattern, sampling_mask
from solvers.domain import DEFAULT_BETA_CAP, DEFAULT_BETA_GROWTH, ObjectiveTrace, SolverConfig
from solvers.services import SolverName, default_config, solve
from .domain import ExperimentConfig, MismatchReport, MismatchRow, ReconReport, TrialOutcome
from .serializers import ExperimentConfigSerializer, MismatchConfigSerializer, SolverSerializer

logger = logging.getLogger(__name__)

SIGNAL_RANK_CAP = 20
DEFAULT_NORMALIZATION = {'exponential': Normalization.NUCLEAR, 'mri': Normalization.NONE}


class Executor:
    THREADS = 'threads'
    CELERY = 'celery'


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(path, f"cannot read: {getattr(e, 'strerror', None) or e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return data


def _flatten_errors(errors, prefix='') -> List[str]:
    if isinstance(errors, dict):
        return [message for key, value in errors.items()
                for message in _flatten_errors(value, f"{prefix}{key}." if key != 'non_field_errors' else prefix)]
    if isinstance(errors, list):
        return [message for value in errors for message in _flatten_errors(value, prefix)]
    return [f"{prefix.rstrip('.') or 'config'}: {errors}"]


def validate(serializer_class, data: dict, source='<config>') -> dict:
    """
    Run a config serializer and return its validated data.

    Raises:
        ConfigurationError: With every field error on one line
    """
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise ConfigurationError(f"{source}: " + '; '.join(_flatten_errors(serializer.errors)))
    return json.loads(json.dumps(serializer.validated_data))


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_validated(validate(ExperimentConfigSerializer, load_json(path), str(path)))


def load_mismatch_config(path) -> dict:
    return validate(MismatchConfigSerializer, load_json(path), str(path))


def load_solver_config(path=None, **overrides) -> dict:
    """Solver section of a config file (or an empty one) with command-line overrides applied."""
    data = load_json(path).get('solver', {}) if path else {}
    data.update({key: value for key, value in overrides.items() if value is not None})
    return validate(SolverSerializer, data, str(path or '<command line>'))


def ground_truth(signal: dict, seed: int = 0) -> np.ndarray:
    """Clean signal for a benchmark trial."""
    if signal['source'] == 'table':
        return synthesize(table_signal(signal['name']))
    if signal['source'] == 'random':
        ranges = TrainingRanges(peak_count=tuple(signal['peak_count']), length=signal['length'])
        return synthesize(sample_training_model(ranges, make_rng(seed)))
    data = read_cplx(signal['path'])
    if data.ndim != 1:
        raise ConfigurationError(f"{signal['path']}: benchmark signals must be 1D, got shape {data.shape}")
    return data


def block_table(name: str, count: int = 10) -> tuple:
    if name == 'exponential':
        return exponential_blocks()
    if name == 'mri':
        return mri_blocks()
    if name == 'initial':
        return initial_blocks(count)
    raise ConfigurationError(f"unknown block table {name!r}")


def solver_setup(solver: dict, rate: float):
    """
    SolverConfig for ``solver`` at ``rate`` plus a PipelineConfig for adlr.

    Lambda falls back to the regularization table when the config leaves it unset.
    """
    name = solver['name']
    rank_cap = solver.get('rank_cap') or SIGNAL_RANK_CAP
    continuation = {
        'beta_growth': solver.get('beta_growth', DEFAULT_BETA_GROWTH),
        'beta_cap': solver.get('beta_cap', DEFAULT_BETA_CAP),
    }
    if solver.get('lam') is None:
        config = default_config(name, rate, beta=solver['beta'], rank_cap=rank_cap,
                                max_iters=solver['max_iters'], tol=solver['tol'], **continuation)
    else:
        config = SolverConfig(lam=solver['lam'], beta=solver['beta'], rank_cap=rank_cap,
                              max_iters=solver['max_iters'], tol=solver['tol'], **continuation)
    pipeline_config = None
    if name == SolverName.ADLR:
        pipeline_config = _pipeline_config(solver, 'exponential', rank_cap)
    return config, pipeline_config


def _pipeline_config(solver: dict, default_blocks: str, rank_cap: int) -> PipelineConfig:
    return PipelineConfig(
        blocks=block_table(solver.get('blocks') or default_blocks, solver['block_count']),
        rank_cap=rank_cap,
        mode=solver['mode'],
        plugin=solver['plugin'],
        plugin_threshold=solver['plugin_threshold'],
        normalization=solver.get('normalization') or DEFAULT_NORMALIZATION[default_blocks],
    )


def trial_payloads(config: ExperimentConfig) -> List[dict]:
    """One JSON payload per (rate, noise level, trial), in report order."""
    payloads = []
    for rate_index, rate in enumerate(config.rates):
        for noise_index, scale in enumerate(config.noise_scales):
            for trial in range(config.trials):
                pattern_seed, noise_seed, signal_seed = derive_seeds(config.seed, rate_index, noise_index, trial,
                                                                     count=3)
                payloads.append({
                    'signal': config.signal,
                    'noise_kind': config.noise['kind'],
                    'pattern': {'kind': config.pattern['kind'], 'center_fraction': config.pattern['center_fraction']},
                    'solver': config.solver,
                    'rate': rate,
                    'noise_scale': scale,
                    'trial': trial,
                    'pattern_seed': pattern_seed,
                    'noise_seed': noise_seed,
                    'signal_seed': signal_seed,
                })
    return payloads


def _peak_metrics(truth, estimate):
    """Per-peak RLNEs and peak-intensity r^2 of the spectra; r^2 is None when undefined."""
    truth_spectrum, estimate_spectrum = to_spectrum(truth), to_spectrum(estimate)
    try:
        peak_rlnes = tuple(peak_rlne(truth_spectrum, estimate_spectrum))
    except MetricError:
        return (), None
    try:
        r2 = pearson_r2(*peak_intensities(truth_spectrum, estimate_spectrum))
    except MetricError:
        r2 = None
    return peak_rlnes, r2


def run_trial(payload: dict) -> dict:
    """
    Execute one benchmark trial.

    Returns:
        TrialOutcome as a JSON-serializable dict
    """
    started = time.perf_counter()
    rate = payload['rate']
    truth = ground_truth(payload['signal'], payload['signal_seed'])
    pattern = make_pattern(payload['pattern']['kind'], truth.size, rate, payload['pattern_seed'],
                           center_fraction=payload['pattern']['center_fraction'])
    noisy = add_noise(truth, NoiseSpec(kind=payload['noise_kind'], scale=payload['noise_scale'],
                                       seed=payload['noise_seed']))

    config, pipeline_config = solver_setup(payload['solver'], rate)
    x, trace = solve(payload['solver']['name'], apply_U(noisy, pattern), pattern, config,
                     pipeline_config=pipeline_config)
    iterations = trace.iterations if isinstance(trace, ObjectiveTrace) else pipeline_config.block_count
    peak_rlnes, r2 = _peak_metrics(truth, x)

    outcome = TrialOutcome(
        rate=float(rate),
        noise_scale=float(payload['noise_scale']),
        trial=int(payload['trial']),
        pattern_seed=int(payload['pattern_seed']),
        noise_seed=int(payload['noise_seed']),
        rlne=rlne(truth, x),
        effective_rank=int(effective_rank(x)),
        r2=r2,
        iterations=int(iterations),
        seconds=time.perf_counter() - started,
        peak_rlnes=peak_rlnes,
    )
    logger.debug(f"trial {outcome.trial} rate {rate}: RLNE {outcome.rlne:.4e}")
    return outcome.as_dict()


def execute_trials(payloads: List[dict], executor: str = Executor.THREADS, threads: int = 1) -> List[dict]:
    """Run payloads and return their outcomes in payload order."""
    if executor == Executor.CELERY:
        from celery import group
        from .tasks import run_trial_task

        logger.info(f"Dispatching {len(payloads)} trials to Celery")
        return group(run_trial_task.s(payload) for payload in payloads).apply_async().join()
    if executor != Executor.THREADS:
        raise ConfigurationError(f"unknown executor {executor!r}, expected 'threads' or 'celery'")
    if threads <= 1:
        return [run_trial(payload) for payload in payloads]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_trial, payloads))


class RunRecorder:
    """
    Persists an ExperimentRun and its TrialResults.

    Database errors are logged and swallowed: the CSV reports are the
    authoritative output.
    """

    def __init__(self, command: str, config: dict, output_dir='', enabled: bool = None):
        self.command = command
        self.config = config
        self.output_dir = str(output_dir)
        self.enabled = settings.RECON_PERSIST_RUNS if enabled is None else enabled
        self.run = None

    def _guarded(self, action: str, func):
        if not self.enabled:
            return None
        try:
            return func()
        except DatabaseError as e:
            logger.warning(f"Could not {action} for {self.command}: {e}")
            return None

    def start(self):
        from .models import ExperimentRun

        self.run = self._guarded('record run start', lambda: ExperimentRun.objects.create(
            command=self.command,
            status=ExperimentRun.Status.RUNNING,
            config=self.config,
            tool_version=settings.RECON_VERSION,
            output_dir=self.output_dir,
        ))
        return self

    def complete(self, outcomes: List[TrialOutcome] = ()):
        from .models import ExperimentRun, TrialResult

        if self.run is None:
            return

        def save():
            TrialResult.objects.bulk_create([TrialResult(run=self.run, **o.as_dict()) for o in outcomes])
            self.run.status = ExperimentRun.Status.COMPLETED
            self.run.save(update_fields=['status', 'updated_at'])

        self._guarded('record run results', save)

    def fail(self, error: Exception):
        from .models import ExperimentRun

        if self.run is None:
            return

        def save():
            self.run.status = ExperimentRun.Status.FAILED
            self.run.failure_reason = str(error)
            self.run.save(update_fields=['status', 'failure_reason', 'updated_at'])

        self._guarded('record run failure', save)


def run_benchmark(config: ExperimentConfig, out_dir=None, threads: int = None, executor: str = None,
                  persist: Optional[bool] = None):
    """
    Sweep rates x noise levels x trials and write the CSV reports.

    Args:
        config: Validated experiment configuration
        out_dir: Report directory; defaults to config.output, then RECON_OUTPUT_DIR
        threads: Thread-pool size (defaults to RECON_THREADS)
        executor: 'threads' or 'celery' (defaults to RECON_EXECUTOR)
        persist: Record the run in the database (defaults to RECON_PERSIST_RUNS)

    Returns:
        (ReconReport, {'report': path, 'trials': path, 'timings': path})
    """
    out_dir = Path(out_dir or config.output or settings.RECON_OUTPUT_DIR)
    threads = settings.RECON_THREADS if threads is None else threads
    executor = executor or settings.RECON_EXECUTOR

    payloads = trial_payloads(config)
    logger.info(f"Benchmark: {len(config.rates)} rates x {len(config.noise_scales)} noise levels x "
                f"{config.trials} trials, solver {config.solver['name']}, executor {executor}")

    recorder = RunRecorder('benchmark', config.resolved(), out_dir, enabled=persist).start()
    try:
        outcomes = [TrialOutcome.from_dict(result) for result in execute_trials(payloads, executor, threads)]
        report = ReconReport(config=config, tool_version=settings.RECON_VERSION, outcomes=outcomes)
        paths = report.write(out_dir)
    except Exception as e:
        recorder.fail(e)
        raise
    recorder.complete(outcomes)

    for summary in report.summaries():
        logger.info(f"rate {summary.rate:.2f} noise {summary.noise_scale:g}: "
                    f"RLNE {summary.rlne_mean:.4f} +/- {summary.rlne_std:.4f}")
    return report, paths


def exponential_dataset(rate: float, count: int, seed: int) -> list:
    """Zero-filled noisy training signals at one sampling rate."""
    return [sample.zero_filled for sample in generate_training_set(count, rate, seed=seed)]


def kspace_dataset(contrast: float, count: int, seed: int, kspace: dict) -> list:
    """Zero-filled phantom k-space volumes at one contrast, each with its own Cartesian pattern."""
    volumes = []
    for index in range(count):
        phantom_seed, pattern_seed = derive_seeds(seed, index)
        volume = coil_phantom(kspace['size'], kspace['size'], kspace['coils'], seed=phantom_seed, contrast=contrast)
        pattern = cartesian_1d(kspace['size'], kspace['rate'], center_fraction=kspace['center_fraction'],
                               seed=pattern_seed)
        volumes.append(volume.data * sampling_mask(pattern)[None, :, None])
    return volumes


def run_mismatch(config: dict, out_dir=None) -> MismatchReport:
    """
    Wasserstein distance between a reference dataset and each target dataset.

    All histograms share one magnitude range pooled over every dataset; k-space
    magnitudes are always log-scaled.
    """
    dataset = config['dataset']
    log_scaled = config['log_scaled'] or dataset == 'kspace'
    reference_seed, target_seed = derive_seeds(config['seed'], 0)

    def build(value, seed):
        if dataset == 'exponential':
            return exponential_dataset(value, config['count'], seed)
        return kspace_dataset(value, config['count'], seed, config['kspace'])

    logger.info(f"Mismatch: {dataset} reference {config['reference']} vs {config['targets']}")
    reference = build(config['reference'], reference_seed)
    targets = [build(value, target_seed) for value in config['targets']]

    value_range = shared_range(reference, *targets, log_scaled=log_scaled)
    reference_histogram = build_histogram(reference, log_scaled=log_scaled, shared_range=value_range)
    report = MismatchReport(dataset=dataset, reference=config['reference'], tool_version=settings.RECON_VERSION,
                            config={key: value for key, value in config.items() if key != 'output'})
    for value, signals in zip(config['targets'], targets):
        histogram = build_histogram(signals, log_scaled=log_scaled, shared_range=value_range)
        report.rows.append(MismatchRow(target=value, distance=wasserstein_01(reference_histogram, histogram)))
        logger.info(f"  {dataset} {value}: distance {report.rows[-1].distance:.4f}")

    if out_dir is not None:
        report.write(out_dir)
    return report


def reconstruct_data(data, pattern, solver: dict, threads: int = 1) -> dict:
    """
    Reconstruct a 1D signal, a 2D spectrum (rows along the indirect dimension)
    or an A x Z x C k-space volume, chosen by the dimensionality of ``data``.

    Returns:
        dict with 'output' and, where produced, 'trace', 'diagnostics' and 'image'
    """
    data = np.asarray(data, dtype=np.complex128)
    name = solver['name']
    result = {'trace': None, 'diagnostics': None, 'image': None}

    if data.ndim == 1:
        if pattern.n_total != data.size:
            raise ConfigurationError(f"pattern covers {pattern.n_total} points but the signal has {data.size}")
        if pattern.is_full:
            logger.info('Reconstruction skipped: pattern is fully sampled')
            result['output'] = data.copy()
            return result
        config, pipeline_config = solver_setup(solver, pattern.rate)
        x, trace = solve(name, apply_U(data, pattern), pattern, config, pipeline_config=pipeline_config)
        result['output'] = x
        result['diagnostics' if name == SolverName.ADLR else 'trace'] = trace
        return result

    if data.ndim == 2:
        config, pipeline_config = solver_setup(solver, pattern.rate)
        spectrum = reconstruct_nmr(Spectrum2D(data=data), pattern, solver=name, config=config,
                                   pipeline_config=pipeline_config, threads=threads)
        result['output'] = spectrum.data
        return result

    if data.ndim == 3:
        if name != SolverName.ADLR:
            logger.warning(f"k-space volumes are reconstructed with the block pipeline; ignoring solver {name}")
        config = _pipeline_config(solver, 'mri', solver.get('rank_cap') or MRI_RANK_CAP)
        volume, image = reconstruct_mri(KSpaceVolume(data=data), pattern, config, threads=threads)
        result['output'] = volume.data
        result['image'] = image
        return result

    raise ConfigurationError(f"expected a 1D, 2D or 3D array, got shape {data.shape}")

"""
Experiment value objects and report assembly.

Types:
    - ExperimentConfig: validated benchmark configuration
    - TrialOutcome: metrics of one trial
    - CellSummary: per (rate, noise level) aggregates
    - ReconReport: trials plus aggregates, written as CSV with provenance headers
    - MismatchReport: dataset distances to a reference set
"""
import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import DataIOError

REPORT_COLUMNS = ('rate', 'noise_scale', 'trials', 'rlne_mean', 'rlne_std', 'r2_mean',
                  'effective_rank_mean', 'iterations_mean')
TRIAL_COLUMNS = ('rate', 'noise_scale', 'trial', 'pattern_seed', 'noise_seed', 'rlne', 'effective_rank',
                 'r2', 'iterations', 'peak_rlnes')
TIMING_COLUMNS = ('rate', 'noise_scale', 'trial', 'seconds')
MISMATCH_COLUMNS = ('dataset', 'rate_or_contrast', 'distance')


def _number(value) -> str:
    """Shortest round-trip text; blank for undefined values."""
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ''
    return repr(float(value)) if isinstance(value, float) else str(value)


def _plain(data):
    return json.loads(json.dumps(data))


@dataclass(frozen=True)
class ExperimentConfig:
    signal: dict
    noise: dict
    pattern: dict
    solver: dict
    trials: int = 1
    seed: int = 0
    output: str = ''

    @classmethod
    def from_validated(cls, data: dict) -> 'ExperimentConfig':
        data = _plain(data)
        return cls(**{name: data[name] for name in cls.__dataclass_fields__ if name in data})

    @property
    def rates(self) -> List[float]:
        return list(self.pattern['rates'])

    @property
    def noise_scales(self) -> List[float]:
        return list(self.noise['scales'])

    def resolved(self) -> dict:
        """Every option that influences results; the output directory is excluded."""
        data = asdict(self)
        data.pop('output')
        return data


@dataclass(frozen=True)
class TrialOutcome:
    rate: float
    noise_scale: float
    trial: int
    pattern_seed: int
    noise_seed: int
    rlne: float
    effective_rank: int
    r2: Optional[float]
    iterations: int
    seconds: float
    peak_rlnes: Tuple[float, ...] = ()

    @classmethod
    def from_dict(cls, data: dict) -> 'TrialOutcome':
        data = dict(data)
        data['peak_rlnes'] = tuple(data.get('peak_rlnes', ()))
        return cls(**data)

    def as_dict(self) -> dict:
        data = asdict(self)
        data['peak_rlnes'] = list(self.peak_rlnes)
        return data


@dataclass(frozen=True)
class CellSummary:
    rate: float
    noise_scale: float
    trials: int
    rlne_mean: float
    rlne_std: float
    r2_mean: Optional[float]
    effective_rank_mean: float
    iterations_mean: float

    @classmethod
    def of(cls, outcomes: List[TrialOutcome]) -> 'CellSummary':
        rlnes = np.array([o.rlne for o in outcomes])
        r2 = np.array([np.nan if o.r2 is None else o.r2 for o in outcomes])
        return cls(
            rate=outcomes[0].rate,
            noise_scale=outcomes[0].noise_scale,
            trials=len(outcomes),
            rlne_mean=float(rlnes.mean()),
            rlne_std=float(rlnes.std()),
            r2_mean=float(np.mean(r2[~np.isnan(r2)])) if np.any(~np.isnan(r2)) else None,
            effective_rank_mean=float(np.mean([o.effective_rank for o in outcomes])),
            iterations_mean=float(np.mean([o.iterations for o in outcomes])),
        )

    def as_row(self) -> list:
        return [_number(getattr(self, name)) for name in REPORT_COLUMNS]


@dataclass
class ReconReport:
    """Trials in (rate, noise level, trial) order with per-cell aggregates."""
    config: ExperimentConfig
    tool_version: str
    outcomes: List[TrialOutcome] = field(default_factory=list)

    def summaries(self) -> List[CellSummary]:
        cells = {}
        for outcome in self.outcomes:
            cells.setdefault((outcome.rate, outcome.noise_scale), []).append(outcome)
        return [CellSummary.of(outcomes) for outcomes in cells.values()]

    def header_lines(self) -> List[str]:
        return [
            f"hankelrecon {self.tool_version}",
            f"config {json.dumps(self.config.resolved(), sort_keys=True, separators=(',', ':'))}",
        ]

    def _csv(self, columns, rows) -> str:
        buffer = io.StringIO()
        for line in self.header_lines():
            buffer.write(f"# {line}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(columns)
        writer.writerows(rows)
        return buffer.getvalue()

    def report_csv(self) -> str:
        return self._csv(REPORT_COLUMNS, [summary.as_row() for summary in self.summaries()])

    def trials_csv(self) -> str:
        rows = []
        for o in self.outcomes:
            rows.append([_number(o.rate), _number(o.noise_scale), o.trial, o.pattern_seed, o.noise_seed,
                         _number(o.rlne), o.effective_rank, _number(o.r2), o.iterations,
                         ';'.join(_number(value) for value in o.peak_rlnes)])
        return self._csv(TRIAL_COLUMNS, rows)

    def timings_csv(self) -> str:
        return self._csv(TIMING_COLUMNS, [[_number(o.rate), _number(o.noise_scale), o.trial, _number(o.seconds)]
                                          for o in self.outcomes])

    def write(self, out_dir) -> dict:
        """Write report.csv, trials.csv and timings.csv; return their paths."""
        out_dir = Path(out_dir)
        files = {
            'report': (out_dir / 'report.csv', self.report_csv()),
            'trials': (out_dir / 'trials.csv', self.trials_csv()),
            'timings': (out_dir / 'timings.csv', self.timings_csv()),
        }
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for path, text in files.values():
                path.write_text(text, encoding='utf-8')
        except OSError as e:
            raise DataIOError(out_dir, f"cannot write report: {e.strerror or e}")
        return {name: path for name, (path, _) in files.items()}


@dataclass(frozen=True)
class MismatchRow:
    target: float
    distance: float


@dataclass
class MismatchReport:
    """Wasserstein distance of each target dataset to the reference dataset."""
    dataset: str
    reference: float
    config: dict
    tool_version: str
    rows: List[MismatchRow] = field(default_factory=list)

    @property
    def best_target(self) -> float:
        return min(self.rows, key=lambda row: row.distance).target

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write(f"# hankelrecon {self.tool_version}\n")
        buffer.write(f"# config {json.dumps(self.config, sort_keys=True, separators=(',', ':'))}\n")
        buffer.write(f"# reference {_number(self.reference)}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(MISMATCH_COLUMNS)
        for row in self.rows:
            writer.writerow([self.dataset, _number(row.target), _number(row.distance)])
        return buffer.getvalue()

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / 'mismatch.csv'
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_csv(), encoding='utf-8')
        except OSError as e:
            raise DataIOError(path, f"cannot write: {e.strerror or e}")
        return path

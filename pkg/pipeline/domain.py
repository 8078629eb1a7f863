"""
Block pipeline value objects.

Types:
    - BlockParams: per-block gamma_DL, gamma, beta_P, beta_Q
    - PipelineConfig: blocks, rank cap, stage ordering mode, plug-in choice, input normalization
    - History: prior P / Q iterates handed read-only to plug-ins
    - PipelineState: (x, factors, history) between stages
    - StageDiagnostic / PipelineDiagnostics: per-stage quality trace
"""
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from django.db import models

from core.exceptions import ConfigurationError, DataIOError
from solvers.domain import FactorPair

DIAGNOSTIC_COLUMNS = ('block', 'stage', 'rlne', 'effective_rank', 'nuclear_norm', 'loss_dl', 'loss_opt')


class PipelineMode(models.TextChoices):
    ADLR = 'ADLR', 'Plug-in then optimizer in every block'
    ADLR_D = 'ADLR_D', 'Plug-in stages only'
    ADLR_OD = 'ADLR_OD', 'All optimizer blocks, then all plug-in blocks'
    ADLR_DO = 'ADLR_DO', 'All plug-in blocks, then all optimizer blocks'


class Normalization(models.TextChoices):
    NUCLEAR = 'nuclear', 'Divide the input by the nuclear norm of its Hankel lift'
    NONE = 'none', 'Raw input scale'


class Stage(models.TextChoices):
    PLUGIN = 'dl', 'Plug-in stage'
    OPTIMIZER = 'opt', 'Optimizer stage'


@dataclass(frozen=True)
class BlockParams:
    gamma_dl: float
    gamma: float
    beta_p: float
    beta_q: float

    def __post_init__(self):
        for name in ('gamma_dl', 'gamma', 'beta_p', 'beta_q'):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"block parameter {name} must be positive, got {value}")


@dataclass(frozen=True)
class PipelineConfig:
    blocks: Tuple[BlockParams, ...]
    rank_cap: int = 20
    mode: str = PipelineMode.ADLR
    plugin: str = 'zero'
    plugin_threshold: float = 0.0
    normalization: str = Normalization.NUCLEAR

    def __post_init__(self):
        object.__setattr__(self, 'blocks', tuple(self.blocks))
        if not self.blocks:
            raise ConfigurationError('pipeline needs at least one block')
        if self.rank_cap < 1:
            raise ConfigurationError(f"rank_cap must be at least 1, got {self.rank_cap}")
        if self.mode not in PipelineMode.values:
            raise ConfigurationError(f"unknown pipeline mode {self.mode!r}, expected one of {PipelineMode.values}")
        if self.plugin_threshold < 0:
            raise ConfigurationError(f"plugin_threshold must be non-negative, got {self.plugin_threshold}")
        if self.normalization not in Normalization.values:
            raise ConfigurationError(
                f"unknown normalization {self.normalization!r}, expected one of {Normalization.values}"
            )

    @property
    def block_count(self) -> int:
        return len(self.blocks)


def _read_only(array: np.ndarray) -> np.ndarray:
    view = array.view()
    view.setflags(write=False)
    return view


@dataclass
class History:
    """Prior factor iterates, seeded with the initial P and Q."""
    h_p: List[np.ndarray] = field(default_factory=list)
    h_q: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def seeded(cls, pair: FactorPair) -> 'History':
        return cls(h_p=[pair.p.copy()], h_q=[pair.q.copy()])

    def __len__(self):
        return len(self.h_p)

    def append(self, pair: FactorPair) -> None:
        self.h_p.append(pair.p.copy())
        self.h_q.append(pair.q.copy())

    def snapshot(self) -> Tuple[Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]]:
        """Read-only views for plug-ins."""
        return tuple(_read_only(p) for p in self.h_p), tuple(_read_only(q) for q in self.h_q)


@dataclass
class PipelineState:
    x: np.ndarray
    pair: FactorPair
    history: History


@dataclass
class StageDiagnostic:
    block: int
    stage: str
    rlne: Optional[float]
    effective_rank: int
    nuclear_norm: float
    loss_dl: Optional[float] = None
    loss_opt: Optional[float] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)
    lowrank_x: Optional[np.ndarray] = field(default=None, repr=False)

    def as_row(self) -> list:
        def fmt(value):
            return '' if value is None else repr(float(value))
        return [self.block, self.stage, fmt(self.rlne), self.effective_rank, fmt(self.nuclear_norm),
                fmt(self.loss_dl), fmt(self.loss_opt)]


@dataclass
class PipelineDiagnostics:
    mode: str
    stages: List[StageDiagnostic] = field(default_factory=list)

    def __len__(self):
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)

    def append(self, entry: StageDiagnostic) -> None:
        self.stages.append(entry)

    def of_stage(self, stage: str) -> List[StageDiagnostic]:
        return [entry for entry in self.stages if entry.stage == stage]

    def rescale(self, scale: float) -> None:
        """Multiply stage iterates and nuclear norms by ``scale``; ranks are unchanged."""
        for entry in self.stages:
            entry.nuclear_norm *= scale
            if entry.x is not None:
                entry.x = entry.x * scale
            if entry.lowrank_x is not None:
                entry.lowrank_x = entry.lowrank_x * scale

    @property
    def effective_ranks(self) -> List[int]:
        return [entry.effective_rank for entry in self.stages]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for entry in self.stages:
            writer.writerow(entry.as_row())
        return buffer.getvalue()

    def write_csv(self, path, header_lines=()) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(''.join(f"# {line}\n" for line in header_lines) + self.to_csv(), encoding='utf-8')
        except OSError as e:
            raise DataIOError(path, f"cannot write: {e.strerror or e}")
        return path

"""
Solver value objects.

Types:
    - FactorPair: low-rank factors P (N1 x R) and Q (N2 x R) with P Q^H ~ H(x)
    - SolverConfig: lambda / beta weights, beta continuation, rank cap and stopping rule
    - TraceRecord / ObjectiveTrace: per-iteration objective bookkeeping
"""
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from core.exceptions import ConfigurationError, DataIOError

TRACE_COLUMNS = ('iter', 'objective', 'fidelity', 'penalty', 'nucproxy', 'seconds')

DEFAULT_BETA_GROWTH = 1.1
DEFAULT_BETA_CAP = 64.0


@dataclass(frozen=True, eq=False)
class FactorPair:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p, q = np.asarray(self.p, dtype=np.complex128), np.asarray(self.q, dtype=np.complex128)
        if p.ndim != 2 or q.ndim != 2 or p.shape[1] != q.shape[1] or p.shape[1] < 1:
            raise ConfigurationError(f"factors must be matrices with equal column counts >= 1, got {p.shape} and {q.shape}")
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'q', q)

    @property
    def rank(self) -> int:
        return self.p.shape[1]

    def product(self) -> np.ndarray:
        """P Q^H."""
        return self.p @ self.q.conj().T

    def nuclear_proxy(self) -> float:
        """1/2 (||P||_F^2 + ||Q||_F^2), an upper bound on ||P Q^H||_*."""
        return 0.5 * (np.linalg.norm(self.p) ** 2 + np.linalg.norm(self.q) ** 2)


@dataclass(frozen=True)
class SolverConfig:
    """
    Weights and stopping rule of the factorization solvers.

    ``lam`` weighs data fidelity, ``beta`` the penalty ||Hx - P Q^H||_F^2;
    the data-consistency blend uses gamma = lam / beta.

    With ``beta_growth`` > 1 the penalty weight starts at ``beta`` and grows by that
    factor per iteration up to ``beta_cap * beta``; lam follows so that lam / beta
    stays fixed. ``beta_growth=1`` keeps both weights constant.
    """
    lam: float
    beta: float = 1.0
    rank_cap: int = 20
    max_iters: int = 2000
    tol: float = 1e-6
    beta_growth: float = DEFAULT_BETA_GROWTH
    beta_cap: float = DEFAULT_BETA_CAP

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.rank_cap < 1:
            raise ConfigurationError(f"rank_cap must be at least 1, got {self.rank_cap}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.tol < 0:
            raise ConfigurationError(f"tol must be non-negative, got {self.tol}")
        if not self.beta_growth >= 1 or not self.beta_cap >= 1:
            raise ConfigurationError(
                f"beta_growth and beta_cap must be at least 1, got {self.beta_growth} and {self.beta_cap}"
            )

    @property
    def gamma(self) -> float:
        return self.lam / self.beta

    @property
    def continued(self) -> bool:
        return self.beta_growth > 1 and self.beta_cap > 1

    def ramp_done(self, iteration: int) -> bool:
        """True once the penalty weight has reached its final value."""
        if not self.continued:
            return True
        return (iteration - 1) * math.log(self.beta_growth) >= math.log(self.beta_cap)

    def beta_at(self, iteration: int) -> float:
        """Penalty weight of iteration 1, 2, ...: beta * min(beta_growth^(k-1), beta_cap)."""
        if not self.continued:
            return self.beta
        if self.ramp_done(iteration):
            return self.beta * self.beta_cap
        return self.beta * self.beta_growth ** (iteration - 1)

    def lam_at(self, iteration: int) -> float:
        return self.gamma * self.beta_at(iteration)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    fidelity: float
    penalty: float
    nucproxy: float
    seconds: float
    residual: float = 0.0
    beta: float = 1.0

    def as_row(self) -> tuple:
        return (self.iteration, self.objective, self.fidelity, self.penalty, self.nucproxy, self.seconds)


@dataclass
class ObjectiveTrace:
    """Iteration log of one solver run."""
    solver: str
    records: List[TraceRecord] = field(default_factory=list)
    converged: bool = False
    factors: Optional[FactorPair] = None

    def __len__(self):
        return len(self.records)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def scaled_objectives(self) -> np.ndarray:
        """Objective divided by each iteration's penalty weight."""
        return np.array([r.objective / r.beta for r in self.records])

    def to_csv(self, include_timing: bool = True) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for record in self.records:
            row = list(record.as_row())
            if not include_timing:
                row[-1] = 0.0
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return buffer.getvalue()

    def write_csv(self, path, header_lines=()) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(''.join(f"# {line}\n" for line in header_lines) + self.to_csv(), encoding='utf-8')
        except OSError as e:
            raise DataIOError(path, f"cannot write: {e.strerror or e}")
        return path

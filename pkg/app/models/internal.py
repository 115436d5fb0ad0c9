import math
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

def _frozen_array(value, dtype) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    array.setflags(write=False)
    return array

# Quantum primitives
class PureState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def as_vector(cls, value):
        return _frozen_array(np.asarray(value, dtype=complex).reshape(-1), complex)

    @model_validator(mode="after")
    def check_normalized(self):
        if self.amplitudes.size < 2:
            raise ValueError(f"dimension must be >= 2, got {self.amplitudes.size}")
        norm_sq = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (squared norm {norm_sq!r})")
        return self

    @property
    def d(self) -> int:
        return int(self.amplitudes.size)

    @classmethod
    def basis(cls, index: int, d: int = 2) -> "PureState":
        amplitudes = np.zeros(d, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes=amplitudes)

    # cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>
    @classmethod
    def bloch(cls, theta: float, phi: float = 0.0) -> "PureState":
        return cls(amplitudes=[math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


# physical=False skips the positivity check for linear-inversion estimates
class DensityOperator(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    physical: bool = True

    @field_validator("matrix", mode="before")
    @classmethod
    def as_matrix(cls, value):
        return _frozen_array(value, complex)

    @model_validator(mode="after")
    def check_state(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"density operator must be a square matrix of size >= 2, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density operator is not Hermitian")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"density operator trace is {trace!r}, expected 1")
        if self.physical:
            lowest = float(np.linalg.eigvalsh(m)[0])
            if lowest < -PSD_TOL:
                raise ValueError(f"density operator has negative eigenvalue {lowest!r}")
        return self

    @property
    def d(self) -> int:
        return int(self.matrix.shape[0])


class Ensemble(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: float = Field(gt=0, description="Copy count; real-valued on curves")
    f: float = Field(gt=0, le=1, description="Fidelity of each copy with the pure state")
    d: int = Field(default=2, ge=2)

    @model_validator(mode="after")
    def check_fidelity(self):
        if self.f <= 1.0 / self.d:
            raise ValueError(f"fidelity {self.f} must exceed 1/d = {1.0 / self.d:.6g}")
        return self

    # Depolarizing weight λ = (dF - 1)/(d - 1)
    @property
    def lam(self) -> float:
        return (self.d * self.f - 1.0) / (self.d - 1.0)

    def label(self) -> str:
        return f"({self.n:g}, {self.f:g})"


class DiscriminationPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float = Field(ge=0, le=math.pi)
    f: float = Field(gt=0.5, le=1)

    @computed_field
    @property
    def alpha(self) -> float:
        return math.cos(self.theta / 2)

    @computed_field
    @property
    def beta(self) -> float:
        return math.sin(self.theta / 2)

    @computed_field
    @property
    def lam(self) -> float:
        return 2 * self.f - 1

    @computed_field
    @property
    def p_plus(self) -> float:
        return self.f

    @computed_field
    @property
    def p_minus(self) -> float:
        return 1 - self.f


class ChernoffOptimum(BaseModel):
    s_star: float
    xi: float
    degenerate: bool = False


# QFIM in the Bloch angles, ordered (θ, φ)
class Qfim2x2(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    theta: float
    f: float

    @field_validator("matrix", mode="before")
    @classmethod
    def as_real_matrix(cls, value):
        array = np.asarray(value)
        if np.iscomplexobj(array):
            array = array.real
        return _frozen_array(array, float)

    @model_validator(mode="after")
    def check_matrix(self):
        if self.matrix.shape != (2, 2):
            raise ValueError(f"QFIM must be 2x2, got {self.matrix.shape}")
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        if abs(self.matrix[0, 1] - self.matrix[1, 0]) > 1e-9 * scale:
            raise ValueError("QFIM is not symmetric")
        if np.min(np.diag(self.matrix)) < -1e-9 * scale:
            raise ValueError("QFIM has a negative diagonal entry")
        return self

    @property
    def lam(self) -> float:
        return 2 * self.f - 1

    # QFIM of the noiseless target: F / λ²
    def pure(self) -> np.ndarray:
        return self.matrix / self.lam ** 2

    # Bures metric of the pure target, F_pure / 4
    def bures_metric_pure(self) -> np.ndarray:
        return self.pure() / 4


# Curves
class Task(str, Enum):
    RTP = "RTP"
    QCB = "QCB"
    PURIFICATION = "PURIFICATION"
    QST = "QST"
    SIMULATED = "SIMULATED"


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    g: float
    m: float
    singular: bool = False


class CurveMetadata(BaseModel):
    d: int = 2
    theta: float | None = None
    margin: float = 0.0
    semantics: Literal["equivalence", "separation", "simulated"] = "equivalence"
    clamped: bool = False
    metric: str | None = None


class EquivalenceCurve(BaseModel):
    task: Task
    reference: Ensemble
    points: list[CurvePoint]
    truncated: list[CurvePoint] = []
    gaps: list[float] = []
    metadata: CurveMetadata = CurveMetadata()

    def g_values(self) -> np.ndarray:
        return np.array([p.g for p in self.points], dtype=float)

    def m_values(self) -> np.ndarray:
        return np.array([p.m for p in self.points], dtype=float)

    def m_at(self, g: float) -> float | None:
        for point in self.points:
            if point.g == g:
                return point.m
        return None


class BandPoint(BaseModel):
    g: float
    m_low: float
    m_high: float
    low_task: Task
    high_task: Task


class AmbiguityBand(BaseModel):
    points: list[BandPoint]

    def at(self, g: float) -> BandPoint | None:
        for point in self.points:
            if point.g == g:
                return point
        return None


# Verdicts
class Region(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"


class Strength(str, Enum):
    DEFINITIVE = "definitive"
    SUFFICIENT = "sufficient"
    NECESSARY_ONLY = "necessary-only"
    INDETERMINATE = "indeterminate"


class BoundaryFlags(BaseModel):
    copies: bool = False
    fidelity: bool = False
    separation: bool = False

    def any_set(self) -> bool:
        return self.copies or self.fidelity or self.separation

    def all_set(self) -> bool:
        return self.copies and self.fidelity and self.separation


class RegionVerdict(BaseModel):
    region: Region
    strength: Strength
    boundary: BoundaryFlags
    separation_m: float
    favours: Literal["reference", "offer"] | None = None


class Comparison(str, Enum):
    BETTER = "better"
    WORSE = "worse"
    EQUIVALENT = "equivalent"
    INDETERMINATE = "indeterminate"


class Overall(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    TASK_DEPENDENT = "task-dependent"


class TaskComparison(BaseModel):
    task: Task
    verdict: Comparison
    m_required: float
    m_offered: float
    copies_required: int


class TradeReport(BaseModel):
    reference: Ensemble
    offer: Ensemble
    theta: float
    d: int
    per_task: dict[Task, TaskComparison]
    region: RegionVerdict
    overall: Overall
    indifferent: bool = False


class RankingEntry(BaseModel):
    ensemble: Ensemble
    scores: dict[Task, float]
    ranks: dict[Task, int]


class RankingReport(BaseModel):
    theta: float
    d: int
    entries: list[RankingEntry]


# Tomography simulation
class Basis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


class BasisCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    basis: Basis
    n_plus: int = Field(ge=0)
    n_minus: int = Field(ge=0)

    @property
    def shots(self) -> int:
        return self.n_plus + self.n_minus


class MitigatedState(BaseModel):
    state: PureState
    degenerate: bool = False


class TrialResult(BaseModel):
    infidelity: float
    bures_sq: float
    degenerate: bool = False


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_grid: list[int]
    g_grid: list[float]
    trials: int = Field(default=1000, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    shot_split: Literal["zx-remainder"] = "zx-remainder"

    @model_validator(mode="after")
    def check_grids(self):
        if not self.n_grid or not self.g_grid:
            raise ValueError("simulation grids must be nonempty")
        if min(self.n_grid) < 3:
            raise ValueError("every copy count must allow one shot per basis (n >= 3)")
        if any(not 0.5 < g <= 1.0 for g in self.g_grid):
            raise ValueError("every simulated fidelity must lie in (0.5, 1]")
        return self


# Per-cell Monte Carlo means indexed (n, g)
class SimGrid(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_grid: list[int]
    g_grid: list[float]
    trials: int
    master_seed: int = 0
    mean_infidelity: np.ndarray
    mean_bures_sq: np.ndarray
    stderr: np.ndarray
    stderr_bures_sq: np.ndarray
    degenerate: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self):
        shape = (len(self.n_grid), len(self.g_grid))
        for name in ("mean_infidelity", "mean_bures_sq", "stderr", "stderr_bures_sq", "degenerate"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if np.any(self.mean_infidelity < -1e-12) or np.any(self.mean_infidelity > 1 + 1e-12):
            raise ValueError("mean infidelity outside [0, 1]")
        if np.any(self.mean_bures_sq < -1e-12) or np.any(self.mean_bures_sq > 2 + 1e-12):
            raise ValueError("mean squared Bures distance outside [0, 2]")
        if np.any(self.stderr < 0) or np.any(self.stderr_bures_sq < 0):
            raise ValueError("standard errors must be non-negative")
        return self

    def metric(self, name: str) -> np.ndarray:
        if name == "infidelity":
            return self.mean_infidelity
        if name == "bures_sq":
            return self.mean_bures_sq
        raise ValueError(f"unknown metric {name!r}")

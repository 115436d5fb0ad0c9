from typing import Any

from pydantic import BaseModel

from app.core.config import settings

class EnsembleResponse(BaseModel):
    n: float
    f: float
    d: int = 2

# Curve models
class CurveRowResponse(BaseModel):
    g: float
    m: float

class CurveResponse(BaseModel):
    task: str
    reference: EnsembleResponse
    semantics: str
    d: int
    theta: float | None = None
    clamped: bool = False
    metric: str | None = None
    rows: list[CurveRowResponse]
    truncated: list[float] = []
    gaps: list[float] = []

class BandRowResponse(BaseModel):
    g: float
    m_low: float
    m_high: float
    low_task: str
    high_task: str

class BandResponse(BaseModel):
    rows: list[BandRowResponse]

# Verdict models
class RegionResponse(BaseModel):
    region: str
    strength: str
    on_copies: bool
    on_fidelity: bool
    on_separation: bool
    separation_m: float
    favours: str | None = None

class TaskVerdictResponse(BaseModel):
    task: str
    verdict: str
    m_required: float
    m_offered: float
    copies_required: int

class TradeResponse(BaseModel):
    reference: EnsembleResponse
    offer: EnsembleResponse
    theta: float
    d: int
    per_task: list[TaskVerdictResponse]
    region: RegionResponse
    overall: str
    indifferent: bool = False

class RankingRowResponse(BaseModel):
    n: float
    f: float
    scores: dict[str, float]
    ranks: dict[str, int]

class RankingResponse(BaseModel):
    theta: float
    d: int
    rows: list[RankingRowResponse]

# Simulation models
class GridSummaryResponse(BaseModel):
    path: str
    n_count: int
    g_count: int
    trials: int
    seed: int
    degenerate_trials: int
    runtime_seconds: float

class OutputRecord(BaseModel):
    schema_version: str = settings.SCHEMA_VERSION
    params: dict[str, Any]
    payload: Any

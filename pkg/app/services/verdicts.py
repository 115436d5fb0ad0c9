import math
from collections.abc import Iterable, Sequence

import pandas as pd

from app.core.config import settings
from app.core.exceptions import DomainError, GridMismatchError
from app.core.logger import logger
from app.models.external import EnsembleResponse, RankingResponse, RankingRowResponse, RegionResponse, TaskVerdictResponse, TradeResponse
from app.models.internal import (
    AmbiguityBand,
    BandPoint,
    Comparison,
    Ensemble,
    EquivalenceCurve,
    Overall,
    RankingEntry,
    RankingReport,
    RegionVerdict,
    Strength,
    Task,
    TaskComparison,
    TradeReport,
)
from app.services.curve_service import ANALYTIC_TASKS, CurveFactory
from app.services.purification import classify_region, purification_infidelity

def _resolve(theta: float | None, d: int | None) -> tuple[float, int]:
    theta = settings.DEFAULT_THETA if theta is None else theta
    d = settings.DEFAULT_DIMENSION if d is None else d
    return theta, d

def _copies_required(m: float) -> int:
    return int(math.ceil(max(m, 1.0)))

# RTP, QCB, purification and QST curves through the reference; purification is clamped to one copy
def all_curves(ref: Ensemble, g_grid: Iterable[float], theta: float | None = None, d: int | None = None) -> list[EquivalenceCurve]:
    theta, d = _resolve(theta, d)
    g_grid = list(g_grid)

    curves = []
    for task in ANALYTIC_TASKS:
        builder = CurveFactory.get_builder(task)
        task_ref = CurveFactory.reference_for(task, ref, d)
        curves.append(builder.build(task_ref, g_grid, theta=theta, clamp=task is Task.PURIFICATION))

    logger.info("🟢 [verdicts][all_curves]: Built %s curves for reference %s.", len(curves), ref.label())
    return curves

# Pointwise min/max over tasks on the fidelities every curve shares
def ambiguity_band(curves: Sequence[EquivalenceCurve]) -> AmbiguityBand:
    if len(curves) < 2:
        raise DomainError(f"ambiguity band needs at least two curves, got {len(curves)}", field="curves")

    common = set(curves[0].g_values().tolist())
    for curve in curves[1:]:
        common &= set(curve.g_values().tolist())
    if not common:
        raise GridMismatchError("curves share no fidelity grid points; resample them on a common grid", field="curves")

    points = []
    for g in sorted(common):
        values = [(curve.m_at(g), curve.task) for curve in curves]
        low = min(values, key=lambda item: item[0])
        high = max(values, key=lambda item: item[0])
        points.append(BandPoint(g=g, m_low=low[0], m_high=high[0], low_task=low[1], high_task=high[1]))
    return AmbiguityBand(points=points)

def _compare(m_offered: float, m_required: float) -> Comparison:
    if math.isclose(m_offered, m_required, rel_tol=settings.RELATIVE_TOLERANCE):
        return Comparison.EQUIVALENT
    return Comparison.BETTER if m_offered > m_required else Comparison.WORSE

def _overall(verdicts: Iterable[Comparison]) -> Overall:
    verdicts = list(verdicts)
    if all(v in (Comparison.BETTER, Comparison.EQUIVALENT) for v in verdicts):
        return Overall.ACCEPT
    if all(v in (Comparison.WORSE, Comparison.EQUIVALENT) for v in verdicts) and Comparison.WORSE in verdicts:
        return Overall.REJECT
    return Overall.TASK_DEPENDENT

# Necessary-only regions are settled by the band edges: above every curve is better, below every curve worse
def _purification_verdict(region: RegionVerdict, m: float, m_low: float, m_high: float) -> Comparison:
    if region.boundary.copies and region.boundary.fidelity:
        return Comparison.EQUIVALENT
    if region.strength is Strength.INDETERMINATE:
        return Comparison.INDETERMINATE
    if region.strength is Strength.NECESSARY_ONLY:
        if _compare(m, m_high) is Comparison.BETTER:
            return Comparison.BETTER
        if _compare(m, m_low) is Comparison.WORSE:
            return Comparison.WORSE
        return Comparison.INDETERMINATE
    return Comparison.BETTER if region.favours == "offer" else Comparison.WORSE

def trade_verdict(ref: Ensemble, offer: Ensemble, theta: float | None = None, d: int | None = None) -> TradeReport:
    theta, d = _resolve(theta, d)
    logger.info("⚪ [verdicts][trade_verdict]: Comparing offer %s with reference %s.", offer.label(), ref.label())

    required: dict[Task, float] = {}
    region: RegionVerdict | None = None
    for task in ANALYTIC_TASKS:
        builder = CurveFactory.get_builder(task)
        try:
            task_ref = CurveFactory.reference_for(task, ref, d)
            task_offer = CurveFactory.reference_for(task, offer, d)
            required[task] = builder.required_m(task_ref, task_offer.f, theta)
            if task is Task.PURIFICATION:
                region = classify_region(task_ref, task_offer)
        except ValueError as e:
            logger.error("🔴 [verdicts][trade_verdict]: %s domain violation: %s", task.value, e)
            raise DomainError(f"{task.value}: {e}", field=getattr(e, "field", None)) from e

    # Band edges at the offered fidelity, purification clamped as on its curve
    edges = [max(m, 1.0) if task is Task.PURIFICATION else m for task, m in required.items()]
    m_low, m_high = min(edges), max(edges)

    per_task: dict[Task, TaskComparison] = {}
    for task, m_required in required.items():
        if task is Task.PURIFICATION:
            verdict = _purification_verdict(region, offer.n, m_low, m_high)
        else:
            verdict = _compare(offer.n, m_required)
        per_task[task] = TaskComparison(
            task=task,
            verdict=verdict,
            m_required=m_required,
            m_offered=offer.n,
            copies_required=_copies_required(m_required),
        )

    overall = _overall(c.verdict for c in per_task.values())
    indifferent = all(c.verdict is Comparison.EQUIVALENT for c in per_task.values())
    logger.info("🟢 [verdicts][trade_verdict]: Overall verdict %s.", overall.value)

    return TradeReport(
        reference=ref,
        offer=offer,
        theta=theta,
        d=d,
        per_task=per_task,
        region=region,
        overall=overall,
        indifferent=indifferent,
    )

# Perfect copies each task rates as equal to `ens`; purification clamps to one copy
def fidelity_one_equivalents(ens: Ensemble, theta: float | None = None, d: int | None = None) -> dict[Task, float]:
    theta, d = _resolve(theta, d)
    equivalents = {}
    for task in ANALYTIC_TASKS:
        if task is Task.PURIFICATION and ens.f == 1.0:
            equivalents[task] = 1.0
            continue
        builder = CurveFactory.get_builder(task)
        m = builder.required_m(CurveFactory.reference_for(task, ens, d), 1.0, theta)
        equivalents[task] = max(m, 1.0) if task is Task.PURIFICATION else m
    return equivalents

def rank_ensembles(candidates: Sequence[Ensemble], theta: float | None = None, d: int | None = None) -> RankingReport:
    theta, d = _resolve(theta, d)
    if not candidates:
        raise DomainError("nothing to rank", field="ensembles")

    scores: list[dict[Task, float]] = []
    for ens in candidates:
        equivalents = fidelity_one_equivalents(ens, theta, d)
        equivalents[Task.PURIFICATION] = purification_infidelity(CurveFactory.reference_for(Task.PURIFICATION, ens, d))
        scores.append(equivalents)

    # Larger fidelity-1 equivalent wins; purification ranks by δ, smaller wins
    frame = pd.DataFrame(scores, columns=list(ANALYTIC_TASKS))
    ranks = {
        task: frame[task].rank(method="dense", ascending=task is Task.PURIFICATION).astype(int).tolist()
        for task in ANALYTIC_TASKS
    }
    entries = [
        RankingEntry(ensemble=ens, scores=scores[i], ranks={task: ranks[task][i] for task in ANALYTIC_TASKS})
        for i, ens in enumerate(candidates)
    ]
    return RankingReport(theta=theta, d=d, entries=entries)

# Convert internal models to external response models
def region_to_external(region: RegionVerdict) -> RegionResponse:
    return RegionResponse(
        region=region.region.value,
        strength=region.strength.value,
        on_copies=region.boundary.copies,
        on_fidelity=region.boundary.fidelity,
        on_separation=region.boundary.separation,
        separation_m=region.separation_m,
        favours=region.favours,
    )

def trade_to_external(report: TradeReport) -> TradeResponse:
    return TradeResponse(
        reference=EnsembleResponse(n=report.reference.n, f=report.reference.f, d=report.reference.d),
        offer=EnsembleResponse(n=report.offer.n, f=report.offer.f, d=report.offer.d),
        theta=report.theta,
        d=report.d,
        per_task=[
            TaskVerdictResponse(
                task=c.task.value,
                verdict=c.verdict.value,
                m_required=c.m_required,
                m_offered=c.m_offered,
                copies_required=c.copies_required,
            ) for c in report.per_task.values()
        ],
        region=region_to_external(report.region),
        overall=report.overall.value,
        indifferent=report.indifferent,
    )

def ranking_to_external(report: RankingReport) -> RankingResponse:
    return RankingResponse(
        theta=report.theta,
        d=report.d,
        rows=[
            RankingRowResponse(
                n=entry.ensemble.n,
                f=entry.ensemble.f,
                scores={task.value: score for task, score in entry.scores.items()},
                ranks={task.value: rank for task, rank in entry.ranks.items()},
            ) for entry in report.entries
        ],
    )

from collections.abc import Iterable

from app.core.config import settings
from app.models.external import BandResponse, BandRowResponse, CurveResponse, CurveRowResponse, EnsembleResponse
from app.models.internal import AmbiguityBand, Ensemble, EquivalenceCurve, Task
from app.services.purification import purification_curve, separation_m
from app.services.qcb import qcb_curve, qcb_equivalent_m
from app.services.qst import qst_curve, qst_equivalent_m
from app.services.rtp import rtp_curve, rtp_equivalent_m

class CurveBuilder:
    task: Task

    def required_m(self, ref: Ensemble, g: float, theta: float | None = None) -> float:
        raise NotImplementedError

    def build(self, ref: Ensemble, g_grid: Iterable[float], theta: float | None = None, clamp: bool = False) -> EquivalenceCurve:
        raise NotImplementedError

    # Convert internal curve to external response model
    def to_external(self, curve: EquivalenceCurve) -> CurveResponse:
        return CurveResponse(
            task=curve.task.value,
            reference=EnsembleResponse(n=curve.reference.n, f=curve.reference.f, d=curve.reference.d),
            semantics=curve.metadata.semantics,
            d=curve.metadata.d,
            theta=curve.metadata.theta,
            clamped=curve.metadata.clamped,
            metric=curve.metadata.metric,
            rows=[CurveRowResponse(g=p.g, m=p.m) for p in curve.points],
            truncated=[p.g for p in curve.truncated],
            gaps=list(curve.gaps),
        )


class RtpCurveBuilder(CurveBuilder):
    task = Task.RTP

    def required_m(self, ref, g, theta=None):
        return rtp_equivalent_m(ref, g)

    def build(self, ref, g_grid, theta=None, clamp=False):
        return rtp_curve(ref, g_grid)


class QcbCurveBuilder(CurveBuilder):
    task = Task.QCB

    def required_m(self, ref, g, theta=None):
        return qcb_equivalent_m(ref, g, theta)

    def build(self, ref, g_grid, theta=None, clamp=False):
        return qcb_curve(ref, g_grid, theta)


class PurificationCurveBuilder(CurveBuilder):
    task = Task.PURIFICATION

    def required_m(self, ref, g, theta=None):
        return separation_m(ref, g)

    def build(self, ref, g_grid, theta=None, clamp=False):
        return purification_curve(ref, g_grid, clamp=clamp)


class QstCurveBuilder(CurveBuilder):
    task = Task.QST

    def required_m(self, ref, g, theta=None):
        return qst_equivalent_m(ref, g)

    def build(self, ref, g_grid, theta=None, clamp=False):
        return qst_curve(ref, g_grid)


ANALYTIC_TASKS = (Task.RTP, Task.QCB, Task.PURIFICATION, Task.QST)

class CurveFactory:
    builders: dict[Task, type[CurveBuilder]] = {
        Task.RTP: RtpCurveBuilder,
        Task.QCB: QcbCurveBuilder,
        Task.PURIFICATION: PurificationCurveBuilder,
        Task.QST: QstCurveBuilder,
    }

    @staticmethod
    def get_builder(task: Task | str) -> CurveBuilder:
        try:
            task = Task(task.upper()) if isinstance(task, str) else task
            return CurveFactory.builders[task]()
        except (ValueError, KeyError):
            raise ValueError(f"Unsupported curve task: {task}")

    # Task-appropriate reference: RTP takes the requested d, the rest are qubit tasks
    @staticmethod
    def reference_for(task: Task, ref: Ensemble, d: int | None = None) -> Ensemble:
        d = settings.DEFAULT_DIMENSION if d is None else d
        target = d if task is Task.RTP else 2
        if ref.d == target:
            return ref
        return Ensemble(n=ref.n, f=ref.f, d=target)


def band_to_external(band: AmbiguityBand) -> BandResponse:
    return BandResponse(rows=[
        BandRowResponse(g=p.g, m_low=p.m_low, m_high=p.m_high, low_task=p.low_task.value, high_task=p.high_task.value)
        for p in band.points
    ])

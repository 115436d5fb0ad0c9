import math
from collections.abc import Callable, Iterable

from app.core.exceptions import DomainError
from app.core.logger import logger
from app.models.internal import CurveMetadata, CurvePoint, Ensemble, EquivalenceCurve, Task

def normalize_grid(g_grid: Iterable[float]) -> list[float]:
    grid = sorted({float(g) for g in g_grid})
    if not grid:
        raise DomainError("fidelity grid is empty", field="g")
    if grid[-1] > 1.0:
        raise DomainError(f"fidelity {grid[-1]} exceeds 1", field="g")
    return grid

# Evaluate `required_m` on the grid. Points within `metadata.margin` of the divergence at `floor` move to
# `truncated` with an infinite marker; the reference fidelity is always kept
def sample_curve(
    task: Task,
    ref: Ensemble,
    g_grid: Iterable[float],
    required_m: Callable[[float], float],
    floor: float,
    metadata: CurveMetadata,
    clamp: bool = False,
) -> EquivalenceCurve:
    points: list[CurvePoint] = []
    truncated: list[CurvePoint] = []

    for g in normalize_grid(g_grid):
        if g <= floor + metadata.margin and g != ref.f:
            truncated.append(CurvePoint(g=g, m=math.inf, singular=True))
            continue
        m = required_m(g)
        if clamp:
            m = max(m, 1.0)
        points.append(CurvePoint(g=g, m=m))

    if truncated:
        logger.info("🟡 [sampling][sample_curve]: %s curve truncated at %s grid points near G = %.6g.", task.value, len(truncated), floor)
    logger.debug("🟢 [sampling][sample_curve]: %s curve with %s points for reference %s.", task.value, len(points), ref.label())

    return EquivalenceCurve(
        task=task,
        reference=ref,
        points=points,
        truncated=truncated,
        metadata=metadata.model_copy(update={"clamped": clamp}),
    )

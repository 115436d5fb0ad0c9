import math
from collections.abc import Iterable

from app.core.config import settings
from app.core.exceptions import DomainError, SingularityError
from app.core.logger import logger
from app.models.internal import BoundaryFlags, CurveMetadata, Ensemble, EquivalenceCurve, Region, RegionVerdict, Strength, Task
from app.services.sampling import sample_curve

def _check_qubit_fidelity(f: float, field: str, allow_pure: bool = True) -> None:
    upper_ok = f <= 1.0 if allow_pure else f < 1.0
    if f <= 0.5:
        raise SingularityError(f"{field} fidelity {f} must exceed 1/2, where (2F - 1)^2 vanishes", field=field, direction="+inf as F -> 1/2+")
    if not upper_ok:
        bound = "1]" if allow_pure else "1)"
        raise DomainError(f"{field} fidelity {f} outside (0.5, {bound}", field=field)

# Leading-order δ = (1/N)(1 - 1/d)(1 - F)/(2F - 1)²
def purification_infidelity(ens: Ensemble) -> float:
    _check_qubit_fidelity(ens.f, "f")
    if ens.n < 1:
        raise DomainError(f"copy count must be >= 1, got {ens.n}", field="n")
    return (1.0 / ens.n) * (1.0 - 1.0 / ens.d) * (1.0 - ens.f) / (2.0 * ens.f - 1.0) ** 2

# H = 1 - δ for the single purified output copy
def purified_fidelity(ens: Ensemble) -> float:
    return min(max(1.0 - purification_infidelity(ens), 0.0), 1.0)

# M = N ((2F - 1)/(2G - 1))² (1 - G)/(1 - F), the equal-δ curve through the reference
def separation_m(ref: Ensemble, g: float) -> float:
    _check_qubit_fidelity(ref.f, "ref", allow_pure=False)
    _check_qubit_fidelity(g, "g")
    if g == 1.0:
        return 0.0

    ratio = ((2.0 * ref.f - 1.0) / (2.0 * g - 1.0)) ** 2 * ((1.0 - g) / (1.0 - ref.f))
    return ref.n * ratio

def _isclose(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=settings.RELATIVE_TOLERANCE)

# Region of `other` = (M, G) around `ref` = (N, F); III/IV definitive, II/V sufficient, I/VI necessary-only unless G = 1
def classify_region(ref: Ensemble, other: Ensemble) -> RegionVerdict:
    if ref.d != other.d:
        raise DomainError(f"ensembles differ in dimension ({ref.d} vs {other.d})", field="other")

    n, f, m, g = ref.n, ref.f, other.n, other.f
    m_sep = separation_m(ref, g)

    boundary = BoundaryFlags(
        copies=_isclose(m, n),
        fidelity=_isclose(g, f),
        separation=_isclose(m, m_sep),
    )

    if boundary.fidelity or g > f:
        fidelity_up = g > f and not boundary.fidelity
        if m >= n or boundary.copies:
            region, strength, favours = Region.III, Strength.DEFINITIVE, "offer"
        elif not fidelity_up:
            region, strength, favours = Region.IV, Strength.DEFINITIVE, "reference"
        elif g == 1.0:
            # A single perfect copy already has δ = 0
            region, strength, favours = Region.VI, Strength.SUFFICIENT, "offer"
        elif m <= m_sep:
            region, strength, favours = Region.V, Strength.SUFFICIENT, "reference"
        else:
            region, strength, favours = Region.VI, Strength.NECESSARY_ONLY, "offer"
    else:
        if m <= n or boundary.copies:
            region, strength, favours = Region.IV, Strength.DEFINITIVE, "reference"
        elif m >= m_sep:
            region, strength, favours = Region.II, Strength.SUFFICIENT, "offer"
        else:
            region, strength, favours = Region.I, Strength.NECESSARY_ONLY, "reference"

    if boundary.all_set():
        strength, favours = Strength.INDETERMINATE, None
    elif boundary.separation and strength is not Strength.DEFINITIVE:
        strength = Strength.INDETERMINATE

    logger.debug("🟢 [purification][classify_region]: %s vs %s -> region %s (%s).", other.label(), ref.label(), region.value, strength.value)
    return RegionVerdict(region=region, strength=strength, boundary=boundary, separation_m=m_sep, favours=favours)

def purification_curve(ref: Ensemble, g_grid: Iterable[float], clamp: bool = False, margin: float | None = None) -> EquivalenceCurve:
    margin = settings.SINGULARITY_MARGIN if margin is None else margin
    return sample_curve(
        Task.PURIFICATION,
        ref,
        g_grid,
        lambda g: separation_m(ref, g),
        floor=0.5,
        metadata=CurveMetadata(d=ref.d, margin=margin, semantics="separation"),
        clamp=clamp,
    )

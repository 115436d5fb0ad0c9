import math
from collections.abc import Iterable

from scipy.special import entr

from app.core.config import settings
from app.core.exceptions import DomainError, SingularityError
from app.models.internal import CurveMetadata, DensityOperator, Ensemble, EquivalenceCurve, Task
from app.services.quantum_core import von_neumann_entropy
from app.services.sampling import sample_curve

# h(x) = -x log2 x - (1 - x) log2(1 - x), h(0) = h(1) = 0
def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"probability {x} outside [0, 1]", field="x")

    return float((entr(x) + entr(1.0 - x)) / math.log(2))

# I_d(ρ) = (log2 d - S(ρ)) / log2 d, pure d-level systems per copy
def nonequilibrium(rho: DensityOperator) -> float:
    log_d = math.log2(rho.d)
    return (log_d - von_neumann_entropy(rho, base=2)) / log_d

# log2(d (d-1)^(F-1)) - h(F) in bits, defined on [1/d, 1] with zero at 1/d
def nonequilibrium_closed(f: float, d: int = 2) -> float:
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}", field="d")
    if not 1.0 / d <= f <= 1.0:
        raise DomainError(f"fidelity {f} outside [1/{d}, 1]", field="f")

    value = math.log2(d) + (f - 1.0) * math.log2(d - 1) - binary_entropy(f)
    return max(value, 0.0)

def rtp_equivalent_m(ref: Ensemble, g: float) -> float:
    d = ref.d
    if g > 1.0:
        raise DomainError(f"fidelity {g} exceeds 1", field="g")
    if g <= 1.0 / d:
        raise SingularityError(f"M diverges as G -> 1/{d} from above; got G = {g}", field="g", direction=f"+inf as G -> 1/{d}+")

    resource = nonequilibrium_closed(g, d)
    if resource <= 0.0:
        raise SingularityError(f"G = {g} is numerically indistinguishable from 1/{d}", field="g", direction=f"+inf as G -> 1/{d}+")

    return ref.n * (nonequilibrium_closed(ref.f, d) / resource)

def rtp_curve(ref: Ensemble, g_grid: Iterable[float], margin: float | None = None) -> EquivalenceCurve:
    margin = settings.SINGULARITY_MARGIN if margin is None else margin
    return sample_curve(
        Task.RTP,
        ref,
        g_grid,
        lambda g: rtp_equivalent_m(ref, g),
        floor=1.0 / ref.d,
        metadata=CurveMetadata(d=ref.d, margin=margin),
    )

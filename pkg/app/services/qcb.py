import math
from collections.abc import Iterable

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, DomainError, SingularityError
from app.core.logger import logger
from app.models.internal import ChernoffOptimum, CurveMetadata, DensityOperator, DiscriminationPair, Ensemble, EquivalenceCurve, PureState, Task
from app.services.quantum_core import depolarized_state, hermitian_eig, hermitian_power, tensor_power
from app.services.sampling import sample_curve

FLAT_TOL = 1e-12
OVERLAP_TOL = 1e-15

def _check_exponent(s: float) -> None:
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"exponent {s} outside [0, 1]", field="s")

# ρ = depolarized |0>, σ = depolarized cos(θ/2)|0> + sin(θ/2)|1>
def pair_states(pair: DiscriminationPair) -> tuple[DensityOperator, DensityOperator]:
    rho = depolarized_state(PureState.basis(0), pair.f)
    sigma = depolarized_state(PureState.bloch(pair.theta), pair.f)
    return rho, sigma

# tr(ρ^s σ^(1-s)) = α² + β²(p+^s p-^(1-s) + p-^s p+^(1-s))
def chernoff_quantity_closed(pair: DiscriminationPair, s: float) -> float:
    _check_exponent(s)
    p, q = pair.p_plus, pair.p_minus
    mixed = p ** s * q ** (1 - s) + q ** s * p ** (1 - s)
    return pair.alpha ** 2 + pair.beta ** 2 * mixed

def chernoff_quantity_generic(rho: DensityOperator, sigma: DensityOperator, s: float) -> float:
    _check_exponent(s)
    if rho.d != sigma.d:
        raise DimensionMismatchError(f"rho has d={rho.d}, sigma has d={sigma.d}", field="sigma")
    product = hermitian_power(rho, s) @ hermitian_power(sigma, 1.0 - s)
    return float(np.trace(product).real)

# Closed form with the minimizer s = 1/2, natural log
def xi_qcb(pair: DiscriminationPair) -> float:
    overlap = pair.alpha ** 2 + 2 * pair.beta ** 2 * math.sqrt(pair.f * (1 - pair.f))
    # Orthogonal pure states: cos(π/2) leaves ~1e-33 of rounding in α²
    if overlap <= OVERLAP_TOL:
        return math.inf
    return -math.log(overlap)

# Grid minimization over s in [0, 1]; a flat profile returns s* = 1/2 flagged degenerate
def xi_qcb_numeric(rho: DensityOperator, sigma: DensityOperator, s_grid_size: int = 1001) -> ChernoffOptimum:
    if s_grid_size < 3:
        raise DomainError(f"grid size must be >= 3, got {s_grid_size}", field="s_grid_size")

    grid = np.linspace(0.0, 1.0, s_grid_size)
    values = np.array([chernoff_quantity_generic(rho, sigma, s) for s in grid])

    if np.ptp(values) <= FLAT_TOL:
        logger.debug("🟡 [qcb][xi_qcb_numeric]: Flat Chernoff profile, degenerate minimizer.")
        return ChernoffOptimum(s_star=0.5, xi=-math.log(float(values.min())), degenerate=True)

    if values.min() <= OVERLAP_TOL:
        logger.debug("🟡 [qcb][xi_qcb_numeric]: Perfectly distinguishable states, infinite exponent.")
        return ChernoffOptimum(s_star=0.5, xi=math.inf, degenerate=True)

    index = int(np.argmin(values))
    return ChernoffOptimum(s_star=float(grid[index]), xi=-math.log(float(values[index])))

def error_prob_estimate(n: float, pair: DiscriminationPair) -> float:
    if n < 1:
        raise DomainError(f"copy count must be >= 1, got {n}", field="n")
    return math.exp(-n * xi_qcb(pair))

# ½(1 - ½‖ρ⊗ⁿ - σ⊗ⁿ‖₁) for equal priors
def helstrom_exact(pair: DiscriminationPair, n: int, cap: int | None = None) -> float:
    rho, sigma = pair_states(pair)
    difference = tensor_power(rho, n, cap=cap).matrix - tensor_power(sigma, n, cap=cap).matrix
    trace_norm = float(np.sum(np.abs(hermitian_eig(difference)[0])))
    return min(max(0.5 * (1.0 - 0.5 * trace_norm), 0.0), 0.5)

def _log_overlap(theta: float, f: float) -> float:
    return -xi_qcb(DiscriminationPair(theta=theta, f=f))

def qcb_equivalent_m(ref: Ensemble, g: float, theta: float | None = None) -> float:
    theta = settings.DEFAULT_THETA if theta is None else theta
    if ref.d != 2:
        raise DomainError(f"hypothesis testing equivalence is defined for qubits, got d={ref.d}", field="d")
    if not 0.0 < theta <= math.pi:
        raise DomainError(f"separation angle {theta} outside (0, pi]; theta = 0 is the degenerate case", field="theta")
    if not 0.5 < ref.f <= 1.0:
        raise DomainError(f"reference fidelity {ref.f} outside (0.5, 1]", field="ref")
    if g > 1.0:
        raise DomainError(f"fidelity {g} exceeds 1", field="g")
    if g <= 0.5:
        raise SingularityError(f"M diverges as G -> 1/2 from above; got G = {g}", field="g", direction="+inf as G -> 1/2+")

    numerator, denominator = _log_overlap(theta, ref.f), _log_overlap(theta, g)
    if denominator >= 0.0:
        raise SingularityError(f"G = {g} is numerically indistinguishable from 1/2", field="g", direction="+inf as G -> 1/2+")

    # Infinite exponents: perfect copies of orthogonal states
    if math.isinf(numerator) and math.isinf(denominator):
        return ref.n
    if math.isinf(numerator):
        raise SingularityError(f"reference {ref.label()} discriminates perfectly at theta = {theta}; no finite M at G = {g}", field="ref", direction="+inf")
    return ref.n * (numerator / denominator)

def qcb_curve(ref: Ensemble, g_grid: Iterable[float], theta: float | None = None, margin: float | None = None) -> EquivalenceCurve:
    theta = settings.DEFAULT_THETA if theta is None else theta
    margin = settings.SINGULARITY_MARGIN if margin is None else margin
    return sample_curve(
        Task.QCB,
        ref,
        g_grid,
        lambda g: qcb_equivalent_m(ref, g, theta),
        floor=0.5,
        metadata=CurveMetadata(d=2, theta=theta, margin=margin),
    )

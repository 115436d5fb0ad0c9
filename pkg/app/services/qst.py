import math
from collections.abc import Iterable

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError, SingularityError
from app.models.internal import CurveMetadata, DensityOperator, Ensemble, EquivalenceCurve, PureState, Qfim2x2, Task
from app.services.quantum_core import depolarized_state, hermitian_eig
from app.services.sampling import sample_curve

POLE_CLEARANCE = 10

def _check_qubit(ens: Ensemble, field: str) -> None:
    if ens.d != 2:
        raise DomainError(f"state estimation bounds are defined for qubits, got d={ens.d}", field=field)

def _check_fidelity(f: float, field: str = "f") -> None:
    if f > 1.0:
        raise DomainError(f"fidelity {f} exceeds 1", field=field)
    if f <= 0.5:
        raise SingularityError(f"fidelity {f} must exceed 1/2", field=field, direction="+inf as F -> 1/2+")

# diag(λ², λ² sin²θ) with λ = 2F - 1
def qfim_closed(theta: float, f: float) -> Qfim2x2:
    _check_fidelity(f)
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"polar angle {theta} outside [0, pi]", field="theta")

    lam_sq = (2.0 * f - 1.0) ** 2
    return Qfim2x2(matrix=np.diag([lam_sq, lam_sq * math.sin(theta) ** 2]), theta=theta, f=f)

def _bloch_rho(theta: float, phi: float, f: float) -> np.ndarray:
    return depolarized_state(PureState.bloch(theta, phi), f).matrix

# Solve dρ = (ρL + Lρ)/2 in the eigenbasis of a full-rank ρ
def symmetric_log_derivative(rho: DensityOperator | np.ndarray, drho: np.ndarray) -> np.ndarray:
    values, vectors = hermitian_eig(rho)
    if values[0] <= 0.0:
        raise DomainError("SLD is not unique for a rank-deficient state", field="f")

    drho_eig = vectors.conj().T @ drho @ vectors
    sld_eig = 2.0 * drho_eig / (values[:, None] + values[None, :])
    return vectors @ sld_eig @ vectors.conj().T

# Central-difference QFIM in (θ, φ), ½ tr(ρ{L_a, L_b}); mixed states only, away from the poles
def qfim_numeric(theta: float, phi: float, f: float, step: float | None = None) -> Qfim2x2:
    step = settings.FD_STEP if step is None else step
    if not 0.5 < f < 1.0:
        raise DomainError(f"numeric QFIM needs a full-rank state, fidelity {f} outside (0.5, 1)", field="f")
    if not POLE_CLEARANCE * step <= theta <= math.pi - POLE_CLEARANCE * step:
        raise DomainError(f"polar angle {theta} too close to a pole for step {step}", field="theta")

    rho = _bloch_rho(theta, phi, f)
    derivatives = [
        (_bloch_rho(theta + step, phi, f) - _bloch_rho(theta - step, phi, f)) / (2 * step),
        (_bloch_rho(theta, phi + step, f) - _bloch_rho(theta, phi - step, f)) / (2 * step),
    ]
    slds = [symmetric_log_derivative(rho, drho) for drho in derivatives]

    matrix = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            anticommutator = slds[a] @ slds[b] + slds[b] @ slds[a]
            matrix[a, b] = 0.5 * np.trace(rho @ anticommutator).real
    return Qfim2x2(matrix=matrix, theta=theta, f=f)

# Mean squared Bures distance floor 1/(4N(2F - 1)²)
def gill_massar_bound(ens: Ensemble) -> float:
    _check_qubit(ens, "ens")
    _check_fidelity(ens.f)
    if ens.n < 1:
        raise DomainError(f"copy count must be >= 1, got {ens.n}", field="n")
    return 1.0 / (4.0 * ens.n * (2.0 * ens.f - 1.0) ** 2)

# tr(g_pure 𝓕⁻¹)/N, which is 1/(2Nλ²) for sin θ ≠ 0
def gill_massar_from_qfim(ens: Ensemble, theta: float = math.pi / 2) -> float:
    qfim = qfim_closed(theta, ens.f)
    if abs(math.sin(theta)) < 1e-12:
        raise DomainError("azimuth is unidentifiable at the poles; the QFIM is singular", field="theta")
    return float(np.trace(qfim.bures_metric_pure() @ np.linalg.inv(qfim.matrix))) / ens.n

# M = N ((2F - 1)/(2G - 1))²
def qst_equivalent_m(ref: Ensemble, g: float) -> float:
    _check_qubit(ref, "ref")
    _check_fidelity(ref.f, field="ref")
    _check_fidelity(g, field="g")
    return ref.n * ((2.0 * ref.f - 1.0) / (2.0 * g - 1.0)) ** 2

def qst_curve(ref: Ensemble, g_grid: Iterable[float], margin: float | None = None) -> EquivalenceCurve:
    margin = settings.SINGULARITY_MARGIN if margin is None else margin
    return sample_curve(
        Task.QST,
        ref,
        g_grid,
        lambda g: qst_equivalent_m(ref, g),
        floor=0.5,
        metadata=CurveMetadata(d=2, margin=margin),
    )

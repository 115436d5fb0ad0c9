import math
from functools import reduce

import numpy as np
from scipy import linalg
from scipy.special import entr

from app.core.config import settings
from app.core.exceptions import DimensionCapError, DimensionMismatchError, DomainError, NonPhysicalStateError
from app.core.logger import logger
from app.models.internal import PSD_TOL, DensityOperator, PureState

HERMITIAN_INPUT_TOL = 1e-10

def _as_matrix(rho: DensityOperator | np.ndarray) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)

# Clamp eigenvalues at the numerical floor, reject real negativity
def _clamped_spectrum(values: np.ndarray, caller: str) -> np.ndarray:
    lowest = float(values[0])
    if lowest < -PSD_TOL:
        logger.error("🔴 [quantum_core][%s]: Eigenvalue %s below tolerance.", caller, lowest)
        raise NonPhysicalStateError(f"{caller}: eigenvalue {lowest!r} is below -{PSD_TOL}", field="rho")
    return np.clip(values, 0.0, None)

# ρ = λ|ψ><ψ| + (1 - λ) I/d with λ = (dF - 1)/(d - 1)
def depolarized_state(psi: PureState, f: float) -> DensityOperator:
    d = psi.d
    if not 1.0 / d < f <= 1.0:
        raise DomainError(f"fidelity {f} outside (1/{d}, 1]", field="f")

    lam = (d * f - 1.0) / (d - 1.0)
    matrix = lam * psi.projector() + (1.0 - lam) * np.eye(d) / d
    return DensityOperator(matrix=matrix)

# Normalized vector of i.i.d. standard complex Gaussians
def haar_random_pure(d: int, rng: np.random.Generator) -> PureState:
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}", field="d")

    amplitudes = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(amplitudes=amplitudes / np.linalg.norm(amplitudes))

def hermitian_eig(rho: DensityOperator | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    matrix = _as_matrix(rho)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}", field="rho")
    if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_INPUT_TOL:
        raise DomainError("matrix is not Hermitian", field="rho")

    values, vectors = linalg.eigh(matrix)
    return values, vectors

def von_neumann_entropy(rho: DensityOperator, base: float = 2.0) -> float:
    values = _clamped_spectrum(hermitian_eig(rho)[0], "von_neumann_entropy")
    # entr(x) = -x ln x with entr(0) = 0
    return float(np.sum(entr(values)) / math.log(base))

def fidelity_with_pure(psi: PureState, rho: DensityOperator) -> float:
    if psi.d != rho.d:
        raise DimensionMismatchError(f"state has d={psi.d}, density operator has d={rho.d}", field="rho")
    return float(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes).real)

# D_B² = 2(1 - sqrt|<a|b>|²) for pure states
def bures_distance_sq(a: PureState, b: PureState) -> float:
    if a.d != b.d:
        raise DimensionMismatchError(f"states have d={a.d} and d={b.d}", field="b")
    overlap_sq = min(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, 1.0)
    return 2.0 * (1.0 - math.sqrt(overlap_sq))

# ρ^s on the clamped spectrum; 0^0 = 1, so ρ^0 is the identity
def hermitian_power(rho: DensityOperator | np.ndarray, s: float) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"exponent {s} outside [0, 1]", field="s")

    values, vectors = hermitian_eig(rho)
    values = _clamped_spectrum(values, "hermitian_power")
    return (vectors * np.power(values, s)) @ vectors.conj().T

def tensor_power(rho: DensityOperator, n: int, cap: int | None = None) -> DensityOperator:
    cap = settings.TENSOR_DIM_CAP if cap is None else cap
    if n < 1:
        raise DomainError(f"tensor power needs n >= 1, got {n}", field="n")
    if rho.d ** n > cap:
        raise DimensionCapError(f"dimension {rho.d}^{n} = {rho.d ** n} exceeds cap {cap}", field="n")

    matrix = reduce(np.kron, [rho.matrix] * n)
    return DensityOperator(matrix=matrix)

import math
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError
from app.core.logger import logger
from app.models.internal import (
    Basis,
    BasisCounts,
    CurveMetadata,
    CurvePoint,
    DensityOperator,
    Ensemble,
    EquivalenceCurve,
    MitigatedState,
    PureState,
    SimConfig,
    SimGrid,
    Task,
    TrialResult,
)
from app.services.quantum_core import bures_distance_sq, depolarized_state, haar_random_pure, hermitian_eig

PAULI = {
    Basis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Basis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Basis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}
BASIS_ORDER = (Basis.X, Basis.Y, Basis.Z)
DEGENERACY_TOL = 1e-12

def bloch_component(rho: DensityOperator, basis: Basis) -> float:
    return float(np.trace(rho.matrix @ PAULI[basis]).real)

# Projective ±1 measurement of one Pauli observable, n+ ~ Binomial(shots, (1 + r)/2)
def measure_pauli_counts(rho: DensityOperator, basis: Basis, shots: int, rng: np.random.Generator) -> BasisCounts:
    if rho.d != 2:
        raise DomainError(f"Pauli tomography is defined for qubits, got d={rho.d}", field="rho")
    if shots < 0:
        raise DomainError(f"shot count must be >= 0, got {shots}", field="shots")

    p_plus = min(max((1.0 + bloch_component(rho, basis)) / 2.0, 0.0), 1.0)
    n_plus = int(rng.binomial(shots, p_plus))
    return BasisCounts(basis=basis, n_plus=n_plus, n_minus=shots - n_plus)

# n = 3q + r, remainder goes to Z first, then X
def split_shots(n: int) -> dict[Basis, int]:
    q, r = divmod(int(n), 3)
    return {
        Basis.X: q + (1 if r >= 2 else 0),
        Basis.Y: q,
        Basis.Z: q + (1 if r >= 1 else 0),
    }

# ρ̂ = ½(I + r̂·σ), not projected onto the state space
def linear_inversion(counts: Iterable[BasisCounts]) -> DensityOperator:
    by_basis = {c.basis: c for c in counts}
    matrix = np.eye(2, dtype=complex)
    for basis in BASIS_ORDER:
        c = by_basis.get(basis)
        if c is None or c.shots == 0:
            raise DomainError(f"basis {basis.value} has no shots", field="counts")
        matrix = matrix + ((c.n_plus - c.n_minus) / c.shots) * PAULI[basis]
    return DensityOperator(matrix=0.5 * matrix, physical=False)

# Top eigenvector of the estimate; ties go to the first tied column of the solver
def mitigate_to_pure(rho_hat: DensityOperator) -> MitigatedState:
    values, vectors = hermitian_eig(rho_hat)
    tied = np.flatnonzero(values >= values[-1] - DEGENERACY_TOL)
    degenerate = tied.size > 1
    if degenerate:
        logger.debug("🟡 [tomography][mitigate_to_pure]: Degenerate top eigenvalue %s.", values[-1])

    top = vectors[:, int(tied[0])]
    return MitigatedState(state=PureState(amplitudes=top / np.linalg.norm(top)), degenerate=degenerate)

def run_trial(psi: PureState, n: int, f: float, rng: np.random.Generator) -> TrialResult:
    if n < 3:
        raise DomainError(f"need at least one shot per basis (n >= 3), got {n}", field="n")

    rho = depolarized_state(psi, f)
    counts = [measure_pauli_counts(rho, basis, shots, rng) for basis, shots in split_shots(n).items()]
    estimate = mitigate_to_pure(linear_inversion(counts))

    overlap_sq = min(abs(np.vdot(psi.amplitudes, estimate.state.amplitudes)) ** 2, 1.0)
    return TrialResult(
        infidelity=1.0 - overlap_sq,
        bures_sq=bures_distance_sq(psi, estimate.state),
        degenerate=estimate.degenerate,
    )

# Counter-based stream for trial i at grid cell (j, k)
def trial_rng(master_seed: int, j: int, k: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(j, k, i)))

def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))

def _simulate_cell(config: SimConfig, j: int, k: int) -> tuple[float, float, float, float, int]:
    n, g = config.n_grid[j], config.g_grid[k]
    infidelity = np.empty(config.trials)
    bures_sq = np.empty(config.trials)
    degenerate = 0

    for i in range(config.trials):
        rng = trial_rng(config.master_seed, j, k, i)
        result = run_trial(haar_random_pure(2, rng), n, g, rng)
        infidelity[i] = result.infidelity
        bures_sq[i] = result.bures_sq
        degenerate += int(result.degenerate)

    logger.debug("🟢 [tomography][_simulate_cell]: Cell (n=%s, g=%s) done, %s degenerate trials.", n, g, degenerate)
    return float(np.mean(infidelity)), float(np.mean(bures_sq)), _stderr(infidelity), _stderr(bures_sq), degenerate

# Cells run their trials serially in a fixed order; output does not depend on `threads`
def simulate_grid(config: SimConfig, threads: int | None = None) -> SimGrid:
    threads = settings.SIM_THREADS if threads is None else threads
    if threads < 1:
        raise DomainError(f"thread count must be >= 1, got {threads}", field="threads")

    shape = (len(config.n_grid), len(config.g_grid))
    logger.info("⚪ [tomography][simulate_grid]: Simulating %sx%s grid, %s trials per cell, seed %s, %s threads.", shape[0], shape[1], config.trials, config.master_seed, threads)

    columns = {name: np.zeros(shape) for name in ("mean_infidelity", "mean_bures_sq", "stderr", "stderr_bures_sq")}
    degenerate = np.zeros(shape, dtype=int)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {
            (j, k): pool.submit(_simulate_cell, config, j, k)
            for j in range(shape[0])
            for k in range(shape[1])
        }
        for (j, k), future in futures.items():
            cell = future.result()
            for name, value in zip(columns, cell[:4]):
                columns[name][j, k] = value
            degenerate[j, k] = cell[4]

    logger.info("🟢 [tomography][simulate_grid]: Grid complete, %s degenerate trials in total.", int(degenerate.sum()))
    return SimGrid(
        n_grid=list(config.n_grid),
        g_grid=list(config.g_grid),
        trials=config.trials,
        master_seed=config.master_seed,
        degenerate=degenerate,
        **columns,
    )

def _crossing(log_n: np.ndarray, n_values: np.ndarray, column: np.ndarray, level: float) -> float | None:
    # Column is non-increasing in n; find where it meets `level`
    if level > column[0] or level < column[-1]:
        return None
    hits = np.flatnonzero(column == level)
    if hits.size:
        return float(n_values[hits[0]])
    return float(np.exp(np.interp(level, column[::-1], log_n[::-1])))

# Level set through the reference in (log n, log error); columns that never reach it become gaps
def extract_contour(grid: SimGrid, ref: Ensemble, metric: str = "infidelity") -> EquivalenceCurve:
    n_order = np.argsort(grid.n_grid, kind="stable")
    g_order = np.argsort(grid.g_grid, kind="stable")
    n_values = np.asarray(grid.n_grid, dtype=float)[n_order]
    g_values = np.asarray(grid.g_grid, dtype=float)[g_order]
    values = grid.metric(metric)[np.ix_(n_order, g_order)]

    if not (n_values[0] <= ref.n <= n_values[-1] and g_values[0] <= ref.f <= g_values[-1]):
        raise DomainError(f"reference {ref.label()} lies outside the simulated grid", field="ref")

    use_log = bool(np.all(values > 0.0))
    surface = np.log(values) if use_log else values
    log_n = np.log(n_values)

    # Bilinear reference level: along g per row, then along log n
    row_levels = np.array([np.interp(ref.f, g_values, row) for row in surface])
    level = float(np.interp(np.log(ref.n), log_n, row_levels))

    points: list[CurvePoint] = []
    gaps: list[float] = []
    for k, g in enumerate(g_values):
        column = np.minimum.accumulate(surface[:, k])
        m = _crossing(log_n, n_values, column, level)
        if m is None:
            gaps.append(float(g))
        else:
            points.append(CurvePoint(g=float(g), m=m))

    if gaps:
        logger.info("🟡 [tomography][extract_contour]: Level not reached in %s columns, marked as gaps.", len(gaps))

    return EquivalenceCurve(
        task=Task.SIMULATED,
        reference=ref,
        points=points,
        gaps=gaps,
        metadata=CurveMetadata(d=2, semantics="simulated", metric=metric),
    )

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.core.exceptions import DomainError
from app.core.storage import read_grid, write_grid
from app.models.internal import Basis, BasisCounts, DensityOperator, Ensemble, PureState, SimConfig, SimGrid, Task
from app.services.qst import gill_massar_bound, qst_equivalent_m
from app.services.quantum_core import depolarized_state, haar_random_pure, hermitian_eig
from app.services.tomography import (
    PAULI,
    extract_contour,
    linear_inversion,
    measure_pauli_counts,
    mitigate_to_pure,
    run_trial,
    simulate_grid,
    split_shots,
    trial_rng,
)

ZERO = PureState.basis(0)


def counts_for(r: tuple[float, float, float], shots: int = 1000) -> list[BasisCounts]:
    counts = []
    for basis, component in zip((Basis.X, Basis.Y, Basis.Z), r):
        n_plus = round(shots * (1 + component) / 2)
        counts.append(BasisCounts(basis=basis, n_plus=n_plus, n_minus=shots - n_plus))
    return counts


def synthetic_grid(n_grid: list[int], g_grid: list[float], c: float = 1.0) -> SimGrid:
    n = np.asarray(n_grid, dtype=float)[:, None]
    g = np.asarray(g_grid, dtype=float)[None, :]
    values = c / (n * (2 * g - 1) ** 2)
    zeros = np.zeros(values.shape)
    return SimGrid(
        n_grid=n_grid,
        g_grid=g_grid,
        trials=1,
        mean_infidelity=values,
        mean_bures_sq=values,
        stderr=zeros,
        stderr_bures_sq=zeros,
        degenerate=zeros.astype(int),
    )


def test_measurement_of_eigenstate_is_deterministic(rng):
    rho = DensityOperator(matrix=ZERO.projector())
    counts = measure_pauli_counts(rho, Basis.Z, 500, rng)
    assert (counts.n_plus, counts.n_minus) == (500, 0)


def test_measurement_frequencies(rng):
    mixed = DensityOperator(matrix=np.eye(2) / 2)
    x = measure_pauli_counts(mixed, Basis.X, 100_000, rng)
    assert x.n_plus / x.shots == pytest.approx(0.5, abs=0.005)

    z = measure_pauli_counts(depolarized_state(ZERO, 0.75), Basis.Z, 100_000, rng)
    assert z.n_plus / z.shots == pytest.approx(0.75, abs=0.004)


def test_measurement_domain(rng):
    with pytest.raises(DomainError):
        measure_pauli_counts(DensityOperator(matrix=np.eye(3) / 3), Basis.Z, 10, rng)
    with pytest.raises(DomainError):
        measure_pauli_counts(DensityOperator(matrix=np.eye(2) / 2), Basis.Z, -1, rng)


@pytest.mark.parametrize(
    "n, expected",
    [(9, (3, 3, 3)), (10, (3, 3, 4)), (11, (4, 3, 4)), (3, (1, 1, 1))],
)
def test_shot_split(n, expected):
    split = split_shots(n)
    assert (split[Basis.X], split[Basis.Y], split[Basis.Z]) == expected
    assert sum(split.values()) == n


def test_linear_inversion_examples():
    assert_allclose(linear_inversion(counts_for((0, 0, 1))).matrix, ZERO.projector(), atol=1e-15)
    assert_allclose(linear_inversion(counts_for((0, 0, 0))).matrix, np.eye(2) / 2, atol=1e-15)

    outside = linear_inversion(counts_for((1, 1, 1)))
    assert not outside.physical
    bloch = [np.trace(outside.matrix @ PAULI[b]).real for b in (Basis.X, Basis.Y, Basis.Z)]
    assert np.linalg.norm(bloch) == pytest.approx(math.sqrt(3))


def test_linear_inversion_needs_every_basis():
    with pytest.raises(DomainError):
        linear_inversion(counts_for((0, 0, 1))[:2])


def test_mitigation_examples():
    top = mitigate_to_pure(DensityOperator(matrix=np.diag([0.75, 0.25])))
    assert abs(top.state.amplitudes[0]) == pytest.approx(1.0)
    assert not top.degenerate

    plus = 0.5 * (np.eye(2) + 0.9 * PAULI[Basis.X])
    state = mitigate_to_pure(DensityOperator(matrix=plus)).state
    assert abs(np.vdot([1 / math.sqrt(2), 1 / math.sqrt(2)], state.amplitudes)) ** 2 == pytest.approx(1.0)


def test_mitigation_tie_takes_first_column():
    mixed = DensityOperator(matrix=np.eye(2) / 2)
    result = mitigate_to_pure(mixed)
    assert result.degenerate
    assert_allclose(result.state.amplitudes, hermitian_eig(mixed)[1][:, 0])


# (ρ̂ + cI)/(1 + 2c) shares its eigenvectors and their order with ρ̂
@pytest.mark.parametrize("c", [0.05, 1.0, 20.0])
@pytest.mark.parametrize("r", [(0.6, -0.8, 0.7), (0.1, 0.2, -0.3), (0.0, 0.0, 0.9)])
def test_mitigation_ignores_identity_shift(r, c):
    estimate = linear_inversion(counts_for(r))
    shifted = DensityOperator(matrix=(estimate.matrix + c * np.eye(2)) / (1.0 + 2.0 * c), physical=False)
    base, moved = mitigate_to_pure(estimate), mitigate_to_pure(shifted)
    assert not base.degenerate and not moved.degenerate
    assert abs(np.vdot(base.state.amplitudes, moved.state.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_trial_is_deterministic():
    psi = PureState.bloch(0.7, 1.9)
    first = run_trial(psi, 300, 0.8, trial_rng(5, 0, 0, 0))
    second = run_trial(psi, 300, 0.8, trial_rng(5, 0, 0, 0))
    assert first == second


def test_trial_needs_a_shot_per_basis(rng):
    with pytest.raises(DomainError):
        run_trial(ZERO, 2, 0.9, rng)


def test_many_shots_on_pure_copies(rng):
    psi = haar_random_pure(2, rng)
    assert run_trial(psi, 3_000_000, 1.0, rng).infidelity <= 1e-4


def test_single_cell_grid_reproduces_one_trial():
    grid = simulate_grid(SimConfig(n_grid=[100], g_grid=[0.75], trials=1, master_seed=9))
    rng = trial_rng(9, 0, 0, 0)
    expected = run_trial(haar_random_pure(2, rng), 100, 0.75, rng)
    assert grid.mean_infidelity[0, 0] == expected.infidelity
    assert grid.mean_bures_sq[0, 0] == expected.bures_sq
    assert grid.stderr[0, 0] == 0.0


def test_grid_independent_of_threads():
    config = SimConfig(n_grid=[30, 300], g_grid=[0.7, 0.9, 1.0], trials=20, master_seed=3)
    serial = simulate_grid(config, threads=1)
    pooled = simulate_grid(config, threads=4)
    assert_array_equal(serial.mean_infidelity, pooled.mean_infidelity)
    assert_array_equal(serial.stderr_bures_sq, pooled.stderr_bures_sq)
    assert_array_equal(serial.degenerate, pooled.degenerate)


def test_grid_rejects_bad_thread_count():
    with pytest.raises(DomainError):
        simulate_grid(SimConfig(n_grid=[30], g_grid=[0.9], trials=1), threads=0)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_grid=[2], g_grid=[0.9])
    with pytest.raises(ValueError):
        SimConfig(n_grid=[10], g_grid=[0.5])
    with pytest.raises(ValueError):
        SimConfig(n_grid=[10], g_grid=[0.9], master_seed=-1)


@pytest.mark.slow
def test_bures_error_sits_above_collective_floor():
    grid = simulate_grid(SimConfig(n_grid=[1000], g_grid=[0.75], trials=300, master_seed=42))
    assert grid.mean_bures_sq[0, 0] >= 0.9 * gill_massar_bound(Ensemble(n=1000, f=0.75))


@pytest.mark.slow
def test_infidelity_scales_inversely_with_copies():
    grid = simulate_grid(SimConfig(n_grid=[100, 1000, 10000], g_grid=[1.0], trials=500, master_seed=1))
    slope = np.polyfit(np.log([100, 1000, 10000]), np.log(grid.mean_infidelity[:, 0]), 1)[0]
    assert -1.15 <= slope <= -0.85
    assert grid.mean_infidelity[1, 0] / grid.mean_infidelity[2, 0] == pytest.approx(10, rel=0.35)


@pytest.mark.slow
def test_simulated_contour_tracks_analytic_curve():
    n_grid = np.unique(np.round(np.geomspace(100, 10000, 9)).astype(int)).tolist()
    g_grid = [0.65, 0.75, 0.85, 1.0]
    grid = simulate_grid(SimConfig(n_grid=n_grid, g_grid=g_grid, trials=300, master_seed=42), threads=4)
    ref = Ensemble(n=1000, f=0.75)
    curve = extract_contour(grid, ref)

    assert curve.m_at(0.75) == pytest.approx(1000, rel=0.05)
    values = curve.m_values()
    assert np.all(np.diff(values) < 0)
    for point in curve.points:
        assert 0.5 < point.m / qst_equivalent_m(ref, point.g) < 2.0


def test_contour_of_exact_inverse_law():
    n_grid = np.round(np.geomspace(100, 10000, 5)).astype(int).tolist()
    ref = Ensemble(n=1000, f=0.75)
    curve = extract_contour(synthetic_grid(n_grid, [0.65, 0.75, 0.9, 1.0], c=0.3), ref)

    assert curve.task is Task.SIMULATED
    assert curve.metadata.semantics == "simulated"
    assert not curve.gaps
    for point in curve.points:
        assert point.m == pytest.approx(qst_equivalent_m(ref, point.g), rel=1e-9)
    assert curve.m_at(0.75) == pytest.approx(1000, rel=1e-12)


def test_contour_marks_unreachable_columns():
    n_grid = [100, 1000, 10000]
    curve = extract_contour(synthetic_grid(n_grid, [0.55, 0.75, 1.0]), Ensemble(n=1000, f=0.75))
    assert curve.gaps == [0.55]
    assert curve.g_values().tolist() == [0.75, 1.0]


def test_contour_single_column():
    curve = extract_contour(synthetic_grid([100, 1000, 10000], [0.75]), Ensemble(n=1000, f=0.75))
    assert len(curve.points) == 1
    assert curve.points[0].m == pytest.approx(1000, rel=1e-12)


def test_contour_ignores_non_monotone_noise():
    grid = synthetic_grid([100, 300, 1000, 3000, 10000], [0.75, 0.9])
    bumped = grid.mean_infidelity.copy()
    bumped[3, 1] = bumped[2, 1] * 1.2
    grid = grid.model_copy(update={"mean_infidelity": bumped})
    curve = extract_contour(grid, Ensemble(n=1000, f=0.75))
    assert len(curve.points) == 2


def test_contour_rejects_reference_outside_grid():
    with pytest.raises(DomainError):
        extract_contour(synthetic_grid([100, 1000], [0.7, 0.9]), Ensemble(n=50, f=0.8))
    with pytest.raises(DomainError):
        extract_contour(synthetic_grid([100, 1000], [0.7, 0.9]), Ensemble(n=500, f=0.95))


def test_contour_on_bures_metric():
    grid = synthetic_grid([100, 1000, 10000], [0.75, 1.0])
    curve = extract_contour(grid, Ensemble(n=1000, f=0.75), metric="bures_sq")
    assert curve.metadata.metric == "bures_sq"
    assert curve.m_at(1.0) == pytest.approx(250, rel=1e-9)


def test_reread_grid_gives_identical_contour(tmp_path):
    grid = simulate_grid(SimConfig(n_grid=[30, 100, 300], g_grid=[0.7, 0.8, 0.95], trials=15, master_seed=8))
    path = write_grid(tmp_path / "grid.csv", grid, "simulate", {"seed": 8})
    reread = read_grid(path)
    ref = Ensemble(n=100, f=0.8)

    assert reread.master_seed == 8
    assert_array_equal(reread.mean_infidelity, grid.mean_infidelity)
    assert extract_contour(reread, ref) == extract_contour(grid, ref)

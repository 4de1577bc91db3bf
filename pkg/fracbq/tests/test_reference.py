import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracbq.errors import DivergenceFreeError
from fracbq.reference import etd_reference_solve
from fracbq.operators import heat_propagate
from fracbq.solver import SolverConfig, duhamel, picard_solve
from fracbq.spectral import ScalarField, VectorField, curl_field, make_grid
from fracbq.trajectory import Trajectory, graded_times

CONFIG = SolverConfig(n=16, nt=16)
GRID = CONFIG.grid
TIMES = CONFIG.times
X, Y = GRID.coordinates


def _relative_l2(first: np.ndarray, second: np.ndarray) -> float:
    return float(np.linalg.norm(first - second) / np.linalg.norm(second))


def test_reference_matches_the_fixed_point_solution() -> None:
    velocity = curl_field(ScalarField(GRID, np.sin(X) * np.sin(Y)))
    u0 = velocity * (1e-3 / float(np.max(velocity.magnitude())))
    theta0 = ScalarField(GRID, 1e-3 * np.cos(X + Y))
    f = Trajectory.zeros(GRID, TIMES, vector=True)
    g = Trajectory.zeros(GRID, TIMES, vector=False)

    state, _ = picard_solve(u0, theta0, f, g, CONFIG)
    reference = etd_reference_solve(u0, theta0, f, g, CONFIG)

    assert _relative_l2(reference.velocity.final.samples, state.velocity.final.samples) < 1e-4
    assert _relative_l2(reference.temperature.final.samples, state.temperature.final.samples) < 1e-4


def test_reference_of_zero_data() -> None:
    u0 = VectorField(GRID, np.zeros((2,) + GRID.shape))
    theta0 = ScalarField(GRID, np.zeros(GRID.shape))
    f = Trajectory.zeros(GRID, TIMES, vector=True)
    g = Trajectory.zeros(GRID, TIMES, vector=False)

    state = etd_reference_solve(u0, theta0, f, g, CONFIG)

    assert_allclose(state.velocity.values, 0.0)
    assert_allclose(state.times, TIMES)


def test_reference_checks_the_initial_velocity() -> None:
    u0 = VectorField(GRID, np.stack([np.cos(X), np.zeros(GRID.shape)]))
    theta0 = ScalarField(GRID, np.zeros(GRID.shape))
    f = Trajectory.zeros(GRID, TIMES, vector=True)
    g = Trajectory.zeros(GRID, TIMES, vector=False)

    with pytest.raises(DivergenceFreeError):
        etd_reference_solve(u0, theta0, f, g, CONFIG)


def test_duhamel_quadrature_is_second_order() -> None:
    grid = make_grid(2, 8, 2 * math.pi)
    x, _ = grid.coordinates
    exact = (math.sin(3.0) - 3 * math.cos(3.0) + 3 * math.exp(-1.0)) / 10

    errors = []
    for nt in (33, 65):
        times = graded_times(1.0, nt, grading=0.0)
        source = Trajectory.separable(ScalarField(grid, np.cos(x)), times, lambda t: np.sin(3 * t))
        errors.append(abs(duhamel(source, 1.5).final.samples[0, 0] - exact))

    assert math.log2(errors[0] / errors[1]) >= 1.9


def test_reference_is_second_order_in_time() -> None:
    stream = ScalarField(GRID, np.sin(X) * np.sin(Y) + 0.5 * np.cos(2 * X + Y))
    velocity = curl_field(stream)
    u0 = velocity * (0.5 / float(np.max(velocity.magnitude())))
    theta0 = ScalarField(GRID, 0.5 * np.cos(X + Y) + 0.25 * np.sin(2 * X))

    finals = []
    for nt in (33, 65, 129):
        config = SolverConfig(n=16, nt=nt, grading=0.0)
        times = config.times
        f = Trajectory.zeros(GRID, times, vector=True)
        g = Trajectory.zeros(GRID, times, vector=False)
        state = etd_reference_solve(u0, theta0, f, g, config)
        finals.append(np.concatenate([state.velocity.final.samples.ravel(), state.temperature.final.samples.ravel()]))

    coarse = float(np.linalg.norm(finals[0] - finals[1]))
    fine = float(np.linalg.norm(finals[1] - finals[2]))
    assert math.log2(coarse / fine) >= 1.9


def test_reference_without_coupling_is_the_heat_flow() -> None:
    config = SolverConfig(n=16, nt=16, nonlinear=False, buoyancy=False)
    u0 = curl_field(ScalarField(GRID, np.sin(X) * np.cos(2 * Y) + np.cos(3 * X + Y)))
    theta0 = ScalarField(GRID, np.cos(X + Y) + np.sin(3 * Y))
    f = Trajectory.zeros(GRID, TIMES, vector=True)
    g = Trajectory.zeros(GRID, TIMES, vector=False)

    state = etd_reference_solve(u0, theta0, f, g, config)

    for index in (1, len(TIMES) // 2, len(TIMES) - 1):
        t = float(TIMES[index])
        assert_allclose(state.velocity.snapshot(index).samples, heat_propagate(u0, t, 1.5).samples, atol=1e-12)
        assert_allclose(state.temperature.snapshot(index).samples, heat_propagate(theta0, t, 1.5).samples, atol=1e-12)

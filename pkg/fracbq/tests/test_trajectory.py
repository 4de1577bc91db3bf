import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracbq.errors import GridError
from fracbq.spectral import ScalarField, VectorField, make_grid
from fracbq.trajectory import Trajectory, graded_times

GRID = make_grid(2, 8, 2 * math.pi)


def test_graded_times_cluster_toward_zero() -> None:
    times = graded_times(2.0, 16, grading=3.0)

    assert times[0] == 0.0
    assert times[-1] == 2.0
    steps = np.diff(times)
    assert np.all(steps > 0)
    assert np.all(np.diff(steps) > 0)


def test_refined_grid_keeps_original_nodes() -> None:
    coarse = graded_times(1.0, 9, grading=2.0)
    fine = graded_times(1.0, 17, grading=2.0)

    assert_allclose(fine[::2], coarse, rtol=1e-14, atol=1e-15)


def test_uniform_grid() -> None:
    assert_allclose(graded_times(1.0, 8, grading=0.0), np.linspace(0.0, 1.0, 8))


@pytest.mark.parametrize("T, nt", [(0.0, 16), (1.0, 4)])
def test_graded_times_rejects(T: float, nt: int) -> None:
    with pytest.raises(GridError):
        graded_times(T, nt)


def test_trajectory_validation() -> None:
    times = np.linspace(0.0, 1.0, 8)

    with pytest.raises(GridError, match="strictly increasing"):
        Trajectory(GRID, times[::-1], np.zeros((8,) + GRID.shape))
    with pytest.raises(GridError, match="do not fit"):
        Trajectory(GRID, times, np.zeros((7,) + GRID.shape))
    with pytest.raises(GridError, match="at least 8"):
        Trajectory(GRID, times[:4], np.zeros((4,) + GRID.shape))


def test_separable_trajectory() -> None:
    x, y = GRID.coordinates
    field = VectorField(GRID, np.stack([np.sin(y), np.cos(x)]))
    times = graded_times(1.0, 8)

    trajectory = Trajectory.separable(field, times, lambda t: np.exp(-t))

    assert trajectory.is_vector
    assert trajectory.nt == 8
    assert_allclose(trajectory.final.samples, math.exp(-1.0) * field.samples)
    assert_allclose(trajectory.magnitude()[0], field.magnitude())


def test_time_weights_integrate_constants_exactly() -> None:
    trajectory = Trajectory.zeros(GRID, graded_times(3.0, 12), vector=False)

    assert trajectory.time_weights().sum() == pytest.approx(trajectory.span)
    assert trajectory.span == pytest.approx(3.0)


def test_from_snapshots_and_arithmetic() -> None:
    times = np.linspace(0.0, 1.0, 8)
    snapshots = [ScalarField(GRID, np.full(GRID.shape, float(i))) for i in range(8)]

    trajectory = Trajectory.from_snapshots(snapshots, times)
    doubled = trajectory + trajectory

    assert not trajectory.is_vector
    assert_allclose((doubled - trajectory).values, trajectory.values)
    assert_allclose((2 * trajectory).snapshot(3).samples, 6.0)
    with pytest.raises(GridError):
        trajectory + Trajectory.constant(snapshots[0], np.linspace(0.0, 2.0, 8))
    with pytest.raises(GridError):
        Trajectory.from_snapshots([], times)

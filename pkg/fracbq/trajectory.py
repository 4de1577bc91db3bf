import logging
from dataclasses import dataclass
from typing import Callable, Final, Sequence, Union

import numpy as np
import numpy.typing as npt

from fracbq.errors import GridError
from fracbq.spectral import Field, RealArray, ScalarField, SpectralGrid, VectorField

logger = logging.getLogger(__name__)

MIN_TIMES: Final = 8


def graded_times(T: float, nt: int, grading: float = 3.0) -> RealArray:
    """Nodes ``T(e^{a s}-1)/(e^a-1)`` on a uniform ``s`` grid, clustered toward t=0.

    Refining to ``2(nt-1)+1`` nodes keeps every original node.
    """
    if not T > 0:
        raise GridError(f"Time horizon T={T} must be positive")
    if nt < MIN_TIMES:
        raise GridError(f"A trajectory needs at least {MIN_TIMES} times, got nt={nt}")
    s = np.linspace(0.0, 1.0, nt)
    if grading == 0:
        return T * s  # type: ignore[no-any-return]
    times = T * np.expm1(grading * s) / np.expm1(grading)
    times[-1] = T
    return times  # type: ignore[no-any-return]


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of a scalar or vector field on a shared grid at increasing times.

    ``values`` has shape (nt, n, ..., n) for scalar and (nt, d, n, ..., n) for vector trajectories.
    """

    grid: SpectralGrid
    times: RealArray
    values: RealArray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.ndim != 1 or len(times) < MIN_TIMES:
            raise GridError(f"A trajectory needs at least {MIN_TIMES} times, got {times.shape}")
        if times[0] < 0 or np.any(np.diff(times) <= 0):
            raise GridError("Trajectory times must be nonnegative and strictly increasing")
        spatial = values.shape[1:]
        if values.shape[0] != len(times) or spatial not in (self.grid.shape, (self.grid.d,) + self.grid.shape):
            raise GridError(f"Trajectory values of shape {values.shape} do not fit {len(times)} times on {self.grid}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.grid.d + 2

    @property
    def nt(self) -> int:
        return len(self.times)

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    def snapshot(self, index: int) -> Field:
        if self.is_vector:
            return VectorField(self.grid, self.values[index])
        return ScalarField(self.grid, self.values[index])

    @property
    def final(self) -> Field:
        return self.snapshot(-1)

    def replace(self, values: RealArray) -> "Trajectory":
        return Trajectory(self.grid, self.times, values)

    def magnitude(self) -> RealArray:
        if self.is_vector:
            return np.sqrt(np.sum(self.values**2, axis=1))  # type: ignore[no-any-return]
        return np.abs(self.values)  # type: ignore[no-any-return]

    def time_weights(self) -> RealArray:
        """Trapezoidal quadrature weights on the trajectory's time nodes."""
        steps = np.diff(self.times)
        weights = np.zeros(self.nt)
        weights[:-1] += 0.5 * steps
        weights[1:] += 0.5 * steps
        return weights

    def check_compatible(self, other: "Trajectory") -> None:
        if self.grid != other.grid:
            raise GridError(f"Trajectories live on different grids: {self.grid} and {other.grid}")
        if self.times.shape != other.times.shape or not np.array_equal(self.times, other.times):
            raise GridError("Trajectories use different time grids")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self.check_compatible(other)
        return self.replace(self.values + other.values)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self.check_compatible(other)
        return self.replace(self.values - other.values)

    def __neg__(self) -> "Trajectory":
        return self.replace(-self.values)

    def __mul__(self, factor: float) -> "Trajectory":
        return self.replace(self.values * factor)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: SpectralGrid, times: RealArray, vector: bool) -> "Trajectory":
        shape = ((grid.d,) if vector else ()) + grid.shape
        return cls(grid, times, np.zeros((len(times),) + shape))

    @classmethod
    def constant(cls, field: Field, times: RealArray) -> "Trajectory":
        return cls(field.grid, times, np.broadcast_to(field.samples, (len(times),) + field.samples.shape).copy())

    @classmethod
    def separable(
        cls, field: Field, times: RealArray, profile: Union[Callable[[RealArray], npt.ArrayLike], RealArray]
    ) -> "Trajectory":
        """``a(t) · field(x)`` for a time profile given as a callable or as node values."""
        times = np.asarray(times, dtype=np.float64)
        amplitudes = np.asarray(profile(times) if callable(profile) else profile, dtype=np.float64)
        amplitudes = np.broadcast_to(amplitudes, times.shape)
        expand = (slice(None),) + (np.newaxis,) * field.samples.ndim
        return cls(field.grid, times, amplitudes[expand] * field.samples[np.newaxis])

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[Field], times: RealArray) -> "Trajectory":
        if not snapshots:
            raise GridError("No snapshots given")
        grid = snapshots[0].grid
        for snapshot in snapshots[1:]:
            if snapshot.grid != grid:
                raise GridError("Snapshots live on different grids")
        return cls(grid, times, np.stack([snapshot.samples for snapshot in snapshots]))

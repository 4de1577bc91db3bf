import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Final, Tuple, TypeVar, Union

import numpy as np
import numpy.typing as npt
from scipy import fft as sfft

from fracbq.errors import FieldFormatError, GridError

logger = logging.getLogger(__name__)

RealArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

MIN_SAMPLES: Final = 8


def _readonly(array: npt.NDArray[np.generic]) -> npt.NDArray[np.generic]:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic grid on [0, L)^d with the wavenumber lattice {-n/2+1, ..., n/2}·2π/L per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self) -> None:
        if self.d < 2:
            raise GridError(f"Dimension d={self.d} must be at least 2")
        if self.n % 2 != 0:
            raise GridError(f"Samples per axis n={self.n} must be even")
        if self.n < MIN_SAMPLES:
            raise GridError(f"Samples per axis n={self.n} must be at least {MIN_SAMPLES}")
        if not self.L > 0:
            raise GridError(f"Side length L={self.L} must be positive")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def cell_volume(self) -> float:
        return float(self.spacing**self.d)

    @property
    def fundamental(self) -> float:
        return 2 * np.pi / self.L

    @property
    def axes(self) -> Tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @cached_property
    def mode_indices(self) -> npt.NDArray[np.int64]:
        """Integer lattice indices in transform order, Nyquist stored as +n/2."""
        indices = np.rint(sfft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)
        indices[self.n // 2] = self.n // 2
        return _readonly(indices)  # type: ignore[return-value]

    @cached_property
    def wavenumbers(self) -> RealArray:
        return _readonly(self.fundamental * self.mode_indices.astype(np.float64))  # type: ignore[return-value]

    @cached_property
    def k_vectors(self) -> RealArray:
        grids = np.meshgrid(*([self.wavenumbers] * self.d), indexing="ij")
        return _readonly(np.stack(grids))  # type: ignore[return-value]

    @cached_property
    def derivative_k(self) -> RealArray:
        """Wavenumber vectors with the Nyquist component zeroed on each axis."""
        per_axis = self.wavenumbers.copy()
        per_axis[self.n // 2] = 0.0
        grids = np.meshgrid(*([per_axis] * self.d), indexing="ij")
        return _readonly(np.stack(grids))  # type: ignore[return-value]

    @cached_property
    def k_norm(self) -> RealArray:
        return _readonly(np.sqrt(np.sum(self.k_vectors**2, axis=0)))  # type: ignore[return-value]

    @cached_property
    def derivative_k_squared(self) -> RealArray:
        return _readonly(np.sum(self.derivative_k**2, axis=0))  # type: ignore[return-value]

    @cached_property
    def dealias_mask(self) -> npt.NDArray[np.bool_]:
        cutoff = self.n // 3
        keep = np.abs(self.mode_indices) <= cutoff
        grids = np.meshgrid(*([keep] * self.d), indexing="ij")
        return _readonly(np.logical_and.reduce(grids))  # type: ignore[return-value]

    @cached_property
    def coordinates(self) -> RealArray:
        nodes = self.spacing * np.arange(self.n, dtype=np.float64)
        return _readonly(np.stack(np.meshgrid(*([nodes] * self.d), indexing="ij")))  # type: ignore[return-value]

    @cached_property
    def offsets(self) -> npt.NDArray[np.int64]:
        """Minimum-image integer offsets from node 0, shape (d, n, ..., n)."""
        per_axis = np.rint(sfft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)
        return _readonly(np.stack(np.meshgrid(*([per_axis] * self.d), indexing="ij")))  # type: ignore[return-value]


def make_grid(d: int, n: int, L: float) -> SpectralGrid:
    return SpectralGrid(d=int(d), n=int(n), L=float(L))


@dataclass(frozen=True)
class ScalarField:
    grid: SpectralGrid
    samples: RealArray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.shape != self.grid.shape:
            raise FieldFormatError(f"Scalar samples have shape {samples.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(samples)):
            raise FieldFormatError("Field samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def replace(self, samples: RealArray) -> "ScalarField":
        return ScalarField(self.grid, samples)

    def magnitude(self) -> RealArray:
        return np.abs(self.samples)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self.grid, other.grid)
        return self.replace(self.samples + other.samples)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self.grid, other.grid)
        return self.replace(self.samples - other.samples)

    def __neg__(self) -> "ScalarField":
        return self.replace(-self.samples)

    def __mul__(self, factor: float) -> "ScalarField":
        return self.replace(self.samples * factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    """d components on one grid, stored as a single (d, n, ..., n) array."""

    grid: SpectralGrid
    samples: RealArray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        expected = (self.grid.d,) + self.grid.shape
        if samples.shape != expected:
            raise FieldFormatError(f"Vector samples have shape {samples.shape}, grid expects {expected}")
        if not np.all(np.isfinite(samples)):
            raise FieldFormatError("Field samples must be finite")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_components(cls, *components: ScalarField) -> "VectorField":
        grid = components[0].grid
        for component in components[1:]:
            _check_same_grid(grid, component.grid)
        return cls(grid, np.stack([component.samples for component in components]))

    @property
    def components(self) -> Tuple[ScalarField, ...]:
        return tuple(ScalarField(self.grid, component) for component in self.samples)

    def replace(self, samples: RealArray) -> "VectorField":
        return VectorField(self.grid, samples)

    def magnitude(self) -> RealArray:
        return np.sqrt(np.sum(self.samples**2, axis=0))

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self.grid, other.grid)
        return self.replace(self.samples + other.samples)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self.grid, other.grid)
        return self.replace(self.samples - other.samples)

    def __neg__(self) -> "VectorField":
        return self.replace(-self.samples)

    def __mul__(self, factor: float) -> "VectorField":
        return self.replace(self.samples * factor)

    __rmul__ = __mul__


Field = Union[ScalarField, VectorField]
FieldT = TypeVar("FieldT", ScalarField, VectorField)


def _check_same_grid(first: SpectralGrid, second: SpectralGrid) -> None:
    if first != second:
        raise GridError(f"Fields live on different grids: {first} and {second}")


def to_spectral(samples: RealArray, grid: SpectralGrid) -> ComplexArray:
    """Transform over the trailing d axes; leading axes are batch axes."""
    return sfft.fftn(samples, axes=grid.axes, norm="forward")  # type: ignore[no-any-return]


def to_physical(coefficients: ComplexArray, grid: SpectralGrid) -> RealArray:
    return np.ascontiguousarray(sfft.ifftn(coefficients, axes=grid.axes, norm="forward").real)


def forward_transform(field: Field) -> ComplexArray:
    return to_spectral(field.samples, field.grid)


def inverse_transform(coefficients: ComplexArray, grid: SpectralGrid) -> Field:
    samples = to_physical(coefficients, grid)
    if samples.ndim == grid.d:
        return ScalarField(grid, samples)
    return VectorField(grid, samples)


def spectral_derivative(field: ScalarField, axis: int) -> ScalarField:
    grid = field.grid
    if not 0 <= axis < grid.d:
        raise GridError(f"Axis {axis} is out of range for d={grid.d}")
    coefficients = forward_transform(field)
    return ScalarField(grid, to_physical(1j * grid.derivative_k[axis] * coefficients, grid))


def gradient(field: ScalarField) -> VectorField:
    grid = field.grid
    coefficients = forward_transform(field)
    return VectorField(grid, to_physical(1j * grid.derivative_k * coefficients[np.newaxis], grid))


def divergence(field: VectorField) -> ScalarField:
    grid = field.grid
    coefficients = forward_transform(field)
    return ScalarField(grid, to_physical(divergence_coefficients(coefficients, grid), grid))


def divergence_coefficients(coefficients: ComplexArray, grid: SpectralGrid) -> ComplexArray:
    """Spectral divergence of (..., d, n, ..., n) coefficients."""
    component_axis = -(grid.d + 1)
    return np.sum(1j * grid.derivative_k * coefficients, axis=component_axis)  # type: ignore[no-any-return]


def laplacian(field: FieldT) -> FieldT:
    grid = field.grid
    coefficients = forward_transform(field)
    return field.replace(to_physical(-grid.derivative_k_squared * coefficients, grid))


def curl_field(stream: Field) -> VectorField:
    """Divergence-free velocity: (-∂_y ψ, ∂_x ψ) in d=2, ∇×A in d=3."""
    grid = stream.grid
    coefficients = forward_transform(stream)
    k = grid.derivative_k
    if grid.d == 2:
        if not isinstance(stream, ScalarField):
            raise GridError("A stream function in d=2 must be a scalar field")
        velocity = np.stack([-1j * k[1] * coefficients, 1j * k[0] * coefficients])
    elif grid.d == 3:
        if not isinstance(stream, VectorField):
            raise GridError("A vector potential in d=3 must be a vector field")
        a = coefficients
        velocity = 1j * np.stack(
            [
                k[1] * a[2] - k[2] * a[1],
                k[2] * a[0] - k[0] * a[2],
                k[0] * a[1] - k[1] * a[0],
            ]
        )
    else:
        raise GridError(f"Curl form is defined for d=2 and d=3, got d={grid.d}")
    return VectorField(grid, to_physical(velocity, grid))


def dealias(coefficients: ComplexArray, grid: SpectralGrid) -> ComplexArray:
    """Two-thirds rule: zero every mode with some |k_j| > floor(n/3)·2π/L."""
    return np.where(grid.dealias_mask, coefficients, 0.0)  # type: ignore[no-any-return]


def product_coefficients(first: RealArray, second: RealArray, grid: SpectralGrid) -> ComplexArray:
    """Alias-free coefficients of the pointwise product of two sample arrays with matching batch axes."""
    first = to_physical(dealias(to_spectral(first, grid), grid), grid)
    second = to_physical(dealias(to_spectral(second, grid), grid), grid)
    return dealias(to_spectral(first * second, grid), grid)


def dealiased_product(first: ScalarField, second: ScalarField) -> ScalarField:
    _check_same_grid(first.grid, second.grid)
    grid = first.grid
    return ScalarField(grid, to_physical(product_coefficients(first.samples, second.samples, grid), grid))

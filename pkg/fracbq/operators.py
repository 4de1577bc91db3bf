import logging
from dataclasses import dataclass
from typing import Callable, Final, List, Optional

import numpy as np
import numpy.typing as npt

from fracbq.errors import IllPosedZeroModeError, OperatorError
from fracbq.spectral import (
    ComplexArray,
    FieldT,
    RealArray,
    ScalarField,
    SpectralGrid,
    VectorField,
    divergence_coefficients,
    forward_transform,
    product_coefficients,
    to_physical,
    to_spectral,
)

logger = logging.getLogger(__name__)

ZERO_MODE_POLICIES: Final = ("zero", "identity")
MEAN_FREE_TOLERANCE: Final = 1e-12

SymbolFunction = Callable[[RealArray], npt.NDArray[np.generic]]


@dataclass(frozen=True)
class MultiplierSpec:
    """A Fourier multiplier homogeneous of the given degree away from k=0.

    ``symbol`` receives wavenumber vectors of shape (d, ...) and returns one value per vector.
    ``smooth_at_origin`` marks polynomial symbols, whose heat-damped kernels decay faster.
    """

    symbol: SymbolFunction
    degree: float
    zero_mode: str = "zero"
    smooth_at_origin: bool = False
    name: str = "multiplier"

    def __post_init__(self) -> None:
        if self.zero_mode not in ZERO_MODE_POLICIES:
            raise OperatorError(f"Unknown zero-mode policy {self.zero_mode!r}, expected one of {ZERO_MODE_POLICIES}")

    def evaluate(self, k: RealArray) -> ComplexArray:
        norm = np.sqrt(np.sum(k**2, axis=0))
        at_origin = norm == 0
        # keep the symbol away from 0/0 and 0**negative at the origin
        safe_k = np.where(at_origin[np.newaxis], 1.0, k)
        values = np.asarray(self.symbol(safe_k), dtype=np.complex128)
        values = np.broadcast_to(values, norm.shape).copy()
        values[at_origin] = 0.0 if self.zero_mode == "zero" else 1.0
        return values


def radial_symbol(degree: float) -> MultiplierSpec:
    smooth = degree >= 0 and float(degree).is_integer() and int(degree) % 2 == 0
    return MultiplierSpec(
        symbol=lambda k: np.sqrt(np.sum(k**2, axis=0)) ** degree,
        degree=degree,
        zero_mode="identity" if degree == 0 else "zero",
        smooth_at_origin=smooth,
        name=f"radial({degree:g})",
    )


def _projector_entry(k: RealArray, j: int, l: int) -> RealArray:
    squared = np.sum(k**2, axis=0)
    return (1.0 if j == l else 0.0) - k[j] * k[l] / squared  # type: ignore[no-any-return]


def leray_divergence_symbol(j: int, l: int, m: int) -> MultiplierSpec:
    """Entry ``i k_m P_jl(k)`` of the projected divergence, homogeneous of degree 1."""
    return MultiplierSpec(
        symbol=lambda k: 1j * k[m] * _projector_entry(k, j, l),
        degree=1.0,
        name=f"leray-div({j},{l},{m})",
    )


def force_symbol(gamma: float, j: int, l: int) -> MultiplierSpec:
    """Entry ``|k|^gamma P_jl(k)`` applied to smoothed forces."""
    return MultiplierSpec(
        symbol=lambda k: np.sqrt(np.sum(k**2, axis=0)) ** gamma * _projector_entry(k, j, l),
        degree=gamma,
        name=f"force({gamma:g};{j},{l})",
    )


def leray_divergence_family(d: int) -> List[MultiplierSpec]:
    return [leray_divergence_symbol(j, l, m) for j in range(d) for l in range(d) for m in range(d)]


def force_family(gamma: float, d: int) -> List[MultiplierSpec]:
    # P is symmetric
    return [force_symbol(gamma, j, l) for j in range(d) for l in range(j, d)]


def apply_multiplier(field: FieldT, spec: MultiplierSpec) -> FieldT:
    grid = field.grid
    values = spec.evaluate(grid.k_vectors)
    return field.replace(to_physical(values * forward_transform(field), grid))


def fractional_laplacian(field: FieldT, alpha: float) -> FieldT:
    if not alpha > 0:
        raise OperatorError(f"Fractional order alpha={alpha} must be positive")
    return apply_multiplier(field, radial_symbol(alpha))


def heat_symbol(grid: SpectralGrid, t: float, alpha: float) -> RealArray:
    return np.exp(-t * grid.k_norm**alpha)  # type: ignore[no-any-return]


def check_heat_order(alpha: float) -> None:
    if not 1.0 <= alpha <= 2.0:
        raise OperatorError(f"Heat semigroup order alpha={alpha} must lie in [1, 2]")


def heat_propagate(field: FieldT, t: float, alpha: float) -> FieldT:
    if t < 0:
        raise OperatorError(f"Propagation time t={t} must be nonnegative")
    check_heat_order(alpha)
    if t == 0:
        return field.replace(field.samples.copy())
    grid = field.grid
    return field.replace(to_physical(heat_symbol(grid, t, alpha) * forward_transform(field), grid))


def leray_coefficients(coefficients: ComplexArray, grid: SpectralGrid) -> ComplexArray:
    """Project (..., d, n, ..., n) coefficients onto divergence-free fields; identity where k vanishes."""
    k = grid.derivative_k
    squared = grid.derivative_k_squared
    safe = np.where(squared > 0, squared, 1.0)
    component_axis = -(grid.d + 1)
    parallel = np.sum(k * coefficients, axis=component_axis, keepdims=True) / safe
    return coefficients - k * parallel  # type: ignore[no-any-return]


def leray_project(field: VectorField) -> VectorField:
    grid = field.grid
    return field.replace(to_physical(leray_coefficients(forward_transform(field), grid), grid))


def _check_mean_free(field: FieldT) -> None:
    scale = float(np.max(np.abs(field.samples))) if field.samples.size else 0.0
    means = np.mean(field.samples, axis=field.grid.axes)
    worst = float(np.max(np.abs(means)))
    if worst > MEAN_FREE_TOLERANCE * scale:
        raise IllPosedZeroModeError(
            f"Field has mean {worst:.3e} against scale {scale:.3e}; negative-order smoothing needs mean-free input"
        )


def riesz_smoothing(field: FieldT, gamma: float) -> FieldT:
    if not gamma > 0:
        raise OperatorError(f"Smoothing order gamma={gamma} must be positive")
    _check_mean_free(field)
    return apply_multiplier(field, radial_symbol(-gamma))


def momentum_defect_coefficients(
    velocity: RealArray, temperature: RealArray, force: Optional[RealArray], grid: SpectralGrid
) -> ComplexArray:
    """Coefficients of div(u⊗u) - f - θe_d for one snapshot."""
    d = grid.d
    k = grid.derivative_k
    defect = np.zeros((d,) + grid.shape, dtype=np.complex128)
    for j in range(d):
        for l in range(d):
            defect[j] += 1j * k[l] * product_coefficients(velocity[j], velocity[l], grid)
    if force is not None:
        defect -= to_spectral(force, grid)
    defect[d - 1] -= to_spectral(temperature, grid)
    return defect


def pressure_from_state(u: VectorField, theta: ScalarField, f: Optional[VectorField] = None) -> ScalarField:
    """Mean-free p with (-Δ)p = div(div(u⊗u) - f - θe_d)."""
    grid = u.grid
    defect = momentum_defect_coefficients(u.samples, theta.samples, None if f is None else f.samples, grid)
    squared = grid.derivative_k_squared
    source = divergence_coefficients(defect, grid)
    pressure = np.where(squared > 0, source / np.where(squared > 0, squared, 1.0), 0.0)
    return ScalarField(grid, to_physical(pressure, grid))


def pressure_residual(
    p: ScalarField, u: VectorField, theta: ScalarField, f: Optional[VectorField] = None
) -> float:
    """Relative max-norm residual of the pressure Poisson problem."""
    grid = u.grid
    defect = momentum_defect_coefficients(u.samples, theta.samples, None if f is None else f.samples, grid)
    source = to_physical(divergence_coefficients(defect, grid), grid)
    lhs = to_physical(grid.derivative_k_squared * forward_transform(p), grid)
    scale = float(np.max(np.abs(source)))
    if scale == 0.0:
        return float(np.max(np.abs(lhs)))
    return float(np.max(np.abs(lhs - source)) / scale)

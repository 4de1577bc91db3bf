"""Discrete estimators of Morrey-type, thermic and Besov norms on periodic grids.

A sup over centers and radii is approximated by:

* spatial centers on a coarse subgrid (``stride``); all nodes for the refined value;
* index radii ``1, 2, 4, ...`` grid cells, continued until a region covers the whole
  torus (and, for space-time regions, the whole time span);
* time centers on every ``time_stride``-th node of the trajectory.

Region integrals are computed for all centers at once as circular convolutions with
indicator functions.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Dict, Final, List, Optional, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import special

from fracbq.errors import IndexConstraintError
from fracbq.operators import check_heat_order, heat_symbol, riesz_smoothing
from fracbq.spectral import ComplexArray, Field, RealArray, SpectralGrid, to_physical, to_spectral
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)

VARIANTS: Final = ("ball", "box")
DEFAULT_TIME_STRIDE: Final = 4
LOG_TIME_RANGE: Final = (-12, 6)
TLM_NODES: Final = 128
BESOV_PER_OCTAVE: Final = 4


@dataclass(frozen=True)
class NormEstimate:
    value: float
    refined: float
    tail_bound: float = 0.0

    @property
    def gap(self) -> float:
        return max(self.refined - self.value, 0.0)


@dataclass(frozen=True)
class NormReport:
    norm_name: str
    params: Dict[str, Any]
    value: float
    refinement_gap: float
    tail_bound: float
    extras: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_estimate(cls, norm_name: str, params: Dict[str, Any], estimate: NormEstimate) -> "NormReport":
        return cls(
            norm_name=norm_name,
            params=dict(params),
            value=estimate.value,
            refinement_gap=estimate.gap,
            tail_bound=estimate.tail_bound,
        )

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check_exponents(p: float, q: float) -> None:
    if not 1 <= p <= q < math.inf:
        raise IndexConstraintError(f"Exponents must satisfy 1 <= p <= q < inf, got p={p:g}, q={q:g}")


def default_stride(grid: SpectralGrid) -> int:
    return max(1, grid.n // 16)


def _subgrid(grid: SpectralGrid, stride: int) -> Tuple[slice, ...]:
    return (slice(None, None, stride),) * grid.d


@lru_cache(maxsize=512)
def _indicator(grid: SpectralGrid, variant: str, size: int) -> Tuple[ComplexArray, int]:
    """Spectrum and node count of an index region; ``size`` is R² for balls and R for boxes."""
    offsets = grid.offsets
    if variant == "ball":
        mask = np.sum(offsets**2, axis=0) <= size
    else:
        mask = np.max(np.abs(offsets), axis=0) <= size
    spectrum = sfft.rfftn(mask.astype(np.float64), axes=grid.axes)
    spectrum.setflags(write=False)
    return spectrum, int(np.count_nonzero(mask))


class _RegionSums:
    """Circular sums of a (batched) density over translated index regions."""

    def __init__(self, density: RealArray, grid: SpectralGrid) -> None:
        self.grid = grid
        self._spectrum = sfft.rfftn(density, axes=grid.axes)

    def sums(self, variant: str, size: int, batch: Optional[int] = None) -> RealArray:
        spectrum = self._spectrum if batch is None else self._spectrum[batch]
        indicator, _ = _indicator(self.grid, variant, size)
        values = sfft.irfftn(spectrum * indicator, s=self.grid.shape, axes=self.grid.axes)
        return np.clip(values, 0.0, None)  # type: ignore[no-any-return]


def _spatially_covered(grid: SpectralGrid, variant: str, size: int) -> bool:
    half = grid.n // 2
    if variant == "ball":
        return size >= grid.d * half * half
    return size >= half


def index_radii(grid: SpectralGrid, variant: str = "ball", span: float = 0.0, alpha: float = 2.0) -> List[int]:
    """Dyadic index radii up to the first one whose region covers the torus and the time span."""
    radii: List[int] = []
    radius = 1
    while True:
        radii.append(radius)
        r = radius * grid.spacing
        if variant == "ball":
            reach = max(r - span ** (1.0 / alpha), 0.0) if span > 0 else r
            size = int(math.floor((reach / grid.spacing) ** 2 + 1e-9))
            covered = _spatially_covered(grid, variant, size)
        else:
            covered = _spatially_covered(grid, variant, radius) and r**alpha >= span
        if covered:
            return radii
        radius *= 2


def _morrey_sup(
    density: RealArray, grid: SpectralGrid, p: float, q: float, stride: Optional[int]
) -> Tuple[float, float]:
    """Subgrid and full-grid sup of r^{-d(1/p-1/q)} (∫_B density)^{1/p} over balls."""
    stride = stride or default_stride(grid)
    sums = _RegionSums(density, grid)
    exponent = grid.d * (1.0 / p - 1.0 / q)
    value = refined = 0.0
    for radius in index_radii(grid, "ball"):
        integral = sums.sums("ball", radius * radius) * grid.cell_volume
        scaled = (radius * grid.spacing) ** (-exponent) * integral ** (1.0 / p)
        refined = max(refined, float(np.max(scaled)))
        value = max(value, float(np.max(scaled[_subgrid(grid, stride)])))
    return value, refined


def morrey_estimate(f: Field, p: float, q: float, stride: Optional[int] = None) -> NormEstimate:
    _check_exponents(p, q)
    value, refined = _morrey_sup(f.magnitude() ** p, f.grid, p, q, stride)
    return NormEstimate(value=value, refined=refined)


def morrey_norm(f: Field, p: float, q: float) -> float:
    return morrey_estimate(f, p, q).value


def _box_integrals(
    sums: _RegionSums, psi: Trajectory, radius: int, alpha: float
) -> Tuple[RealArray, RealArray]:
    grid = psi.grid
    r = radius * grid.spacing
    spatial = sums.sums("box", radius) * grid.cell_volume
    _, count = _indicator(grid, "box", radius)
    lag = np.abs(psi.times[:, np.newaxis] - psi.times[np.newaxis, :])
    weights = np.where(lag <= r**alpha * (1 + 1e-12), psi.time_weights()[np.newaxis, :], 0.0)
    integrals = np.tensordot(weights, spatial, axes=([1], [0]))
    measures = weights.sum(axis=1) * count * grid.cell_volume
    return integrals, measures


def _ball_integrals(
    sums: _RegionSums, psi: Trajectory, radius: int, alpha: float
) -> Tuple[RealArray, RealArray]:
    grid = psi.grid
    r = radius * grid.spacing
    weights = psi.time_weights()
    lag = np.abs(psi.times[:, np.newaxis] - psi.times[np.newaxis, :]) ** (1.0 / alpha)
    reach = r - lag
    sizes = np.where(reach > 0, np.floor((np.clip(reach, 0.0, None) / grid.spacing) ** 2 + 1e-9), -1).astype(int)
    integrals = np.zeros((psi.nt,) + grid.shape)
    measures = np.zeros(psi.nt)
    for source in range(psi.nt):
        column = sizes[:, source]
        for size in np.unique(column[column >= 0]):
            targets = column == size
            _, count = _indicator(grid, "ball", int(size))
            integrals[targets] += weights[source] * grid.cell_volume * sums.sums("ball", int(size), batch=source)
            measures[targets] += weights[source] * count * grid.cell_volume
    return integrals, measures


def parabolic_morrey_estimate(
    psi: Trajectory,
    p: float,
    q: float,
    alpha: float,
    variant: str = "box",
    averaged: bool = False,
    stride: Optional[int] = None,
    time_stride: int = DEFAULT_TIME_STRIDE,
) -> NormEstimate:
    """Sup over space-time regions of ``r^{-(d+α)(1/p-1/q)} (∬|ψ|^p)^{1/p}``.

    ``variant="ball"`` uses ``|t-s|^{1/α} + |x-y| <= r``; ``variant="box"`` uses
    ``|t-s| <= r^α`` and ``|x-y|_∞ <= r``. With ``averaged=True`` the integral is replaced
    by an average and scaled by ``r^{(d+α)/q}``.
    """
    _check_exponents(p, q)
    if not 1.0 <= alpha <= 2.0:
        raise IndexConstraintError(f"alpha={alpha:g} must lie in [1, 2] for parabolic regions")
    if variant not in VARIANTS:
        raise IndexConstraintError(f"Unknown parabolic region variant {variant!r}, expected one of {VARIANTS}")
    grid = psi.grid
    stride = stride or default_stride(grid)
    sums = _RegionSums(psi.magnitude() ** p, grid)
    integrate = _box_integrals if variant == "box" else _ball_integrals
    homogeneity = grid.d + alpha
    sub = (slice(None, None, time_stride),) + _subgrid(grid, stride)

    value = refined = 0.0
    for radius in index_radii(grid, variant, psi.span, alpha):
        r = radius * grid.spacing
        integrals, measures = integrate(sums, psi, radius, alpha)
        if averaged:
            expand = (slice(None),) + (np.newaxis,) * grid.d
            scaled = r ** (homogeneity / q) * (integrals / measures[expand]) ** (1.0 / p)
        else:
            scaled = r ** (-homogeneity * (1.0 / p - 1.0 / q)) * integrals ** (1.0 / p)
        refined = max(refined, float(np.max(scaled)))
        value = max(value, float(np.max(scaled[sub])))
    logger.debug("Parabolic %s norm p=%g q=%g: %g (refined %g)", variant, p, q, value, refined)
    return NormEstimate(value=value, refined=refined)


def parabolic_morrey_norm(psi: Trajectory, p: float, q: float, alpha: float, variant: str = "box") -> float:
    return parabolic_morrey_estimate(psi, p, q, alpha, variant).value


def smooth_trajectory(psi: Trajectory, gamma: float) -> Trajectory:
    return Trajectory.from_snapshots([riesz_smoothing(psi.snapshot(i), gamma) for i in range(psi.nt)], psi.times)


def sobolev_morrey_estimate(
    psi: Trajectory, gamma: float, p: float, q: float, alpha: float, variant: str = "box", **options: Any
) -> NormEstimate:
    return parabolic_morrey_estimate(smooth_trajectory(psi, gamma), p, q, alpha, variant, **options)


def sobolev_morrey_norm(psi: Trajectory, gamma: float, p: float, q: float, alpha: float, variant: str = "box") -> float:
    return sobolev_morrey_estimate(psi, gamma, p, q, alpha, variant).value


def heat_time_scale(grid: SpectralGrid, alpha: float) -> float:
    """Time at which the lowest nonzero mode has decayed by e^{-1}."""
    return float((grid.L / (2 * np.pi)) ** alpha)


def log_heat_times(grid: SpectralGrid, alpha: float, nodes: int) -> RealArray:
    low, high = LOG_TIME_RANGE
    return heat_time_scale(grid, alpha) * 2.0 ** np.linspace(low, high, nodes)  # type: ignore[no-any-return]


def heat_extension_times(grid: SpectralGrid, alpha: float, nodes: int = 64) -> RealArray:
    return np.concatenate([[0.0], log_heat_times(grid, alpha, nodes)])


def _heat_batch(f: Field, times: RealArray, alpha: float) -> RealArray:
    grid = f.grid
    coefficients = to_spectral(f.samples, grid)
    symbols = np.stack([heat_symbol(grid, float(t), alpha) for t in times])
    if f.samples.ndim > grid.d:
        symbols = symbols[:, np.newaxis]
    return to_physical(symbols * coefficients[np.newaxis], grid)


def heat_extension(f: Field, alpha: float, times: Optional[RealArray] = None) -> Trajectory:
    """Trajectory ``t ↦ 𝔭_t ∗ f`` on the given times."""
    check_heat_order(alpha)
    if times is None:
        times = heat_extension_times(f.grid, alpha)
    return Trajectory(f.grid, times, _heat_batch(f, np.asarray(times, dtype=np.float64), alpha))


def besov_times(grid: SpectralGrid, alpha: float, per_octave: int = BESOV_PER_OCTAVE) -> RealArray:
    """Dyadic times from 2^-12 to 2^6 in units of ``heat_time_scale``.

    The grid follows the box: on a torus of side ``L`` it spans ``(L/2π)^α`` times the
    unit-torus range, so estimates on different boxes sample the same dimensionless times.
    """
    low, high = LOG_TIME_RANGE
    octaves = np.arange(low * per_octave, high * per_octave + 1) / per_octave
    return heat_time_scale(grid, alpha) * 2.0**octaves  # type: ignore[no-any-return]


def besov_estimate(
    f: Field, beta: float, alpha: float, times: Optional[RealArray] = None, per_octave: int = BESOV_PER_OCTAVE
) -> NormEstimate:
    """``sup_t t^{β/α} ‖𝔭_t ∗ f‖_∞`` over a dyadic time grid."""
    if not beta > 0:
        raise IndexConstraintError(f"Besov regularity beta={beta:g} must be positive")
    check_heat_order(alpha)
    if times is None:
        times = besov_times(f.grid, alpha, per_octave)
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise IndexConstraintError("Besov time grid is empty")
    extension = _heat_batch(f, times, alpha)
    spatial_axes = tuple(range(1, extension.ndim))
    sups = np.max(np.abs(extension), axis=spatial_axes)
    value = float(np.max(times ** (beta / alpha) * sups))
    return NormEstimate(value=value, refined=value)


def besov_norm(f: Field, beta: float, alpha: float, times: Optional[RealArray] = None) -> float:
    return besov_estimate(f, beta, alpha, times).value


def _log_trapezoid_weights(times: RealArray) -> RealArray:
    steps = np.diff(np.log(times))
    weights = np.zeros(len(times))
    weights[:-1] += 0.5 * steps
    weights[1:] += 0.5 * steps
    return weights


def _tlm_tail(f: Field, sigma: float, p: float, alpha: float, times: RealArray) -> float:
    """Pointwise bound on the inner time integral outside the quadrature range."""
    grid = f.grid
    a = -sigma * p / alpha
    sup = float(np.max(f.magnitude()))
    lower = sup**p * times[0] ** a / a
    coefficients = to_spectral(f.samples, grid)
    means = np.abs(np.mean(f.samples, axis=grid.axes))
    if np.any(means > 1e-12 * max(sup, 1e-300)):
        return math.inf
    total = float(np.sum(np.abs(coefficients)))
    rate = p * (2 * np.pi / grid.L) ** alpha
    upper = total**p * rate ** (-a) * special.gamma(a) * special.gammaincc(a, rate * times[-1])
    return float((lower + upper) ** (1.0 / p))


def tlm_estimate(
    f: Field, sigma: float, p: float, q: float, alpha: float, nodes: int = TLM_NODES, stride: Optional[int] = None
) -> NormEstimate:
    """Morrey norm of ``x ↦ (∫ t^{-σp/α} |𝔭_t ∗ f(x)|^p dt/t)^{1/p}``."""
    if not sigma < 0:
        raise IndexConstraintError(f"Thermic regularity sigma={sigma:g} must be negative")
    _check_exponents(p, q)
    check_heat_order(alpha)
    grid = f.grid
    times = log_heat_times(grid, alpha, nodes)
    extension = _heat_batch(f, times, alpha)
    magnitude = np.sqrt(np.sum(extension**2, axis=1)) if extension.ndim > grid.d + 1 else np.abs(extension)
    weights = _log_trapezoid_weights(times) * times ** (-sigma * p / alpha)
    inner = np.tensordot(weights, magnitude**p, axes=([0], [0]))
    value, refined = _morrey_sup(inner, grid, p, q, stride)
    return NormEstimate(value=value, refined=refined, tail_bound=_tlm_tail(f, sigma, p, alpha, times))


def tlm_norm(f: Field, sigma: float, p: float, q: float, alpha: float) -> float:
    return tlm_estimate(f, sigma, p, q, alpha).value
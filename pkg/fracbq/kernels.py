"""Physical-space kernels of heat-damped multipliers, ``K_t = F^{-1}[σ(k) e^{-t|k|^α}]``.

Kernels are evaluated as lattice Fourier sums on a periodic box that is large and fine
compared with ``t^{1/α}`` and with the requested points. The periodization defect decays
like ``box^{-e}`` with ``e`` the far-field decay rate of the kernel and is removed by
combining two boxes of side ``L`` and ``2L``.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Final, List, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy import fft as sfft

from fracbq.errors import OperatorError
from fracbq.operators import MultiplierSpec, check_heat_order
from fracbq.reports import write_csv
from fracbq.spectral import ComplexArray, RealArray

logger = logging.getLogger(__name__)

# e^{-36} is below double precision relative to the k=0 weight
DAMPING_EXPONENT: Final = 36.0
MAX_LATTICE_MODES: Final = 2**26


@dataclass(frozen=True)
class KernelSample:
    alpha: float
    rho: float
    t: float
    points: RealArray
    values: RealArray
    name: str = "kernel"

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def normalized_values(self) -> RealArray:
        radius = np.sqrt(np.sum(self.points**2, axis=1))
        scale = self.t ** (1.0 / self.alpha)
        return np.abs(self.values) * (scale + radius) ** (self.d + self.rho)  # type: ignore[no-any-return]


def _validate(spec: MultiplierSpec, alpha: float, t: float, d: int) -> None:
    check_heat_order(alpha)
    if not t > 0:
        raise OperatorError(f"Kernel time t={t} must be positive")
    if not spec.degree > -d:
        raise OperatorError(f"Kernel degree rho={spec.degree} must exceed -d={-d} for integrability")


def lattice_parameters(alpha: float, t: float, extent: float) -> Tuple[float, int]:
    """Side length and (even) samples per axis of the base box."""
    scale = t ** (1.0 / alpha)
    k_edge = (DAMPING_EXPONENT / t) ** (1.0 / alpha)
    spacing = min(math.pi / k_edge, scale / 4.0)
    box = max(64.0 * scale, 8.0 * extent)
    n = 2 * int(math.ceil(box / spacing / 2.0))
    return box, n


def _lattice_coefficients(spec: MultiplierSpec, alpha: float, t: float, box: float, n: int, d: int) -> ComplexArray:
    per_axis = (2 * np.pi / box) * np.rint(sfft.fftfreq(n, 1.0 / n))
    k = np.stack(np.meshgrid(*([per_axis] * d), indexing="ij"))
    values = spec.evaluate(k) * np.exp(-t * np.sqrt(np.sum(k**2, axis=0)) ** alpha)
    # fftfreq puts the Nyquist mode at -n/2 without a +n/2 partner
    nyquist = np.abs(np.rint(sfft.fftfreq(n, 1.0 / n))) == n // 2
    for axis in range(d):
        index = [slice(None)] * d
        index[axis] = nyquist  # type: ignore[call-overload]
        values[tuple(index)] = 0.0
    return values / box**d  # type: ignore[no-any-return]


def _lattice_sum(coefficients: ComplexArray, box: float, n: int, points: RealArray) -> RealArray:
    """Σ_k c_k e^{ik·x} at arbitrary points, contracted one axis at a time."""
    per_axis = (2 * np.pi / box) * np.rint(sfft.fftfreq(n, 1.0 / n))
    d = points.shape[1]
    phases = [np.exp(1j * np.outer(points[:, axis], per_axis)) for axis in range(d)]
    partial = np.tensordot(phases[0], coefficients, axes=([1], [0]))
    for axis in range(1, d):
        partial = np.einsum("pa...,pa->p...", partial, phases[axis])
    return np.ascontiguousarray(partial.real)


def kernel_physical(spec: MultiplierSpec, alpha: float, t: float, points: npt.ArrayLike) -> KernelSample:
    """Values of the heat-damped kernel of ``spec`` at ``points`` (shape (P, d))."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = points.shape[1]
    _validate(spec, alpha, t, d)
    extent = float(np.max(np.abs(points))) if points.size else 0.0
    box, n = lattice_parameters(alpha, t, extent)
    if (2 * n) ** d > MAX_LATTICE_MODES:
        raise OperatorError(
            f"Kernel lattice of {(2 * n) ** d} modes exceeds {MAX_LATTICE_MODES}; reduce the point extent"
        )

    decay = d + spec.degree + (alpha if spec.smooth_at_origin else 0.0)
    coarse = _lattice_sum(_lattice_coefficients(spec, alpha, t, box, n, d), box, n, points)
    fine = _lattice_sum(_lattice_coefficients(spec, alpha, t, 2 * box, 2 * n, d), 2 * box, 2 * n, points)
    weight = 2.0**decay
    values = (weight * fine - coarse) / (weight - 1.0)
    logger.debug("Kernel %s at t=%g: box=%g, n=%d, %d points", spec.name, t, box, n, len(points))
    return KernelSample(alpha=alpha, rho=spec.degree, t=t, points=points, values=values, name=spec.name)


def normalized_sup(sample: KernelSample) -> float:
    return float(np.max(sample.normalized_values))


def worst_component(
    specs: Sequence[MultiplierSpec], alpha: float, points: npt.ArrayLike, t: float = 1.0
) -> Tuple[MultiplierSpec, KernelSample]:
    """Entry of a matrix symbol whose kernel has the largest normalized sup at time ``t``."""
    if not specs:
        raise OperatorError("Symbol family is empty")
    samples = [kernel_physical(spec, alpha, t, points) for spec in specs]
    index = int(np.argmax([normalized_sup(sample) for sample in samples]))
    logger.debug("Worst component of %d: %s", len(specs), specs[index].name)
    return specs[index], samples[index]


def kernel_lp_norm(spec: MultiplierSpec, alpha: float, t: float, p: float, d: int) -> float:
    """Discrete L^p norm of the kernel on a box and spacing proportional to ``t^{1/α}``."""
    _validate(spec, alpha, t, d)
    if not p >= 1:
        raise OperatorError(f"Integrability exponent p={p} must be at least 1")
    scale = t ** (1.0 / alpha)
    box = 128.0 * scale
    k_edge = (DAMPING_EXPONENT / t) ** (1.0 / alpha)
    spacing = min(math.pi / k_edge, scale / 4.0)
    n = 2 * int(math.ceil(box / spacing / 2.0))
    if n**d > MAX_LATTICE_MODES:
        raise OperatorError(f"Kernel grid of {n ** d} nodes exceeds {MAX_LATTICE_MODES}")
    coefficients = _lattice_coefficients(spec, alpha, t, box, n, d)
    values = np.abs(sfft.ifftn(coefficients, norm="forward").real)
    if math.isinf(p):
        return float(np.max(values))
    cell = (box / n) ** d
    return float((np.sum(values**p) * cell) ** (1.0 / p))


def lp_decay_exponent(rho: float, p: float, d: int, alpha: float) -> float:
    return -(rho + d * (1.0 - 1.0 / p)) / alpha


def write_kernel_csv(samples: List[KernelSample], path: Union[str, Path]) -> Path:
    d = samples[0].d if samples else 0
    header = ["t"] + [f"x{axis}" for axis in range(d)] + ["value", "normalized_value"]
    rows = (
        [sample.t, *point, value, normalized]
        for sample in samples
        for point, value, normalized in zip(sample.points, sample.values, sample.normalized_values)
    )
    return write_csv(path, header, rows)

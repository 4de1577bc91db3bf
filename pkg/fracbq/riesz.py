import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np
from scipy import fft as sfft

from fracbq.errors import ExponentMismatchError, IndexConstraintError
from fracbq.norms import parabolic_morrey_estimate
from fracbq.spectral import RealArray, SpectralGrid
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)

HOLDER_SLACK = 1e-9


def _distance(grid: SpectralGrid) -> RealArray:
    return np.sqrt(np.sum(grid.offsets.astype(np.float64) ** 2, axis=0)) * grid.spacing  # type: ignore[no-any-return]


def parabolic_riesz(psi: Trajectory, beta: float, alpha: float) -> Trajectory:
    """Space-time convolution with ``(|t-s|^{1/α} + |x-y|)^{-(d+α-β)}``.

    Trapezoidal in time and a lattice sum in space; the kernel distance is floored at half a cell.
    """
    grid = psi.grid
    homogeneity = grid.d + alpha
    if not 0 < beta < homogeneity:
        raise IndexConstraintError(f"Riesz order beta={beta:g} must lie in (0, d+α={homogeneity:g})")
    decay = homogeneity - beta
    distance = _distance(grid)
    weights = psi.time_weights() * grid.cell_volume
    spectra = sfft.rfftn(psi.values, axes=grid.axes)
    lags = np.abs(psi.times[:, np.newaxis] - psi.times[np.newaxis, :]) ** (1.0 / alpha)
    output = np.empty_like(psi.values)
    for index in range(psi.nt):
        kernels = np.maximum(lags[index][(slice(None),) + (np.newaxis,) * grid.d] + distance, 0.5 * grid.spacing)
        weighted = kernels ** (-decay) * weights[(slice(None),) + (np.newaxis,) * grid.d]
        kernel_spectra = sfft.rfftn(weighted, axes=grid.axes)
        if psi.is_vector:
            kernel_spectra = kernel_spectra[:, np.newaxis]
        output[index] = sfft.irfftn(np.sum(kernel_spectra * spectra, axis=0), s=grid.shape, axes=grid.axes)
    return psi.replace(output)


def riesz_target_exponents(p: float, q: float, beta: float, alpha: float, d: int) -> float:
    """The factor λ = 1 - βq/(d+α) mapping M^{p,q} into M^{p/λ,q/λ}."""
    factor = 1.0 - beta * q / (d + alpha)
    if not factor > 0:
        raise IndexConstraintError(f"beta={beta:g} must satisfy beta < (d+α)/q={(d + alpha) / q:g}")
    return factor


def riesz_boundedness_ratio(
    psi: Trajectory, p: float, q: float, beta: float, alpha: float, variant: str = "box"
) -> float:
    factor = riesz_target_exponents(p, q, beta, alpha, psi.grid.d)
    source = parabolic_morrey_estimate(psi, p, q, alpha, variant).value
    if source == 0:
        return 0.0
    image = parabolic_morrey_estimate(parabolic_riesz(psi, beta, alpha), p / factor, q / factor, alpha, variant).value
    return image / source


@dataclass(frozen=True)
class HolderReport:
    ratio: float
    lhs: float
    rhs: float
    degenerate: bool

    @property
    def passed(self) -> bool:
        return self.degenerate or self.ratio <= 1.0 + HOLDER_SLACK

    def as_dict(self) -> Dict[str, Any]:
        return dict(asdict(self), passed=self.passed)


def holder_check(
    f: Trajectory,
    g: Trajectory,
    p1: float,
    q1: float,
    p2: float,
    q2: float,
    alpha: float,
    variant: str = "box",
) -> HolderReport:
    """Compare ‖fg‖ in M^{p,q} with ‖f‖ in M^{p1,q1} times ‖g‖ in M^{p2,q2}, 1/p = 1/p1 + 1/p2."""
    f.check_compatible(g)
    p = 1.0 / (1.0 / p1 + 1.0 / p2)
    q = 1.0 / (1.0 / q1 + 1.0 / q2)
    if p < 1:
        raise ExponentMismatchError(f"1/p1 + 1/p2 = {1 / p:g} exceeds 1")
    if p1 > q1 or p2 > q2:
        raise ExponentMismatchError(f"Need p1 <= q1 and p2 <= q2, got ({p1:g}, {q1:g}) and ({p2:g}, {q2:g})")
    product = Trajectory(f.grid, f.times, f.magnitude() * g.magnitude())
    lhs = parabolic_morrey_estimate(product, p, q, alpha, variant).value
    rhs = parabolic_morrey_estimate(f, p1, q1, alpha, variant).value * parabolic_morrey_estimate(
        g, p2, q2, alpha, variant
    ).value
    if rhs == 0:
        logger.info("Degenerate Hölder input: both sides vanish")
        return HolderReport(ratio=0.0, lhs=lhs, rhs=rhs, degenerate=True)
    return HolderReport(ratio=lhs / rhs, lhs=lhs, rhs=rhs, degenerate=False)

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Final, List, Optional, Tuple, Union

import numpy as np

from fracbq.errors import ConfigError
from fracbq.fbf import write_field
from fracbq.reports import write_json
from fracbq.solver import ProblemData
from fracbq.spectral import RealArray, ScalarField, SpectralGrid, VectorField, curl_field, gradient, to_physical
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)

FAMILIES: Final = ("gaussian-bump", "multi-mode", "random-bandlimited")


@dataclass(frozen=True)
class DataSpec:
    family: str = "gaussian-bump"
    amplitude: float = 1e-3
    force_amplitude: Optional[float] = None
    band: int = 3

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown data family {self.family!r}, expected one of {', '.join(FAMILIES)}")
        if self.amplitude < 0:
            raise ConfigError(f"Amplitude {self.amplitude} must be nonnegative")
        if self.band < 1:
            raise ConfigError(f"Band {self.band} must be at least 1")

    @property
    def forcing(self) -> float:
        return self.amplitude if self.force_amplitude is None else self.force_amplitude

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _normalized(samples: RealArray) -> RealArray:
    scale = float(np.max(np.abs(samples)))
    return samples / scale if scale > 0 else samples


def _periodic_bump(grid: SpectralGrid, center: RealArray, width: float) -> RealArray:
    shift = grid.coordinates - center[(slice(None),) + (np.newaxis,) * grid.d]
    shift -= grid.L * np.round(shift / grid.L)
    return np.exp(-np.sum(shift**2, axis=0) / (2 * width**2))  # type: ignore[no-any-return]


def _bump_shape(grid: SpectralGrid, rng: np.random.Generator) -> RealArray:
    center = grid.L / 2 + rng.uniform(-grid.L / 32, grid.L / 32, size=grid.d)
    width = grid.L / 20 * (1 + 0.25 * rng.random())
    return _periodic_bump(grid, center, width)


def _multi_mode_shape(grid: SpectralGrid, band: int, rng: np.random.Generator, modes: int = 3) -> RealArray:
    samples = np.zeros(grid.shape)
    for _ in range(modes):
        index = np.zeros(grid.d, dtype=int)
        while not np.any(index):
            index = rng.integers(-band, band + 1, size=grid.d)
        phase = np.tensordot(grid.fundamental * index, grid.coordinates, axes=1)
        samples += rng.uniform(0.5, 1.0) * np.cos(phase + rng.uniform(0, 2 * np.pi))
    return samples


def _bandlimited_shape(grid: SpectralGrid, band: int, rng: np.random.Generator) -> RealArray:
    reach = np.max(np.stack(np.meshgrid(*([np.abs(grid.mode_indices)] * grid.d), indexing="ij")), axis=0)
    mask = (reach >= 1) & (reach <= band)
    coefficients = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return to_physical(np.where(mask, coefficients, 0.0), grid)


def random_shape(grid: SpectralGrid, family: str, band: int, rng: np.random.Generator) -> RealArray:
    """Mean-free sample array with unit max-norm from the named family."""
    if family == "gaussian-bump":
        samples = _bump_shape(grid, rng)
    elif family == "multi-mode":
        samples = _multi_mode_shape(grid, band, rng)
    elif family == "random-bandlimited":
        samples = _bandlimited_shape(grid, band, rng)
    else:
        raise ConfigError(f"Unknown data family {family!r}, expected one of {', '.join(FAMILIES)}")
    return _normalized(samples - np.mean(samples))


def random_velocity(grid: SpectralGrid, family: str, band: int, rng: np.random.Generator) -> VectorField:
    """Divergence-free velocity in curl form, unit max magnitude."""
    if grid.d == 2:
        velocity = curl_field(ScalarField(grid, random_shape(grid, family, band, rng)))
    else:
        potential = np.stack([random_shape(grid, family, band, rng) for _ in range(grid.d)])
        velocity = curl_field(VectorField(grid, potential))
    scale = float(np.max(velocity.magnitude()))
    return velocity * (1.0 / scale) if scale > 0 else velocity


def generate_data(grid: SpectralGrid, times: RealArray, spec: DataSpec, seed: int) -> ProblemData:
    rng = np.random.default_rng(seed)
    u0 = random_velocity(grid, spec.family, spec.band, rng) * spec.amplitude
    theta0 = ScalarField(grid, random_shape(grid, spec.family, spec.band, rng)) * spec.amplitude

    swirl = random_velocity(grid, spec.family, spec.band, rng)
    potential = gradient(ScalarField(grid, random_shape(grid, spec.family, spec.band, rng)))
    potential = potential * (1.0 / max(float(np.max(potential.magnitude())), 1e-300))
    profile = np.exp(-times)
    f = Trajectory.separable((swirl + potential) * spec.forcing, times, profile)
    heating = ScalarField(grid, random_shape(grid, spec.family, spec.band, rng))
    g = Trajectory.separable(heating * spec.forcing, times, profile)
    logger.info("Generated %s data with amplitude %g (seed %d)", spec.family, spec.amplitude, seed)
    return ProblemData(u0=u0, theta0=theta0, f=f, g=g)


def write_data(data: ProblemData, out_dir: Union[str, Path]) -> List[Path]:
    """FBF1 files for u0, θ0 and every force snapshot, plus a manifest with the time grid."""
    out_dir = Path(out_dir)
    written = [write_field(data.u0, out_dir / "u0.fbf"), write_field(data.theta0, out_dir / "theta0.fbf")]
    for name, trajectory in (("f", data.f), ("g", data.g)):
        for index in range(trajectory.nt):
            written.append(write_field(trajectory.snapshot(index), out_dir / name / f"{name}_{index:04d}.fbf"))
    manifest = write_json(
        out_dir / "manifest.json",
        {"times": data.times, "files": [str(path.relative_to(out_dir)) for path in written]},
    )
    return written + [manifest]


def generate_family(grid: SpectralGrid, size: int, seed: int, band: int = 3) -> List[Tuple[str, ScalarField]]:
    """Mean-free test functions cycling through the data families."""
    rng = np.random.default_rng(seed)
    members = []
    for index in range(size):
        family = FAMILIES[index % len(FAMILIES)]
        members.append((f"{family}-{index:02d}", ScalarField(grid, random_shape(grid, family, band, rng))))
    return members

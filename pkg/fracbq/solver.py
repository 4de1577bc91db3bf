"""Mild solutions by Picard iteration on ``U = U0 + F + L(U) + B(U, U)``.

Every term is a Duhamel integral ``∫_0^t 𝔭_{t-s} ∗ source(s) ds`` evaluated per Fourier mode
with the source interpolated linearly between time nodes and the exponential weight
integrated exactly.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from fracbq.errors import (
    DivergenceFreeError,
    GridError,
    IndexConstraintError,
    PicardDivergenceError,
    ProbeFamilyError,
)
from fracbq.indices import IndexFamily, derived_indices
from fracbq.norms import parabolic_morrey_norm
from fracbq.operators import leray_coefficients, momentum_defect_coefficients, pressure_from_state
from fracbq.spectral import (
    ComplexArray,
    RealArray,
    ScalarField,
    SpectralGrid,
    VectorField,
    curl_field,
    divergence,
    gradient,
    make_grid,
    product_coefficients,
    to_physical,
    to_spectral,
)
from fracbq.trajectory import Trajectory, graded_times

logger = logging.getLogger(__name__)

DIVERGENCE_TOLERANCE = 1e-10
BLOWUP_FACTOR = 1e6
STALL_LIMIT = 3
SERIES_THRESHOLD = 1e-3
MIN_PROBES = 20


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1.5
    d: int = 2
    n: int = 64
    L: float = 2 * math.pi
    T: float = 1.0
    nt: int = 64
    grading: float = 3.0
    p: float = 6.0
    gamma: float = 0.5
    delta_force: float = 0.5
    weight_c: float = 16.0
    smallness_delta: Optional[float] = None
    tol: float = 1e-10
    max_iter: int = 50
    temperature_sign: int = 1
    nonlinear: bool = True
    buoyancy: bool = True
    variant: str = "box"

    def __post_init__(self) -> None:
        if not 1 < self.alpha < 2:
            raise IndexConstraintError(f"alpha={self.alpha:g} must lie in the open interval (1, 2)")
        if not self.weight_c >= 1:
            raise IndexConstraintError(f"Composite norm weight c={self.weight_c:g} must be at least 1")
        if self.smallness_delta is not None and not self.smallness_delta > 0:
            raise IndexConstraintError(f"Smallness budget delta={self.smallness_delta:g} must be positive")
        if self.temperature_sign not in (1, -1):
            raise IndexConstraintError(f"temperature_sign must be +1 or -1, got {self.temperature_sign}")
        if self.variant not in ("ball", "box"):
            raise IndexConstraintError(f"Unknown parabolic region variant {self.variant!r}")

    @property
    def grid(self) -> SpectralGrid:
        return make_grid(self.d, self.n, self.L)

    @property
    def times(self) -> RealArray:
        return graded_times(self.T, self.nt, self.grading)

    @property
    def indices(self) -> IndexFamily:
        return derived_indices(self.alpha, self.d, self.p, self.gamma, self.delta_force)

    def with_weight(self, weight_c: float) -> "SolverConfig":
        return replace(self, weight_c=weight_c)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class BoussinesqState:
    velocity: Trajectory
    temperature: Trajectory

    def __post_init__(self) -> None:
        if not self.velocity.is_vector or self.temperature.is_vector:
            raise GridError("A state pairs a vector velocity trajectory with a scalar temperature trajectory")
        self.velocity.check_compatible(self.temperature)

    @property
    def grid(self) -> SpectralGrid:
        return self.velocity.grid

    @property
    def times(self) -> RealArray:
        return self.velocity.times

    @classmethod
    def zeros(cls, grid: SpectralGrid, times: RealArray) -> "BoussinesqState":
        return cls(Trajectory.zeros(grid, times, vector=True), Trajectory.zeros(grid, times, vector=False))

    def check_compatible(self, other: "BoussinesqState") -> None:
        self.velocity.check_compatible(other.velocity)

    def __add__(self, other: "BoussinesqState") -> "BoussinesqState":
        return BoussinesqState(self.velocity + other.velocity, self.temperature + other.temperature)

    def __sub__(self, other: "BoussinesqState") -> "BoussinesqState":
        return BoussinesqState(self.velocity - other.velocity, self.temperature - other.temperature)

    def __mul__(self, factor: float) -> "BoussinesqState":
        return BoussinesqState(self.velocity * factor, self.temperature * factor)

    __rmul__ = __mul__

    def max_divergence(self) -> float:
        grid = self.grid
        values = to_physical(
            np.sum(1j * grid.derivative_k * to_spectral(self.velocity.values, grid), axis=1), grid
        )
        return float(np.max(np.abs(values)))


@dataclass(frozen=True)
class ProblemData:
    """Initial data and forces; the forces carry the time grid."""

    u0: VectorField
    theta0: ScalarField
    f: Trajectory
    g: Trajectory

    def __post_init__(self) -> None:
        if not self.f.is_vector or self.g.is_vector:
            raise GridError("Forces pair a vector f with a scalar g")
        self.f.check_compatible(self.g)
        if self.u0.grid != self.f.grid or self.theta0.grid != self.f.grid:
            raise GridError("Initial data and forces live on different grids")

    @property
    def grid(self) -> SpectralGrid:
        return self.f.grid

    @property
    def times(self) -> RealArray:
        return self.f.times

    def __mul__(self, factor: float) -> "ProblemData":
        return ProblemData(self.u0 * factor, self.theta0 * factor, self.f * factor, self.g * factor)

    __rmul__ = __mul__


def phi_functions(z: RealArray) -> Tuple[RealArray, RealArray]:
    phi1 = special.exprel(-z)
    small = z < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    series = 0.5 - z / 6 + z**2 / 24 - z**3 / 120 + z**4 / 720
    phi2 = np.where(small, series, (1.0 - phi1) / safe)
    return phi1, phi2


def duhamel_coefficients(sources: ComplexArray, times: RealArray, grid: SpectralGrid, alpha: float) -> ComplexArray:
    """Exponential quadrature of ∫_0^t e^{-(t-s)|k|^α} ŝ(s) ds at every node, for sources (nt, ..., n, ..., n)."""
    rate = grid.k_norm**alpha
    result = np.zeros_like(sources)
    for index in range(len(times) - 1):
        step = times[index + 1] - times[index]
        z = rate * step
        phi1, phi2 = phi_functions(z)
        start, end = sources[index], sources[index + 1]
        result[index + 1] = np.exp(-z) * result[index] + step * (phi1 * start + phi2 * (end - start))
    return result


def duhamel(source: Trajectory, alpha: float) -> Trajectory:
    grid = source.grid
    coefficients = duhamel_coefficients(to_spectral(source.values, grid), source.times, grid, alpha)
    return source.replace(to_physical(coefficients, grid))


def free_evolution(u0: VectorField, theta0: ScalarField, times: RealArray, alpha: float) -> BoussinesqState:
    grid = u0.grid
    decay = np.exp(-np.asarray(times)[(slice(None),) + (np.newaxis,) * grid.d] * grid.k_norm[np.newaxis] ** alpha)
    velocity = to_physical(decay[:, np.newaxis] * to_spectral(u0.samples, grid)[np.newaxis], grid)
    temperature = to_physical(decay * to_spectral(theta0.samples, grid)[np.newaxis], grid)
    return BoussinesqState(Trajectory(grid, times, velocity), Trajectory(grid, times, temperature))


def _buoyancy_coefficients(temperature: Trajectory) -> ComplexArray:
    grid = temperature.grid
    lifted = np.zeros((temperature.nt, grid.d) + grid.shape, dtype=np.complex128)
    lifted[:, grid.d - 1] = to_spectral(temperature.values, grid)
    return leray_coefficients(lifted, grid)


def apply_L(state: BoussinesqState, alpha: float) -> BoussinesqState:
    """(∫ 𝔭_{t-s} ∗ P(θ e_d) ds, 0)."""
    grid = state.grid
    increments = duhamel_coefficients(_buoyancy_coefficients(state.temperature), state.times, grid, alpha)
    velocity = to_physical(increments, grid)
    return BoussinesqState(state.velocity.replace(velocity), state.temperature * 0.0)


def apply_B(
    first: BoussinesqState, second: BoussinesqState, alpha: float, temperature_sign: int = 1
) -> BoussinesqState:
    """(-∫ 𝔭_{t-s} ∗ P div(u ⊗ v) ds, ±∫ 𝔭_{t-s} ∗ div(θ v) ds) for U=(u, θ), V=(v, ·)."""
    first.check_compatible(second)
    grid = first.grid
    k = grid.derivative_k
    u, v, theta = first.velocity.values, second.velocity.values, first.temperature.values
    nt = len(first.times)
    momentum = np.zeros((nt, grid.d) + grid.shape, dtype=np.complex128)
    transport = np.zeros((nt,) + grid.shape, dtype=np.complex128)
    for l in range(grid.d):
        for j in range(grid.d):
            momentum[:, j] += 1j * k[l] * product_coefficients(u[:, j], v[:, l], grid)
        transport += 1j * k[l] * product_coefficients(theta, v[:, l], grid)
    velocity = -duhamel_coefficients(leray_coefficients(momentum, grid), first.times, grid, alpha)
    temperature = temperature_sign * duhamel_coefficients(transport, first.times, grid, alpha)
    return BoussinesqState(
        first.velocity.replace(to_physical(velocity, grid)), first.temperature.replace(to_physical(temperature, grid))
    )


def force_term(f: Trajectory, g: Trajectory, alpha: float) -> BoussinesqState:
    """(∫ 𝔭_{t-s} ∗ P f ds, ∫ 𝔭_{t-s} ∗ g ds)."""
    f.check_compatible(g)
    grid = f.grid
    projected = leray_coefficients(to_spectral(f.values, grid), grid)
    velocity = to_physical(duhamel_coefficients(projected, f.times, grid, alpha), grid)
    return BoussinesqState(f.replace(velocity), duhamel(g, alpha))


def composite_norm(state: BoussinesqState, config: SolverConfig) -> float:
    """‖u‖ in M^{p,(d+α)/(α-1)} plus c times ‖θ‖ in M^{𝔭,(d+α)/(2α-1)}, parabolic."""
    family = config.indices
    velocity = parabolic_morrey_norm(state.velocity, family.p, family.velocity_q, config.alpha, config.variant)
    temperature = parabolic_morrey_norm(
        state.temperature, family.p_theta, family.temperature_q, config.alpha, config.variant
    )
    return velocity + config.weight_c * temperature


def _fixed_point_map(base: BoussinesqState, state: BoussinesqState, config: SolverConfig) -> BoussinesqState:
    image = base
    if config.buoyancy:
        image = image + apply_L(state, config.alpha)
    if config.nonlinear:
        image = image + apply_B(state, state, config.alpha, config.temperature_sign)
    return image


def base_state(data: ProblemData, config: SolverConfig) -> BoussinesqState:
    """U0 + F."""
    return free_evolution(data.u0, data.theta0, data.times, config.alpha) + force_term(data.f, data.g, config.alpha)


def check_divergence_free(u0: VectorField) -> None:
    worst = float(np.max(np.abs(divergence(u0).samples)))
    scale = max(1.0, max(float(np.max(np.abs(gradient(component).samples))) for component in u0.components))
    if worst > DIVERGENCE_TOLERANCE * scale:
        raise DivergenceFreeError(f"Initial velocity has max |div u0| = {worst:.3e}; it must be divergence-free")


@dataclass
class PicardDiagnostics:
    residuals: List[float] = field(default_factory=list)
    contraction_factor: float = 0.0
    iterations: int = 0
    converged: bool = False
    data_norm: float = 0.0
    smallness_delta: float = 0.0
    solution_norm: float = 0.0
    final_residual: float = 0.0
    weight_c: float = 1.0
    C_L: Optional[float] = None
    C_B: Optional[float] = None
    observed_C_B: float = 0.0

    @property
    def bound_satisfied(self) -> bool:
        return self.solution_norm <= 3 * self.smallness_delta * (1 + 1e-12)

    @property
    def bilinear_constant(self) -> float:
        """The larger of the supplied C_B and the one observed at the fixed point."""
        return max(self.C_B or 0.0, self.observed_C_B)

    @property
    def linear_condition(self) -> Optional[bool]:
        return None if self.C_L is None else self.C_L < 1.0 / 3.0

    @property
    def smallness_condition(self) -> bool:
        return 9.0 * self.bilinear_constant * self.smallness_delta < 1.0

    @property
    def certified(self) -> bool:
        return self.smallness_condition and self.bound_satisfied

    @property
    def contraction_bound(self) -> Optional[float]:
        if self.C_L is None:
            return None
        return 9.0 * self.bilinear_constant * self.smallness_delta + self.C_L

    def as_dict(self) -> Dict[str, Any]:
        return dict(
            asdict(self),
            bound_satisfied=self.bound_satisfied,
            linear_condition=self.linear_condition,
            bilinear_constant=self.bilinear_constant,
            smallness_condition=self.smallness_condition,
            certified=self.certified,
            contraction_bound=self.contraction_bound,
        )


def _contraction_factor(residuals: Sequence[float]) -> float:
    ratios = [later / earlier for earlier, later in zip(residuals, residuals[1:]) if earlier > 0]
    if not ratios:
        return 0.0
    return max(ratios[1:] or ratios)


def observed_bilinear_constant(state: BoussinesqState, increment: BoussinesqState, config: SolverConfig) -> float:
    """Largest ‖B(U,V)‖_E/(‖U‖_E ‖V‖_E) over the pairs built from the fixed point and the last increment.

    The last contraction step moves along ``B(U, ΔU) + B(ΔU, U)``, so this is at least half the
    nonlinear part of the observed contraction factor divided by ``‖U‖_E``.
    """
    norms = {"state": composite_norm(state, config), "increment": composite_norm(increment, config)}
    members = {"state": state, "increment": increment}
    observed = 0.0
    for first, second in (("state", "state"), ("state", "increment"), ("increment", "state")):
        scale = norms[first] * norms[second]
        if scale > 0:
            image = apply_B(members[first], members[second], config.alpha, config.temperature_sign)
            observed = max(observed, composite_norm(image, config) / scale)
    return observed


def picard_solve(
    u0: VectorField,
    theta0: ScalarField,
    f: Trajectory,
    g: Trajectory,
    config: SolverConfig,
    constants: Optional[Tuple[float, float]] = None,
) -> Tuple[BoussinesqState, PicardDiagnostics]:
    data = ProblemData(u0, theta0, f, g)
    check_divergence_free(u0)
    base = base_state(data, config)
    data_norm = composite_norm(base, config)
    diagnostics = PicardDiagnostics(
        data_norm=data_norm,
        smallness_delta=config.smallness_delta if config.smallness_delta is not None else data_norm,
        weight_c=config.weight_c,
        C_L=constants[0] if constants else None,
        C_B=constants[1] if constants else None,
    )
    if config.smallness_delta is not None and data_norm > config.smallness_delta:
        raise PicardDivergenceError(
            f"Data norm {data_norm:.3e} exceeds the smallness budget delta={config.smallness_delta:.3e}; "
            "the data are too large for the smallness hypothesis",
            diagnostics,
        )
    if data_norm == 0.0:
        diagnostics.iterations = 1
        diagnostics.converged = True
        diagnostics.residuals.append(0.0)
        return base, diagnostics

    state = increment = base
    stalled = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for iteration in range(1, config.max_iter + 1):
            image = _fixed_point_map(base, state, config)
            increment = image - state
            difference = composite_norm(increment, config)
            previous = diagnostics.residuals[-1] if diagnostics.residuals else math.inf
            diagnostics.residuals.append(difference)
            diagnostics.iterations = iteration
            state = image
            logger.debug("Picard iteration %d: difference %.3e", iteration, difference)
            norm = composite_norm(state, config)
            stalled = stalled + 1 if difference >= previous else 0
            if not math.isfinite(norm) or not math.isfinite(difference) or norm > BLOWUP_FACTOR * data_norm:
                return _diverged(diagnostics, "iterates blew up", norm)
            if stalled >= STALL_LIMIT:
                return _diverged(diagnostics, f"{STALL_LIMIT} consecutive non-contracting steps", norm)
            if difference < config.tol:
                diagnostics.converged = True
                break
    diagnostics.contraction_factor = _contraction_factor(diagnostics.residuals)
    diagnostics.solution_norm = composite_norm(state, config)
    if not diagnostics.converged:
        return _diverged(diagnostics, f"no convergence after {config.max_iter} iterations", diagnostics.solution_norm)
    diagnostics.final_residual = composite_norm(state - _fixed_point_map(base, state, config), config)
    if config.nonlinear:
        diagnostics.observed_C_B = observed_bilinear_constant(state, increment, config)
    if not diagnostics.certified:
        budget = diagnostics.smallness_delta
        return _diverged(
            diagnostics,
            f"smallness certificate fails, 9·C_B·δ = {9 * diagnostics.bilinear_constant * budget:.3g} "
            f"and ‖U‖_E = {diagnostics.solution_norm:.3e} against 3δ = {3 * budget:.3e}",
            diagnostics.solution_norm,
        )
    logger.info(
        "Picard converged in %d iterations: ‖U‖_E=%.4e, data norm %.4e, contraction %.3f",
        diagnostics.iterations,
        diagnostics.solution_norm,
        data_norm,
        diagnostics.contraction_factor,
    )
    return state, diagnostics


def _diverged(diagnostics: PicardDiagnostics, reason: str, norm: float) -> Tuple[BoussinesqState, PicardDiagnostics]:
    diagnostics.contraction_factor = _contraction_factor(diagnostics.residuals)
    diagnostics.solution_norm = norm
    raise PicardDivergenceError(
        f"Picard iteration failed to converge ({reason}); the data are too large for the smallness hypothesis "
        f"(data norm {diagnostics.data_norm:.3e}, contraction factor {diagnostics.contraction_factor:.3g})",
        diagnostics,
    )


def residual(
    state: BoussinesqState, u0: VectorField, theta0: ScalarField, f: Trajectory, g: Trajectory, config: SolverConfig
) -> float:
    """‖U - (U0 + F + L(U) + B(U, U))‖_E."""
    base = base_state(ProblemData(u0, theta0, f, g), config)
    return composite_norm(state - _fixed_point_map(base, state, config), config)


@dataclass(frozen=True)
class ConstantEstimates:
    C_L: float
    C_B: float
    probes: int
    weight_c: float

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _random_mean_free(grid: SpectralGrid, band: int, rng: np.random.Generator) -> RealArray:
    """Unit-size random-phase trigonometric polynomial with modes 1 <= max|index| <= band."""
    indices = np.abs(grid.mode_indices)
    grids = np.meshgrid(*([indices] * grid.d), indexing="ij")
    reach = np.max(np.stack(grids), axis=0)
    mask = (reach >= 1) & (reach <= band)
    phases = np.exp(2j * np.pi * rng.random(grid.shape))
    samples = to_physical(np.where(mask, phases, 0.0), grid)
    return samples / np.max(np.abs(samples))  # type: ignore[no-any-return]


def probe_family(
    config: SolverConfig, count: int, seed: int, band: int = 3, amplitude: float = 1e-3
) -> List[BoussinesqState]:
    """Seeded small states with divergence-free velocities and decaying time profiles."""
    rng = np.random.default_rng(seed)
    grid, times = config.grid, config.times
    probes = []
    for _ in range(count):
        if grid.d == 2:
            velocity = curl_field(ScalarField(grid, _random_mean_free(grid, band, rng)))
        else:
            potential = np.stack([_random_mean_free(grid, band, rng) for _ in range(grid.d)])
            velocity = curl_field(VectorField(grid, potential))
        velocity = velocity * (1.0 / float(np.max(velocity.magnitude())))
        temperature = ScalarField(grid, _random_mean_free(grid, band, rng))
        rates = rng.uniform(0.0, 2.0, size=2)
        probes.append(
            BoussinesqState(
                Trajectory.separable(velocity * amplitude, times, np.exp(-rates[0] * times)),
                Trajectory.separable(temperature * amplitude, times, np.exp(-rates[1] * times)),
            )
        )
    return probes


def estimate_constants(config: SolverConfig, probes: Sequence[BoussinesqState]) -> ConstantEstimates:
    """Empirical sup of ‖L(U)‖_E/‖U‖_E and of ‖B(U,V)‖_E/(‖U‖_E ‖V‖_E) over the probes."""
    if len(probes) < MIN_PROBES:
        raise ProbeFamilyError(f"Constant estimates need at least {MIN_PROBES} probes, got {len(probes)}")
    norms = [composite_norm(probe, config) for probe in probes]
    usable = [(probe, norm) for probe, norm in zip(probes, norms) if norm > 0]
    skipped = len(probes) - len(usable)
    if skipped:
        logger.info("Skipping %d zero-norm probes", skipped)

    linear = estimate_linear_constant(config, [probe for probe, _ in usable])
    bilinear = 0.0
    for first, first_norm in usable:
        for second, second_norm in usable:
            image = apply_B(first, second, config.alpha, config.temperature_sign)
            bilinear = max(bilinear, composite_norm(image, config) / (first_norm * second_norm))
    logger.info("Estimated C_L=%.4g, C_B=%.4g from %d probes at c=%g", linear, bilinear, len(usable), config.weight_c)
    return ConstantEstimates(C_L=linear, C_B=bilinear, probes=len(usable), weight_c=config.weight_c)


def weight_sweep(
    config: SolverConfig, probes: Sequence[BoussinesqState], weights: Sequence[float] = (1.0, 4.0, 16.0)
) -> Dict[float, float]:
    """C_L estimate per composite-norm weight."""
    return {weight: estimate_linear_constant(config.with_weight(weight), probes) for weight in weights}


def estimate_linear_constant(config: SolverConfig, probes: Sequence[BoussinesqState]) -> float:
    """Each probe also contributes its temperature-only part, which attains the sup of the ratio."""
    linear = 0.0
    for probe in probes:
        thermal = BoussinesqState(probe.velocity * 0.0, probe.temperature)
        for candidate in (probe, thermal):
            norm = composite_norm(candidate, config)
            if norm > 0:
                linear = max(linear, composite_norm(apply_L(candidate, config.alpha), config) / norm)
    return linear


def tune_weight(
    config: SolverConfig, probes: Sequence[BoussinesqState], margin: float = 0.5, max_doublings: int = 16
) -> Tuple[SolverConfig, float]:
    """Double the weight until the estimated C_L is below ``margin / 3``."""
    tuned = config
    linear = estimate_linear_constant(tuned, probes)
    for _ in range(max_doublings):
        if linear < margin / 3.0:
            break
        tuned = tuned.with_weight(2 * tuned.weight_c)
        linear = estimate_linear_constant(tuned, probes)
    logger.info("Composite weight c=%g gives C_L=%.4g", tuned.weight_c, linear)
    return tuned, linear


def pressure_consistency(state: BoussinesqState, f: Trajectory) -> float:
    """Relative defect between -div(u⊗u) - ∇p + θe_d + f and -P(div(u⊗u) - f - θe_d) along the state."""
    state.velocity.check_compatible(f)
    grid = state.grid
    worst = 0.0
    for index in range(len(state.times)):
        u = state.velocity.values[index]
        theta = state.temperature.values[index]
        force = f.values[index]
        defect = momentum_defect_coefficients(u, theta, force, grid)
        p = pressure_from_state(VectorField(grid, u), ScalarField(grid, theta), VectorField(grid, force))
        balance = -defect - 1j * grid.derivative_k * to_spectral(p.samples, grid)[np.newaxis]
        projected = -leray_coefficients(defect, grid)
        scale = float(np.max(np.abs(to_physical(defect, grid))))
        if scale == 0:
            continue
        mismatch = float(np.max(np.abs(to_physical(balance - projected, grid))))
        worst = max(worst, mismatch / scale)
    return worst

"""Second-order exponential time differencing for the differential form of the system.

Serves as an integrator independent of the fixed-point formulation: the pressure is
removed by projecting the momentum balance, and the stiff diffusion is integrated exactly.
"""
import logging
from typing import Tuple

import numpy as np

from fracbq.errors import EtdInstabilityError
from fracbq.operators import leray_coefficients
from fracbq.solver import (
    BLOWUP_FACTOR,
    BoussinesqState,
    ProblemData,
    SolverConfig,
    check_divergence_free,
    phi_functions,
)
from fracbq.spectral import ComplexArray, ScalarField, VectorField, product_coefficients, to_physical, to_spectral
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)


def _nonlinearity(
    velocity: ComplexArray,
    temperature: ComplexArray,
    force: ComplexArray,
    heat_source: ComplexArray,
    data: ProblemData,
    config: SolverConfig,
) -> Tuple[ComplexArray, ComplexArray]:
    """P[-div(u⊗u) + θe_d + f] and ±div(θu) + g in coefficient space."""
    grid = data.grid
    k = grid.derivative_k
    momentum = force.copy()
    transport = heat_source.copy()
    if config.buoyancy:
        momentum[grid.d - 1] += temperature
    if config.nonlinear:
        u = to_physical(velocity, grid)
        theta = to_physical(temperature, grid)
        for l in range(grid.d):
            for j in range(grid.d):
                momentum[j] -= 1j * k[l] * product_coefficients(u[j], u[l], grid)
            transport += config.temperature_sign * 1j * k[l] * product_coefficients(theta, u[l], grid)
    return leray_coefficients(momentum, grid), transport


def etd_reference_solve(
    u0: VectorField, theta0: ScalarField, f: Trajectory, g: Trajectory, config: SolverConfig
) -> BoussinesqState:
    data = ProblemData(u0, theta0, f, g)
    check_divergence_free(u0)
    grid, times = data.grid, data.times
    scale = max(float(np.max(np.abs(array))) for array in (u0.samples, theta0.samples, f.values, g.values))
    if scale == 0.0:
        return BoussinesqState.zeros(grid, times)

    forces = to_spectral(f.values, grid)
    heat_sources = to_spectral(g.values, grid)
    rate = grid.k_norm**config.alpha
    velocity = to_spectral(u0.samples, grid)
    temperature = to_spectral(theta0.samples, grid)
    velocities = [velocity]
    temperatures = [temperature]
    for index in range(len(times) - 1):
        step = times[index + 1] - times[index]
        z = rate * step
        decay = np.exp(-z)
        phi1, phi2 = phi_functions(z)
        n_velocity, n_temperature = _nonlinearity(
            velocity, temperature, forces[index], heat_sources[index], data, config
        )
        stage_velocity = decay * velocity + step * phi1 * n_velocity
        stage_temperature = decay * temperature + step * phi1 * n_temperature
        s_velocity, s_temperature = _nonlinearity(
            stage_velocity, stage_temperature, forces[index + 1], heat_sources[index + 1], data, config
        )
        velocity = stage_velocity + step * phi2 * (s_velocity - n_velocity)
        temperature = stage_temperature + step * phi2 * (s_temperature - n_temperature)
        size = max(float(np.max(np.abs(velocity))), float(np.max(np.abs(temperature))))
        if not np.isfinite(size) or size > BLOWUP_FACTOR * scale:
            raise EtdInstabilityError(
                f"Exponential integrator blew up at step {index + 1} (t={times[index + 1]:.4g})", step=index + 1
            )
        velocities.append(velocity)
        temperatures.append(temperature)
    logger.debug("Reference integration finished over %d steps", len(times) - 1)
    return BoussinesqState(
        Trajectory(grid, times, to_physical(np.stack(velocities), grid)),
        Trajectory(grid, times, to_physical(np.stack(temperatures), grid)),
    )

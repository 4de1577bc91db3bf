import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fracbq.errors import IllPosedZeroModeError, OperatorError
from fracbq.operators import (
    MultiplierSpec,
    apply_multiplier,
    fractional_laplacian,
    heat_propagate,
    leray_project,
    pressure_from_state,
    pressure_residual,
    radial_symbol,
    riesz_smoothing,
)
from fracbq.spectral import ScalarField, VectorField, curl_field, divergence, gradient, make_grid

GRID = make_grid(2, 16, 2 * math.pi)
X, Y = GRID.coordinates


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
def test_fractional_laplacian_of_eigenfunction(alpha: float) -> None:
    field = ScalarField(GRID, np.sin(2 * X))

    assert_allclose(fractional_laplacian(field, alpha).samples, 2**alpha * field.samples, atol=1e-12)


def test_fractional_laplacian_needs_positive_order() -> None:
    with pytest.raises(OperatorError):
        fractional_laplacian(ScalarField(GRID, np.sin(X)), 0.0)


def test_heat_propagate_damps_each_mode() -> None:
    field = ScalarField(GRID, 1.0 + np.cos(X) * np.cos(Y))

    result = heat_propagate(field, 0.3, 1.5)

    assert_allclose(result.samples, 1.0 + math.exp(-0.3 * math.sqrt(2) ** 1.5) * np.cos(X) * np.cos(Y), atol=1e-13)


def test_heat_propagate_at_zero_copies() -> None:
    field = ScalarField(GRID, np.sin(X))

    result = heat_propagate(field, 0.0, 2.0)

    assert result.samples is not field.samples
    assert_allclose(result.samples, field.samples)


@pytest.mark.parametrize("t, alpha", [(-0.1, 1.5), (0.1, 0.5), (0.1, 2.5)])
def test_heat_propagate_rejects(t: float, alpha: float) -> None:
    with pytest.raises(OperatorError):
        heat_propagate(ScalarField(GRID, np.sin(X)), t, alpha)


def test_leray_removes_gradients_and_keeps_curls() -> None:
    potential = ScalarField(GRID, np.sin(X) * np.cos(2 * Y))
    stream = ScalarField(GRID, np.cos(3 * X) + np.sin(X + Y))

    assert_allclose(leray_project(gradient(potential)).samples, 0.0, atol=1e-12)
    solenoidal = curl_field(stream)
    assert_allclose(leray_project(solenoidal).samples, solenoidal.samples, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_leray_is_an_idempotent_projection(seed: int) -> None:
    grid = make_grid(3, 8, 1.0)
    field = VectorField(grid, np.random.default_rng(seed).standard_normal((3,) + grid.shape))

    projected = leray_project(field)

    assert_allclose(divergence(projected).samples, 0.0, atol=1e-10)
    assert_allclose(leray_project(projected).samples, projected.samples, atol=1e-12)


def test_riesz_smoothing_divides_by_wavenumber() -> None:
    field = ScalarField(GRID, np.sin(2 * X))

    assert_allclose(riesz_smoothing(field, 0.5).samples, 2**-0.5 * field.samples, atol=1e-12)


def test_riesz_smoothing_requires_mean_free_input() -> None:
    with pytest.raises(IllPosedZeroModeError):
        riesz_smoothing(ScalarField(GRID, 1.0 + np.sin(X)), 0.5)
    with pytest.raises(OperatorError):
        riesz_smoothing(ScalarField(GRID, np.sin(X)), 0.0)


def test_zero_mode_policies() -> None:
    k = np.zeros((2, 1))

    assert radial_symbol(0.0).evaluate(k)[0] == 1.0
    assert radial_symbol(-1.0).evaluate(k)[0] == 0.0
    with pytest.raises(OperatorError):
        MultiplierSpec(symbol=lambda k: k[0], degree=1.0, zero_mode="nan")


def test_apply_multiplier_with_custom_symbol() -> None:
    spec = MultiplierSpec(symbol=lambda k: 1j * k[1], degree=1.0)
    field = ScalarField(GRID, np.cos(3 * Y))

    assert_allclose(apply_multiplier(field, spec).samples, -3 * np.sin(3 * Y), atol=1e-12)


def test_hydrostatic_pressure_balances_buoyancy() -> None:
    u = VectorField(GRID, np.zeros((2,) + GRID.shape))
    theta = ScalarField(GRID, np.cos(Y))

    p = pressure_from_state(u, theta)

    assert_allclose(p.samples, np.sin(Y), atol=1e-12)
    assert pressure_residual(p, u, theta) < 1e-12


def test_pressure_residual_of_a_moving_state() -> None:
    u = curl_field(ScalarField(GRID, np.sin(X) * np.sin(Y)))
    theta = ScalarField(GRID, np.cos(X + Y))
    f = VectorField(GRID, np.stack([np.sin(2 * Y), np.cos(X)]))

    p = pressure_from_state(u, theta, f)

    assert pressure_residual(p, u, theta, f) < 1e-10
    assert pressure_residual(p * 2.0, u, theta, f) > 0.5

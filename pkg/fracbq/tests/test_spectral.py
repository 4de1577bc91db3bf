import math
from typing import NamedTuple

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracbq.errors import FieldFormatError, GridError
from fracbq.spectral import (
    ScalarField,
    VectorField,
    curl_field,
    dealiased_product,
    divergence,
    forward_transform,
    gradient,
    inverse_transform,
    laplacian,
    make_grid,
    spectral_derivative,
)


class InvalidGridData(NamedTuple):
    d: int
    n: int
    L: float
    message: str


@pytest.mark.parametrize(
    "data",
    [
        InvalidGridData(1, 16, 1.0, "at least 2"),
        InvalidGridData(2, 15, 1.0, "must be even"),
        InvalidGridData(2, 6, 1.0, "at least 8"),
        InvalidGridData(2, 16, 0.0, "must be positive"),
    ],
    ids=["dimension", "odd", "small", "length"],
)
def test_invalid_grid(data: InvalidGridData) -> None:
    with pytest.raises(GridError, match=data.message):
        make_grid(data.d, data.n, data.L)


def test_mode_indices_store_nyquist_as_positive() -> None:
    grid = make_grid(2, 8, 1.0)

    assert grid.mode_indices.tolist() == [0, 1, 2, 3, 4, -3, -2, -1]
    assert grid.derivative_k[0, 4, 0] == 0.0
    assert grid.k_vectors[0, 4, 0] == pytest.approx(8 * math.pi)


def test_grid_arrays_are_read_only() -> None:
    grid = make_grid(2, 8, 1.0)

    with pytest.raises(ValueError):
        grid.k_norm[0, 0] = 1.0


def test_derivative_of_sine() -> None:
    grid = make_grid(2, 16, 2 * math.pi)
    x, y = grid.coordinates
    field = ScalarField(grid, np.sin(3 * x) * np.cos(y))

    assert_allclose(spectral_derivative(field, 0).samples, 3 * np.cos(3 * x) * np.cos(y), atol=1e-12)
    assert_allclose(spectral_derivative(field, 1).samples, -np.sin(3 * x) * np.sin(y), atol=1e-12)
    with pytest.raises(GridError):
        spectral_derivative(field, 2)


def test_laplacian_of_eigenfunction() -> None:
    grid = make_grid(2, 16, 2 * math.pi)
    x, y = grid.coordinates
    field = ScalarField(grid, np.sin(2 * x) * np.cos(3 * y))

    assert_allclose(laplacian(field).samples, -13 * field.samples, atol=1e-11)


def test_gradient_matches_derivatives_on_a_rescaled_box() -> None:
    grid = make_grid(2, 16, 4.0)
    x, y = grid.coordinates
    w = 2 * math.pi / 4.0
    field = ScalarField(grid, np.cos(w * x) + np.sin(2 * w * y))

    result = gradient(field)

    assert_allclose(result.samples[0], -w * np.sin(w * x), atol=1e-12)
    assert_allclose(result.samples[1], 2 * w * np.cos(2 * w * y), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_curl_field_is_divergence_free(d: int) -> None:
    grid = make_grid(d, 8, 2 * math.pi)
    rng = np.random.default_rng(1)
    if d == 2:
        stream = ScalarField(grid, rng.standard_normal(grid.shape))
        velocity = curl_field(stream)
    else:
        velocity = curl_field(VectorField(grid, rng.standard_normal((d,) + grid.shape)))

    assert_allclose(divergence(velocity).samples, 0.0, atol=1e-12)


def test_curl_field_rejects_wrong_kind() -> None:
    grid = make_grid(2, 8, 1.0)

    with pytest.raises(GridError):
        curl_field(VectorField(grid, np.zeros((2,) + grid.shape)))


def test_transform_round_trip() -> None:
    grid = make_grid(2, 8, 1.0)
    samples = np.random.default_rng(2).standard_normal((2,) + grid.shape)

    restored = inverse_transform(forward_transform(VectorField(grid, samples)), grid)

    assert isinstance(restored, VectorField)
    assert_allclose(restored.samples, samples, atol=1e-13)


def test_dealiased_product_is_exact_for_low_modes() -> None:
    grid = make_grid(2, 16, 2 * math.pi)
    x, y = grid.coordinates
    first = ScalarField(grid, np.cos(2 * x))
    second = ScalarField(grid, np.sin(y) + 1.0)

    assert_allclose(dealiased_product(first, second).samples, first.samples * second.samples, atol=1e-12)


def test_dealiased_product_drops_high_modes() -> None:
    grid = make_grid(2, 16, 2 * math.pi)
    x, _ = grid.coordinates
    high = ScalarField(grid, np.cos(6 * x))

    assert_allclose(dealiased_product(high, high).samples, 0.0, atol=1e-12)


def test_fields_validate_samples() -> None:
    grid = make_grid(2, 8, 1.0)

    with pytest.raises(FieldFormatError):
        ScalarField(grid, np.zeros((8, 4)))
    with pytest.raises(FieldFormatError):
        ScalarField(grid, np.full(grid.shape, np.nan))
    with pytest.raises(FieldFormatError):
        VectorField(grid, np.zeros(grid.shape))


def test_arithmetic_needs_matching_grids() -> None:
    first = ScalarField(make_grid(2, 8, 1.0), np.ones((8, 8)))
    second = ScalarField(make_grid(2, 8, 2.0), np.ones((8, 8)))

    assert_allclose((2.0 * first - first).samples, 1.0)
    with pytest.raises(GridError):
        first + second

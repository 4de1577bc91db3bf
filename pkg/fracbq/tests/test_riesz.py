import math
from typing import Tuple

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracbq.errors import ExponentMismatchError, IndexConstraintError
from fracbq.riesz import holder_check, parabolic_riesz, riesz_boundedness_ratio, riesz_target_exponents
from fracbq.spectral import ScalarField, make_grid
from fracbq.trajectory import Trajectory, graded_times

GRID = make_grid(2, 16, 2 * math.pi)
X, Y = GRID.coordinates
TIMES = graded_times(1.0, 8)


def _trajectory(samples: np.ndarray, rate: float = 1.0) -> Trajectory:
    return Trajectory.separable(ScalarField(GRID, samples), TIMES, lambda t: np.exp(-rate * t))


def test_target_exponent_factor() -> None:
    assert riesz_target_exponents(2.0, 4.0, 0.5, 1.5, 2) == pytest.approx(1 - 2 / 3.5)
    with pytest.raises(IndexConstraintError, match="beta=1 must satisfy"):
        riesz_target_exponents(2.0, 4.0, 1.0, 1.5, 2)


def test_parabolic_riesz_is_linear_and_positive() -> None:
    psi = _trajectory(np.exp(np.cos(X) * np.sin(Y)))

    image = parabolic_riesz(psi, 0.5, 1.5)

    assert np.all(image.values > 0)
    assert_allclose(parabolic_riesz(psi * 2.0, 0.5, 1.5).values, 2 * image.values, rtol=1e-12)


def test_parabolic_riesz_rejects_order() -> None:
    with pytest.raises(IndexConstraintError):
        parabolic_riesz(_trajectory(np.ones(GRID.shape)), 3.5, 1.5)


def test_riesz_boundedness_ratio_is_scale_free() -> None:
    psi = _trajectory(np.cos(X) + np.sin(2 * Y))

    ratio = riesz_boundedness_ratio(psi, 2.0, 4.0, 0.5, 1.5)

    assert 0.0 < ratio < math.inf
    assert riesz_boundedness_ratio(psi * 5.0, 2.0, 4.0, 0.5, 1.5) == pytest.approx(ratio, rel=1e-9)
    assert riesz_boundedness_ratio(psi * 0.0, 2.0, 4.0, 0.5, 1.5) == 0.0


@pytest.mark.parametrize("exponents", [(2.0, 4.0, 2.0, 4.0), (2.0, 4.0, 4.0, 8.0), (3.0, 6.0, 6.0, 12.0)])
@pytest.mark.parametrize("variant", ["ball", "box"])
def test_holder_inequality_holds(exponents: Tuple[float, float, float, float], variant: str) -> None:
    first = _trajectory(np.exp(np.cos(X + Y)), rate=0.5)
    second = _trajectory(np.sin(3 * X) * np.cos(Y), rate=2.0)

    report = holder_check(first, second, *exponents, alpha=1.5, variant=variant)

    assert not report.degenerate
    assert report.passed
    assert report.as_dict()["passed"] is True


def test_holder_with_vanishing_input_is_degenerate() -> None:
    zero = _trajectory(np.zeros(GRID.shape))

    report = holder_check(zero, _trajectory(np.cos(X)), 2.0, 4.0, 2.0, 4.0, alpha=1.5)

    assert report.degenerate
    assert report.passed


def test_holder_exponent_mismatch() -> None:
    psi = _trajectory(np.cos(X))

    with pytest.raises(ExponentMismatchError, match="exceeds 1"):
        holder_check(psi, psi, 1.0, 2.0, 1.0, 2.0, alpha=1.5)
    with pytest.raises(ExponentMismatchError, match="p1 <= q1"):
        holder_check(psi, psi, 4.0, 2.0, 4.0, 8.0, alpha=1.5)

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracbq.errors import IndexConstraintError
from fracbq.norms import (
    NormEstimate,
    NormReport,
    besov_estimate,
    besov_times,
    heat_extension,
    heat_time_scale,
    index_radii,
    morrey_estimate,
    morrey_norm,
    parabolic_morrey_estimate,
    parabolic_morrey_norm,
    sobolev_morrey_norm,
    tlm_estimate,
)
from fracbq.scaling import rescale_trajectory
from fracbq.spectral import ScalarField, VectorField, make_grid
from fracbq.trajectory import Trajectory, graded_times

GRID = make_grid(2, 16, 2 * math.pi)
X, Y = GRID.coordinates


def _constant_trajectory() -> Trajectory:
    return Trajectory.constant(ScalarField(GRID, np.ones(GRID.shape)), graded_times(1.0, 8))


def _decaying_trajectory(samples: np.ndarray) -> Trajectory:
    times = graded_times(1.0, 8)
    return Trajectory.separable(ScalarField(GRID, samples), times, np.exp(-2.0 * times))


def test_index_radii_stop_at_the_covering_region() -> None:
    assert index_radii(GRID, "ball") == [1, 2, 4, 8, 16]
    assert index_radii(GRID, "box") == [1, 2, 4, 8]
    assert index_radii(GRID, "box", span=100.0, alpha=2.0) == [1, 2, 4, 8, 16, 32]


def test_morrey_with_equal_exponents_is_the_lebesgue_norm() -> None:
    samples = np.random.default_rng(3).standard_normal(GRID.shape)
    field = ScalarField(GRID, samples)

    estimate = morrey_estimate(field, 2.0, 2.0)

    expected = math.sqrt(float(np.sum(samples**2)) * GRID.cell_volume)
    assert estimate.refined == pytest.approx(expected, rel=1e-10)
    assert estimate.value == pytest.approx(expected, rel=1e-10)


def test_morrey_is_homogeneous_and_translation_invariant() -> None:
    field = ScalarField(GRID, np.exp(np.cos(X) + np.sin(2 * Y)))
    shifted = field.replace(np.roll(field.samples, (3, 5), axis=(0, 1)))

    base = morrey_norm(field, 2.0, 4.0)

    assert morrey_norm(field * 3.0, 2.0, 4.0) == pytest.approx(3 * base, rel=1e-10)
    assert morrey_estimate(shifted, 2.0, 4.0).refined == pytest.approx(morrey_estimate(field, 2.0, 4.0).refined)


def test_morrey_of_vector_field_uses_magnitude() -> None:
    vector = VectorField(GRID, np.stack([np.cos(X), np.sin(X)]))

    assert morrey_norm(vector, 2.0, 2.0) == pytest.approx(2 * math.pi, rel=1e-10)


def test_morrey_rejects_bad_exponents() -> None:
    with pytest.raises(IndexConstraintError):
        morrey_norm(ScalarField(GRID, np.ones(GRID.shape)), 4.0, 2.0)


@pytest.mark.parametrize("variant", ["ball", "box"])
def test_parabolic_morrey_of_a_constant(variant: str) -> None:
    estimate = parabolic_morrey_estimate(_constant_trajectory(), 2.0, 2.0, 1.5, variant)

    assert estimate.value == pytest.approx(2 * math.pi, rel=1e-10)
    assert estimate.gap == pytest.approx(0.0, abs=1e-9)


def test_averaged_parabolic_morrey_of_a_constant() -> None:
    estimate = parabolic_morrey_estimate(_constant_trajectory(), 2.0, 2.0, 1.5, "box", averaged=True)

    assert estimate.value == pytest.approx(math.pi**1.75, rel=1e-10)


def test_parabolic_morrey_rejects() -> None:
    psi = _constant_trajectory()

    with pytest.raises(IndexConstraintError):
        parabolic_morrey_norm(psi, 2.0, 4.0, 2.5)
    with pytest.raises(IndexConstraintError):
        parabolic_morrey_norm(psi, 2.0, 4.0, 1.5, variant="cube")


def test_sobolev_morrey_smooths_each_snapshot() -> None:
    field = ScalarField(GRID, np.sin(2 * X))
    times = graded_times(1.0, 8)

    smoothed = sobolev_morrey_norm(Trajectory.constant(field, times), 1.0, 2.0, 2.0, 1.5)
    direct = parabolic_morrey_norm(Trajectory.constant(field * 0.5, times), 2.0, 2.0, 1.5)

    assert smoothed == pytest.approx(direct, rel=1e-10)


def test_heat_extension_starts_from_the_field() -> None:
    field = ScalarField(GRID, np.cos(X))

    extension = heat_extension(field, 1.5)

    assert extension.times[0] == 0.0
    assert_allclose(extension.snapshot(0).samples, field.samples, atol=1e-14)
    assert_allclose(extension.final.samples, math.exp(-extension.times[-1]) * field.samples, atol=1e-14)


def test_besov_on_a_single_mode() -> None:
    field = ScalarField(GRID, np.cos(X))
    peak = 1.0 / 1.5

    estimate = besov_estimate(field, 1.0, 1.5, times=np.array([0.25, peak, 2.0]))

    assert estimate.value == pytest.approx(peak**peak * math.exp(-peak), rel=1e-12)


def test_besov_rejects() -> None:
    field = ScalarField(GRID, np.cos(X))

    with pytest.raises(IndexConstraintError):
        besov_estimate(field, 0.0, 1.5)
    with pytest.raises(IndexConstraintError):
        besov_estimate(field, 1.0, 1.5, times=np.array([]))


def test_default_heat_time_scale() -> None:
    assert heat_time_scale(GRID, 1.5) == pytest.approx(1.0)
    assert heat_time_scale(make_grid(2, 16, 4 * math.pi), 2.0) == pytest.approx(4.0)


def test_tlm_on_a_single_mode() -> None:
    field = ScalarField(GRID, np.cos(X))

    estimate = tlm_estimate(field, -0.75, 2.0, 2.0, 1.5)

    # inner time integral is Γ(1)/2, then the L^2 norm of cos over the torus
    assert estimate.value == pytest.approx(math.pi, rel=1e-2)
    assert 0.0 < estimate.tail_bound < math.inf


def test_tlm_tail_is_unbounded_with_a_mean() -> None:
    estimate = tlm_estimate(ScalarField(GRID, 1.0 + np.cos(X)), -0.75, 2.0, 4.0, 1.5)

    assert estimate.tail_bound == math.inf


def test_tlm_rejects_nonnegative_regularity() -> None:
    with pytest.raises(IndexConstraintError):
        tlm_estimate(ScalarField(GRID, np.cos(X)), 0.5, 2.0, 4.0, 1.5)


def test_norm_report_records_gap() -> None:
    report = NormReport.from_estimate("morrey", {"p": 2.0}, NormEstimate(value=1.0, refined=1.25, tail_bound=0.5))

    assert report.as_dict() == {
        "norm_name": "morrey",
        "params": {"p": 2.0},
        "value": 1.0,
        "refinement_gap": 0.25,
        "tail_bound": 0.5,
        "extras": {},
    }


def test_besov_default_times_follow_the_box() -> None:
    grid = make_grid(2, 16, math.pi)

    times = besov_times(grid, 1.5)

    scale = 0.5**1.5
    assert len(times) == 18 * 4 + 1
    assert times[0] == pytest.approx(scale * 2.0**-12, rel=1e-12)
    assert times[-1] == pytest.approx(scale * 2.0**6, rel=1e-12)
    assert_allclose(besov_times(GRID, 1.5), times / scale, rtol=1e-12)


@pytest.mark.parametrize("variant", ["ball", "box"])
def test_parabolic_morrey_dilation(variant: str) -> None:
    psi = _decaying_trajectory(np.exp(np.cos(X) + np.sin(2 * Y)))
    p, q, alpha = 2.0, 4.0, 1.5

    dilated = rescale_trajectory(psi, 2.0, 0.0, alpha)

    expected = 2.0 ** (-(2 + alpha) / q) * parabolic_morrey_norm(psi, p, q, alpha, variant)
    assert parabolic_morrey_norm(dilated, p, q, alpha, variant) == pytest.approx(expected, rel=1e-6)


def test_norm_estimates_are_subadditive() -> None:
    first = ScalarField(GRID, np.cos(X) + 0.5 * np.sin(2 * Y))
    second = ScalarField(GRID, np.sin(X) * np.cos(2 * Y) + 0.3 * np.cos(3 * X))
    total = first + second
    estimators = {
        "morrey": lambda f: morrey_norm(f, 2.0, 4.0),
        "besov": lambda f: besov_estimate(f, 1.0, 1.5).value,
        "tlm": lambda f: tlm_estimate(f, -0.75, 2.0, 4.0, 1.5).value,
        "box": lambda f: parabolic_morrey_norm(heat_extension(f, 1.5, graded_times(1.0, 8)), 2.0, 4.0, 1.5, "box"),
        "ball": lambda f: parabolic_morrey_norm(heat_extension(f, 1.5, graded_times(1.0, 8)), 2.0, 4.0, 1.5, "ball"),
    }

    for name, norm in estimators.items():
        assert norm(total) <= (1 + 1e-9) * (norm(first) + norm(second)), name


def test_ball_and_box_regions_agree_up_to_a_constant() -> None:
    psi = _decaying_trajectory(np.exp(np.cos(X) + np.sin(2 * Y)))

    ball = parabolic_morrey_norm(psi, 2.0, 4.0, 1.5, "ball")
    box = parabolic_morrey_norm(psi, 2.0, 4.0, 1.5, "box")

    assert ball <= box * (1 + 1e-12)
    assert box <= 4.0 * ball


def test_refining_the_centers_never_lowers_the_estimate() -> None:
    field = ScalarField(GRID, np.exp(np.cos(X + 0.3) + np.sin(2 * Y + 0.7)))
    psi = _decaying_trajectory(field.samples)

    morrey = [morrey_estimate(field, 2.0, 4.0, stride=stride) for stride in (4, 2, 1)]
    parabolic = [parabolic_morrey_estimate(psi, 2.0, 4.0, 1.5, stride=stride) for stride in (4, 2, 1)]

    for estimates in (morrey, parabolic):
        values = [estimate.value for estimate in estimates]
        assert values == sorted(values)
        assert all(estimate.refined >= estimate.value for estimate in estimates)
    assert morrey[-1].value == pytest.approx(morrey[-1].refined)


def test_averaged_parabolic_morrey_grows_with_the_integrability() -> None:
    psi = _decaying_trajectory(np.exp(np.cos(X) + np.sin(2 * Y)))

    lower = parabolic_morrey_estimate(psi, 2.0, 4.0, 1.5, averaged=True).value
    upper = parabolic_morrey_estimate(psi, 3.0, 4.0, 1.5, averaged=True).value

    assert lower <= upper * (1 + 1e-12)

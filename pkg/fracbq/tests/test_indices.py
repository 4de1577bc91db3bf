from typing import Any, Dict, NamedTuple

import pytest

from fracbq.errors import IndexConstraintError
from fracbq.indices import NormParams, derived_indices, equivalence_q, lower_p_bound, upper_p_bound


def test_reference_family() -> None:
    family = derived_indices(alpha=1.5, d=2, p=6.0, gamma=0.5, delta=0.5)

    assert family.q == pytest.approx(8.0)
    assert family.p_theta == pytest.approx(1.5)
    assert family.q_theta == pytest.approx(2.0)
    assert family.m_f == pytest.approx(2.0)
    assert family.r_f == pytest.approx(7 / 3)
    assert family.n_g == pytest.approx(1.0)
    assert family.s_g == pytest.approx(7 / 6)
    assert family.velocity_q == pytest.approx(7.0)
    assert family.temperature_q == pytest.approx(1.75)
    assert family.as_dict()["q"] == pytest.approx(8.0)


def test_bounds() -> None:
    assert lower_p_bound(1.5) == pytest.approx(5.0)
    assert upper_p_bound(1.5, 2) == pytest.approx(7.0)
    assert upper_p_bound(1.5, 3) == pytest.approx(9.0)


def test_upper_end_is_accepted() -> None:
    family = derived_indices(alpha=1.5, d=2, p=7.0, gamma=0.5, delta=0.5)

    assert family.q == pytest.approx(7.0)


class RejectedData(NamedTuple):
    alpha: float
    d: int
    p: float
    gamma: float
    delta: float
    message: str


@pytest.mark.parametrize(
    "data",
    [
        RejectedData(1.5, 2, 5.0, 0.5, 0.5, r"must exceed \(3α-2\)/\(α-1\)=5"),
        RejectedData(1.5, 2, 7.5, 0.5, 0.5, r"must not exceed \(d\+α\)/\(α-1\)=7"),
        RejectedData(2.0, 2, 6.0, 0.5, 0.5, "open interval"),
        RejectedData(1.0, 2, 6.0, 0.5, 0.5, "open interval"),
        RejectedData(1.5, 1, 6.0, 0.5, 0.5, "at least 2"),
        RejectedData(1.5, 2, 6.0, 1.5, 0.5, "gamma"),
        RejectedData(1.5, 2, 6.0, 0.5, 0.0, "delta"),
    ],
    ids=["p-low", "p-high", "alpha-2", "alpha-1", "d-1", "gamma", "delta"],
)
def test_rejected_families(data: RejectedData) -> None:
    with pytest.raises(IndexConstraintError, match=data.message):
        derived_indices(data.alpha, data.d, data.p, data.gamma, data.delta)


def test_equivalence_q() -> None:
    assert equivalence_q(1.5, 2, 6.0, 7.0) == pytest.approx(8.0)
    with pytest.raises(IndexConstraintError, match="must exceed"):
        equivalence_q(1.5, 2, 3.0, 7.0)
    with pytest.raises(IndexConstraintError, match="must not exceed"):
        equivalence_q(1.5, 2, 8.0, 7.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p": 4.0, "q": 2.0},
        {"p": 0.5, "q": 2.0},
        {"p": 2.0, "q": 4.0, "sigma": 0.1},
        {"p": 2.0, "q": 4.0, "variant": "cube"},
    ],
    ids=["order", "below-one", "sigma", "variant"],
)
def test_norm_params_validation(kwargs: Dict[str, Any]) -> None:
    with pytest.raises(IndexConstraintError):
        NormParams(alpha=1.5, d=2, **kwargs)

"""Exponent bookkeeping for the critical function spaces of the forced system."""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Final, Optional

from fracbq.errors import IndexConstraintError

logger = logging.getLogger(__name__)

_SLACK: Final = 1e-12


@dataclass(frozen=True)
class NormParams:
    p: float
    q: float
    alpha: float
    d: int
    sigma: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    variant: str = "box"

    def __post_init__(self) -> None:
        if not 1 <= self.p <= self.q < math.inf:
            raise IndexConstraintError(f"Exponents must satisfy 1 <= p <= q < inf, got p={self.p}, q={self.q}")
        if self.sigma is not None and not self.sigma < 0:
            raise IndexConstraintError(f"Regularity sigma={self.sigma} must be negative")
        if self.variant not in ("ball", "box"):
            raise IndexConstraintError(f"Unknown parabolic region variant {self.variant!r}")


@dataclass(frozen=True)
class IndexFamily:
    """Velocity, temperature and force exponents derived from (α, d, p, γ, δ)."""

    alpha: float
    d: int
    p: float
    q: float
    p_theta: float
    q_theta: float
    m_f: float
    r_f: float
    n_g: float
    s_g: float
    gamma: float
    delta: float

    @property
    def velocity_q(self) -> float:
        """Second exponent of the parabolic Morrey space holding the velocity."""
        return (self.d + self.alpha) / (self.alpha - 1)

    @property
    def temperature_q(self) -> float:
        return (self.d + self.alpha) / (2 * self.alpha - 1)

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def lower_p_bound(alpha: float) -> float:
    return (3 * alpha - 2) / (alpha - 1)


def upper_p_bound(alpha: float, d: int) -> float:
    return (d + alpha) / (alpha - 1)


def _morrey_second_exponent(alpha: float, d: int, p: float, critical: float) -> float:
    # 1/q = c - (α/d)(1/p - c) with c = 1/critical
    inverse = 1.0 / critical - (alpha / d) * (1.0 / p - 1.0 / critical)
    if not inverse > 0:
        raise IndexConstraintError(f"Derived exponent 1/q={inverse:.6g} is not positive for p={p:g}")
    return 1.0 / inverse


def derived_indices(alpha: float, d: int, p: float, gamma: float, delta: float) -> IndexFamily:
    if not 1 < alpha < 2:
        raise IndexConstraintError(f"alpha={alpha:g} must lie in the open interval (1, 2)")
    if d < 2:
        raise IndexConstraintError(f"d={d} must be at least 2")
    if not 0 < gamma < alpha:
        raise IndexConstraintError(f"gamma={gamma:g} must satisfy 0 < gamma < alpha={alpha:g}")
    if not 0 < delta < alpha:
        raise IndexConstraintError(f"delta={delta:g} must satisfy 0 < delta < alpha={alpha:g}")
    lower = lower_p_bound(alpha)
    upper = upper_p_bound(alpha, d)
    if not p > lower * (1 + _SLACK):
        raise IndexConstraintError(f"p={p:g} must exceed (3α-2)/(α-1)={lower:g}")
    if not p <= upper * (1 + _SLACK):
        raise IndexConstraintError(f"p={p:g} must not exceed (d+α)/(α-1)={upper:g}")

    q = _morrey_second_exponent(alpha, d, p, (d + alpha) / (alpha - 1))
    p_theta = (alpha - 1) / (2 * alpha - 1) * p
    q_theta = _morrey_second_exponent(alpha, d, p_theta, (d + alpha) / (2 * alpha - 1))
    m_f = (alpha - 1) / (2 * alpha - 1 - gamma) * p
    r_f = (d + alpha) / (2 * alpha - 1 - gamma)
    n_g = (alpha - 1) / (3 * alpha - 1 - delta) * p
    s_g = (d + alpha) / (3 * alpha - 1 - delta)

    for name, first, second in (("p", p, q), ("p_theta", p_theta, q_theta), ("m_f", m_f, r_f), ("n_g", n_g, s_g)):
        if first > second * (1 + _SLACK):
            raise IndexConstraintError(f"Ordering violated: {name}={first:g} exceeds its partner exponent {second:g}")
        if first < 1 - _SLACK:
            raise IndexConstraintError(f"Derived exponent {name}={first:g} is below 1")

    family = IndexFamily(
        alpha=alpha,
        d=d,
        p=p,
        q=q,
        p_theta=p_theta,
        q_theta=q_theta,
        m_f=m_f,
        r_f=r_f,
        n_g=n_g,
        s_g=s_g,
        gamma=gamma,
        delta=delta,
    )
    logger.debug("Derived exponent family %s", family)
    return family


def equivalence_q(alpha: float, d: int, p: float, q: float) -> float:
    """Morrey exponent of the thermic norm matching M^{p,q} in space-time: d/𝐪 = (d+α)/q - α/p."""
    if not p > alpha * q / (d + alpha):
        raise IndexConstraintError(f"p={p:g} must exceed αq/(d+α)={alpha * q / (d + alpha):g}")
    if not p <= q:
        raise IndexConstraintError(f"p={p:g} must not exceed q={q:g}")
    return d / ((d + alpha) / q - alpha / p)

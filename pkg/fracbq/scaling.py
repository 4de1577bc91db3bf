"""Rescaling maps and the criticality, equivalence and embedding checks built on them.

Dilations are restricted to the lattice: rescaling by 2 keeps the sample array and halves the
torus, rescaling by 1/2 doubles it. Times contract by ``λ^α``. No interpolation is involved, so
every discrete norm with radii counted in grid cells is exactly invariant under these maps.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Final, List, Optional, Sequence, Tuple, Union

import numpy as np

from fracbq.errors import ExponentMismatchError, LatticeCompatibilityError
from fracbq.indices import equivalence_q
from fracbq.norms import besov_norm, heat_extension, parabolic_morrey_norm, sobolev_morrey_norm, tlm_norm
from fracbq.reports import write_csv
from fracbq.solver import BoussinesqState, ProblemData, SolverConfig, composite_norm, picard_solve
from fracbq.spectral import Field, FieldT, SpectralGrid
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)

LATTICE_FACTORS: Final = (1.0, 2.0, 0.5)
COVARIANCE_TOLERANCE: Final = 1e-3
CRITICALITY_TOLERANCE: Final = 0.03
EQUIVALENCE_SPREAD: Final = 20.0
EQUIVALENCE_SLACK: Final = 1.05
EMBEDDING_SPREAD: Final = 10.0

FamilyMember = Tuple[str, Field]


def check_lambda(lam: float) -> float:
    for factor in LATTICE_FACTORS:
        if math.isclose(lam, factor, rel_tol=1e-12):
            return factor
    raise LatticeCompatibilityError(f"Dilation factor {lam:g} is not lattice-compatible, expected one of 1, 2, 1/2")


def rescaled_grid(grid: SpectralGrid, lam: float) -> SpectralGrid:
    lam = check_lambda(lam)
    return grid if lam == 1.0 else SpectralGrid(grid.d, grid.n, grid.L / lam)


def rescale_field(f: FieldT, lam: float, exponent: float) -> FieldT:
    """``λ^e f(λx)`` on the torus of side L/λ."""
    lam = check_lambda(lam)
    if lam == 1.0:
        return f
    return type(f)(rescaled_grid(f.grid, lam), f.samples * lam**exponent)


def rescale_trajectory(psi: Trajectory, lam: float, exponent: float, alpha: float) -> Trajectory:
    """``λ^e ψ(λ^α t, λx)`` on the contracted time grid."""
    lam = check_lambda(lam)
    if lam == 1.0:
        return psi
    return Trajectory(rescaled_grid(psi.grid, lam), psi.times / lam**alpha, psi.values * lam**exponent)


def rescale_state(state: BoussinesqState, lam: float, alpha: float) -> BoussinesqState:
    return BoussinesqState(
        rescale_trajectory(state.velocity, lam, alpha - 1, alpha),
        rescale_trajectory(state.temperature, lam, 2 * alpha - 1, alpha),
    )


def rescale_data(data: ProblemData, lam: float, alpha: float) -> ProblemData:
    return ProblemData(
        u0=rescale_field(data.u0, lam, alpha - 1),
        theta0=rescale_field(data.theta0, lam, 2 * alpha - 1),
        f=rescale_trajectory(data.f, lam, 2 * alpha - 1, alpha),
        g=rescale_trajectory(data.g, lam, 3 * alpha - 1, alpha),
    )


@dataclass(frozen=True)
class QuantityComparison:
    name: str
    before: float
    after: float
    deviation: float

    @classmethod
    def compare(cls, name: str, before: float, after: float) -> "QuantityComparison":
        if before == after:
            return cls(name, before, after, 0.0)
        return cls(name, before, after, abs(after - before) / max(abs(before), 1e-300))


@dataclass(frozen=True)
class ScalingReport:
    lam: float
    kind: str
    tolerance: float
    quantities: List[QuantityComparison] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max((quantity.deviation for quantity in self.quantities), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def as_dict(self) -> Dict[str, Any]:
        return dict(asdict(self), max_deviation=self.max_deviation, passed=self.passed)


def _log_report(report: ScalingReport) -> ScalingReport:
    if report.passed:
        logger.info("%s check at λ=%g passed (max deviation %.3e)", report.kind, report.lam, report.max_deviation)
    else:
        logger.error(
            "%s check at λ=%g failed: max deviation %.3e exceeds %g",
            report.kind,
            report.lam,
            report.max_deviation,
            report.tolerance,
        )
    return report


def check_solution_covariance(
    data: ProblemData, lam: float, config: SolverConfig, solution: Optional[BoussinesqState] = None
) -> ScalingReport:
    """Solve with the original and the rescaled data and compare the rescaled solution with the latter.

    A solution already computed for ``data`` can be passed in to skip the first solve.
    """
    lam = check_lambda(lam)
    alpha = config.alpha
    if solution is None:
        solution, _ = picard_solve(data.u0, data.theta0, data.f, data.g, config)
    scaled = rescale_data(data, lam, alpha)
    scaled_solution, _ = picard_solve(scaled.u0, scaled.theta0, scaled.f, scaled.g, config)
    expected = rescale_state(solution, lam, alpha)
    before = composite_norm(expected, config)
    after = composite_norm(scaled_solution, config)
    mismatch = composite_norm(scaled_solution - expected, config)
    deviation = 0.0 if mismatch == 0 else mismatch / max(before, 1e-300)
    quantity = QuantityComparison("composite_norm", before, after, deviation)
    return _log_report(ScalingReport(lam=lam, kind="covariance", tolerance=COVARIANCE_TOLERANCE, quantities=[quantity]))


def criticality_norms(data: ProblemData, state: BoussinesqState, config: SolverConfig) -> Dict[str, float]:
    """The data, force and solution norms that are invariant under the rescaling maps."""
    family = config.indices
    alpha, variant = config.alpha, config.variant
    return {
        "u0_thermic": tlm_norm(data.u0, -alpha / family.p, family.p, family.q, alpha),
        "theta0_thermic": tlm_norm(data.theta0, -alpha / family.p_theta, family.p_theta, family.q_theta, alpha),
        "f_sobolev_morrey": sobolev_morrey_norm(data.f, family.gamma, family.m_f, family.r_f, alpha, variant),
        "g_sobolev_morrey": sobolev_morrey_norm(data.g, family.delta, family.n_g, family.s_g, alpha, variant),
        "u_parabolic": parabolic_morrey_norm(state.velocity, family.p, family.velocity_q, alpha, variant),
        "theta_parabolic": parabolic_morrey_norm(
            state.temperature, family.p_theta, family.temperature_q, alpha, variant
        ),
    }


def check_norm_criticality(
    data: ProblemData, state: BoussinesqState, lam: float, config: SolverConfig
) -> ScalingReport:
    lam = check_lambda(lam)
    before = criticality_norms(data, state, config)
    if lam == 1.0:
        after = before
    else:
        after = criticality_norms(
            rescale_data(data, lam, config.alpha), rescale_state(state, lam, config.alpha), config
        )
    quantities = [QuantityComparison.compare(name, before[name], after[name]) for name in before]
    return _log_report(
        ScalingReport(lam=lam, kind="criticality", tolerance=CRITICALITY_TOLERANCE, quantities=quantities)
    )


@dataclass(frozen=True)
class RatioRow:
    function_id: str
    numerator: float
    denominator: float

    @property
    def degenerate(self) -> bool:
        return self.denominator == 0 and self.numerator == 0

    @property
    def ratio(self) -> Optional[float]:
        if self.degenerate:
            return None
        if self.denominator == 0:
            return math.inf
        return self.numerator / self.denominator


@dataclass(frozen=True)
class RatioStatistics:
    name: str
    rows: List[RatioRow]
    spread_limit: float
    one_sided: Optional[bool] = None

    @property
    def ratios(self) -> List[float]:
        return [row.ratio for row in self.rows if row.ratio is not None]

    @property
    def min(self) -> Optional[float]:
        return min(self.ratios) if self.ratios else None

    @property
    def max(self) -> Optional[float]:
        return max(self.ratios) if self.ratios else None

    @property
    def spread(self) -> Optional[float]:
        if self.min is None or self.max is None:
            return None
        if self.min <= 0 or not math.isfinite(self.max):
            return math.inf
        return self.max / self.min

    @property
    def passed(self) -> bool:
        if self.one_sided is False:
            return False
        spread = self.spread
        return spread is None or spread < self.spread_limit

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "rows": [dict(asdict(row), ratio=row.ratio) for row in self.rows],
            "min": self.min,
            "max": self.max,
            "spread": self.spread,
            "spread_limit": self.spread_limit,
            "one_sided": self.one_sided,
            "passed": self.passed,
        }


def _log_statistics(statistics: RatioStatistics) -> RatioStatistics:
    skipped = sum(1 for row in statistics.rows if row.degenerate)
    if skipped:
        logger.info("%s: skipped %d degenerate family members", statistics.name, skipped)
    if statistics.passed:
        logger.info("%s passed: ratios in [%s, %s]", statistics.name, statistics.min, statistics.max)
    else:
        logger.error(
            "%s failed: spread %s (limit %g), one-sided bound %s",
            statistics.name,
            statistics.spread,
            statistics.spread_limit,
            statistics.one_sided,
        )
    return statistics


def equivalence_row(function_id: str, f: Field, alpha: float, p: float, q: float, variant: str = "ball") -> RatioRow:
    thermic_q = equivalence_q(alpha, f.grid.d, p, q)
    thermic = tlm_norm(f, -alpha / p, p, thermic_q, alpha)
    parabolic = parabolic_morrey_norm(heat_extension(f, alpha), p, q, alpha, variant)
    return RatioRow(function_id, thermic, parabolic)


def check_norm_equivalence(
    family: Sequence[FamilyMember], alpha: float, p: float, q: float, variant: str = "ball"
) -> RatioStatistics:
    """Thermic norm against the parabolic norm of the heat extension across a test family.

    The parabolic side never exceeds the thermic side; the one-sided flag allows for the gap
    between the coarse and refined sup grids.
    """
    rows = [equivalence_row(function_id, f, alpha, p, q, variant) for function_id, f in family]
    one_sided = all(row.degenerate or row.denominator <= EQUIVALENCE_SLACK * row.numerator for row in rows)
    statistics = RatioStatistics("equivalence", rows, EQUIVALENCE_SPREAD, one_sided=one_sided)
    return _log_statistics(statistics)


def embedding_row(function_id: str, f: Field, beta: float, alpha: float, p: float) -> RatioRow:
    d = f.grid.d
    if not beta > 0:
        raise ExponentMismatchError(f"beta={beta:g} must be positive")
    q = (d + alpha) / beta
    if not 1 <= p < alpha / beta:
        raise ExponentMismatchError(f"p={p:g} must satisfy 1 <= p < α/β={alpha / beta:g}")
    if not p <= q:
        raise ExponentMismatchError(f"p={p:g} must not exceed q=(d+α)/β={q:g}")
    parabolic = parabolic_morrey_norm(heat_extension(f, alpha), p, q, alpha, "box")
    return RatioRow(function_id, parabolic, besov_norm(f, beta, alpha))


def check_besov_embedding(family: Sequence[FamilyMember], beta: float, alpha: float, p: float) -> RatioStatistics:
    """Parabolic norm of the heat extension against the negative Besov norm."""
    rows = [embedding_row(function_id, f, beta, alpha, p) for function_id, f in family]
    return _log_statistics(RatioStatistics("besov-embedding", rows, EMBEDDING_SPREAD))


def maximality_row(function_id: str, f: Field, alpha: float, q: float) -> RatioRow:
    if not q >= 1:
        raise ExponentMismatchError(f"q={q:g} must be at least 1")
    beta = (f.grid.d + alpha) / q
    parabolic = parabolic_morrey_norm(heat_extension(f, alpha), 1.0, q, alpha, "box")
    return RatioRow(function_id, besov_norm(f, beta, alpha), parabolic)


def check_besov_maximality(family: Sequence[FamilyMember], alpha: float, q: float) -> RatioStatistics:
    """Negative Besov norm with β=(d+α)/q against the p=1 parabolic norm of the heat extension."""
    if not q >= 1:
        raise ExponentMismatchError(f"q={q:g} must be at least 1")
    rows = [maximality_row(function_id, f, alpha, q) for function_id, f in family]
    return _log_statistics(RatioStatistics("besov-maximality", rows, EMBEDDING_SPREAD))


def dilate_on_grid(f: FieldT, factor: int = 2) -> FieldT:
    """``x ↦ f(factor·x)`` on the same torus by index decimation."""
    if factor < 1:
        raise LatticeCompatibilityError(f"Dilation factor {factor} must be a positive integer")
    grid = f.grid
    index = (factor * np.arange(grid.n)) % grid.n
    samples = f.samples
    for axis in grid.axes:
        samples = np.take(samples, index, axis=axis)
    return f.replace(samples)


def coarsen(f: FieldT, factor: int = 2) -> FieldT:
    """Every ``factor``-th sample of ``f`` on a grid of the same side length."""
    grid = f.grid
    if factor < 1 or grid.n % factor:
        raise LatticeCompatibilityError(f"Cannot coarsen {grid.n} samples per axis by {factor}")
    index = (Ellipsis,) + (slice(None, None, factor),) * grid.d
    return type(f)(SpectralGrid(grid.d, grid.n // factor, grid.L), f.samples[index])


def besov_dilation_ratio(f: Field, beta: float, alpha: float, factor: int = 2) -> float:
    """``‖f(λ·)‖`` over ``λ^{-β}‖f‖`` in the negative Besov norm; one for exact homogeneity.

    Both sides take their sup over the same physical nodes: the dilated field is sampled on the
    full grid, the original on every ``factor``-th node. Exact for modes below ``n/(2·factor)``.
    """
    original = besov_norm(coarsen(f, factor), beta, alpha)
    if original == 0:
        return 1.0
    return besov_norm(dilate_on_grid(f, factor), beta, alpha) / (factor ** (-beta) * original)


def write_sweep_csv(statistics: RatioStatistics, path: Union[str, Path]) -> Path:
    rows = [
        (row.function_id, row.numerator, row.denominator, "" if row.ratio is None else row.ratio)
        for row in statistics.rows
    ]
    return write_csv(path, ("function_id", "numerator", "denominator", "ratio"), rows)

"""The pipelines behind each CLI command.

Every pipeline writes its artifacts under ``config.out_dir``, embeds the resolved config in
its JSON report and returns a ``ReturnCodes`` value. Check failures are logged at ERROR.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Final, List, Mapping, Tuple

import numpy as np
from scipy import special

from fracbq.configs import ExperimentConfig
from fracbq.datagen import generate_data, generate_family, random_shape, write_data
from fracbq.errors import PicardDivergenceError
from fracbq.fbf import write_field
from fracbq.kernels import (
    KernelSample,
    kernel_lp_norm,
    kernel_physical,
    lp_decay_exponent,
    normalized_sup,
    worst_component,
    write_kernel_csv,
)
from fracbq.norms import (
    NormReport,
    besov_estimate,
    heat_extension,
    morrey_estimate,
    parabolic_morrey_estimate,
    tlm_estimate,
)
from fracbq.operators import force_family, leray_divergence_family, radial_symbol
from fracbq.reports import write_csv, write_json
from fracbq.riesz import holder_check, riesz_boundedness_ratio
from fracbq.scaling import (
    RatioRow,
    RatioStatistics,
    besov_dilation_ratio,
    check_besov_embedding,
    check_besov_maximality,
    check_norm_criticality,
    check_norm_equivalence,
    check_solution_covariance,
    write_sweep_csv,
)
from fracbq.solver import (
    BoussinesqState,
    estimate_constants,
    picard_solve,
    pressure_consistency,
    probe_family,
    tune_weight,
    weight_sweep,
)
from fracbq.spectral import RealArray, ScalarField
from fracbq.trajectory import Trajectory

logger = logging.getLogger(__name__)

KERNEL_ORACLE_TOLERANCE: Final = 1e-6
SELF_SIMILARITY_TOLERANCE: Final = 1e-6
NORMALIZED_SUP_VARIATION: Final = 0.1
LP_SLOPE_TOLERANCE: Final = 0.02
LP_SLOPE_PAIRS: Final = ((0.0, 1.0), (0.0, 2.0), (1.0, 2.0))
COMPOSITE_LP_EXPONENTS: Final = (1.0, 2.0)
DILATION_TOLERANCE: Final = 0.03
RIESZ_EXPONENTS: Final = (2.0, 4.0, 0.5)
HOLDER_EXPONENTS: Final = ((2.0, 4.0, 2.0, 4.0), (2.0, 4.0, 4.0, 8.0), (3.0, 6.0, 6.0, 12.0))
RIESZ_SPREAD: Final = 10.0


class ReturnCodes:
    SUCCESS: Final = 0
    FAIL: Final = 1
    FATAL_ERROR: Final = 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def below(cls, name: str, value: float, tolerance: float) -> "CheckResult":
        return cls(name, value, tolerance, bool(math.isfinite(value) and value < tolerance))


def _outcome(name: str, checks: List[CheckResult]) -> int:
    failed = [check for check in checks if not check.passed]
    for check in failed:
        logger.error("%s: check %s failed with %.3e (tolerance %g)", name, check.name, check.value, check.tolerance)
    if failed:
        return ReturnCodes.FAIL
    logger.info("%s: all %d checks passed", name, len(checks))
    return ReturnCodes.SUCCESS


def _report(config: ExperimentConfig, filename: str, **payload: Any) -> None:
    write_json(config.out_dir / filename, dict(payload, config=config.as_dict()))


def run_generate(config: ExperimentConfig) -> int:
    data = generate_data(config.grid, config.times, config.data_spec(), config.seed)
    written = write_data(data, config.out_dir / "data")
    _report(config, "generate.json", files=[str(path) for path in written])
    return ReturnCodes.SUCCESS


def _write_state(state: BoussinesqState, config: ExperimentConfig) -> None:
    target = config.out_dir / "solution"
    for index in range(len(state.times)):
        write_field(state.velocity.snapshot(index), target / f"u_{index:04d}.fbf")
        write_field(state.temperature.snapshot(index), target / f"theta_{index:04d}.fbf")
    write_json(target / "times.json", {"times": state.times})


def run_solve(config: ExperimentConfig) -> int:
    solver = config.solver_config()
    data = generate_data(solver.grid, solver.times, config.data_spec(), config.seed)
    write_data(data, config.out_dir / "data")
    try:
        state, diagnostics = picard_solve(data.u0, data.theta0, data.f, data.g, solver)
    except PicardDivergenceError as exc:
        logger.error("%s", exc)
        failed = exc.diagnostics.as_dict() if exc.diagnostics is not None else {}
        _report(config, "diagnostics.json", diagnostics=failed, error=str(exc))
        return ReturnCodes.FAIL

    _write_state(state, config)
    write_csv(
        config.out_dir / "residuals.csv",
        ("iteration", "residual"),
        ((index + 1, value) for index, value in enumerate(diagnostics.residuals)),
    )
    _report(
        config,
        "diagnostics.json",
        diagnostics=diagnostics.as_dict(),
        indices=solver.indices.as_dict(),
        max_divergence=state.max_divergence(),
        pressure_consistency=pressure_consistency(state, data.f),
    )
    return ReturnCodes.SUCCESS


def sample_points(d: int, scale: float) -> RealArray:
    """Points on the first axis and the main diagonal at multiples of ``scale``."""
    radii = scale * np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    axis = np.zeros(d)
    axis[0] = 1.0
    diagonal = np.full(d, 1.0 / math.sqrt(d))
    return np.concatenate([np.outer(radii, axis), np.outer(radii[1:], diagonal)])


def closed_form_kernel(alpha: float, t: float, points: RealArray) -> RealArray:
    """Gaussian (α=2) or Poisson (α=1) kernel; raises for other orders."""
    d = points.shape[1]
    squared = np.sum(points**2, axis=1)
    if alpha == 2.0:
        return (4 * math.pi * t) ** (-d / 2) * np.exp(-squared / (4 * t))  # type: ignore[no-any-return]
    if alpha == 1.0:
        constant = special.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
        return constant * t / (t**2 + squared) ** ((d + 1) / 2)  # type: ignore[no-any-return]
    raise ValueError(f"No closed-form kernel for alpha={alpha:g}")


def _relative_sup(values: RealArray, reference: RealArray) -> float:
    return float(np.max(np.abs(values - reference)) / np.max(np.abs(reference)))


def composite_kernel_checks(config: ExperimentConfig, unit: RealArray) -> Tuple[List[CheckResult], Dict[str, Any]]:
    """Self-similarity, sup bound and L^p decay of the worst Leray-divergence and force entries."""
    alpha, d = config.alpha, config.d
    families = {"leray-div": leray_divergence_family(d), "force": force_family(config.gamma, d)}
    log_times = np.log(np.asarray(config.kernel_times))
    checks: List[CheckResult] = []
    summary: Dict[str, Any] = {}
    for label, family in families.items():
        spec, reference = worst_component(family, alpha, unit)
        rho = spec.degree
        sups = []
        for t in config.kernel_times:
            sample = kernel_physical(spec, alpha, t, unit * t ** (1.0 / alpha))
            sups.append(normalized_sup(sample))
            deviation = _relative_sup(sample.values * t ** ((d + rho) / alpha), reference.values)
            checks.append(CheckResult.below(f"{label} self-similarity t={t:g}", deviation, SELF_SIMILARITY_TOLERANCE))
        variation = max(sups) / min(sups) - 1.0
        checks.append(CheckResult.below(f"{label} normalized sup variation", variation, NORMALIZED_SUP_VARIATION))
        slopes = {}
        if len(log_times) > 1:
            for p in COMPOSITE_LP_EXPONENTS:
                norms = [kernel_lp_norm(spec, alpha, t, p, d) for t in config.kernel_times]
                slope = float(np.polyfit(log_times, np.log(norms), 1)[0])
                expected = lp_decay_exponent(rho, p, d, alpha)
                slopes[f"p={p:g}"] = {"measured": slope, "expected": expected}
                deviation = abs(slope - expected) / abs(expected)
                checks.append(CheckResult.below(f"{label} L^p slope p={p:g}", deviation, LP_SLOPE_TOLERANCE))
        summary[label] = {"component": spec.name, "rho": rho, "normalized_sups": sups, "lp_slopes": slopes}
    return checks, summary


def run_verify_kernel(config: ExperimentConfig) -> int:
    alpha, rho, d = config.alpha, config.kernel_rho, config.d
    spec = radial_symbol(rho)
    unit = sample_points(d, 1.0)
    reference = kernel_physical(spec, alpha, 1.0, unit)
    samples: List[KernelSample] = []
    checks: List[CheckResult] = []
    for t in config.kernel_times:
        scale = t ** (1.0 / alpha)
        sample = kernel_physical(spec, alpha, t, unit * scale)
        samples.append(sample)
        rescaled = sample.values * t ** ((d + rho) / alpha)
        checks.append(
            CheckResult.below(
                f"self-similarity t={t:g}", _relative_sup(rescaled, reference.values), SELF_SIMILARITY_TOLERANCE
            )
        )
        if rho == 0 and alpha in (1.0, 2.0):
            oracle = closed_form_kernel(alpha, t, sample.points)
            checks.append(
                CheckResult.below(f"closed form t={t:g}", _relative_sup(sample.values, oracle), KERNEL_ORACLE_TOLERANCE)
            )

    sups = [normalized_sup(sample) for sample in samples]
    checks.append(CheckResult.below("normalized sup variation", max(sups) / min(sups) - 1.0, NORMALIZED_SUP_VARIATION))

    slopes = {}
    log_times = np.log(np.asarray(config.kernel_times))
    if len(log_times) > 1:
        for pair_rho, p in LP_SLOPE_PAIRS:
            pair_spec = radial_symbol(pair_rho)
            norms = [kernel_lp_norm(pair_spec, alpha, t, p, d) for t in config.kernel_times]
            slope = float(np.polyfit(log_times, np.log(norms), 1)[0])
            expected = lp_decay_exponent(pair_rho, p, d, alpha)
            slopes[f"rho={pair_rho:g},p={p:g}"] = {"measured": slope, "expected": expected}
            deviation = abs(slope - expected) / abs(expected) if expected else abs(slope)
            checks.append(CheckResult.below(f"L^p slope rho={pair_rho:g} p={p:g}", deviation, LP_SLOPE_TOLERANCE))

    composite_checks, composite = composite_kernel_checks(config, unit)
    checks.extend(composite_checks)

    write_kernel_csv(samples, config.out_dir / "kernel.csv")
    _report(
        config,
        "kernel_report.json",
        checks=[asdict(check) for check in checks],
        normalized_sups=dict(zip(config.kernel_times, sups)),
        lp_slopes=slopes,
        composite=composite,
    )
    return _outcome("verify-kernel", checks)


def run_verify_scaling(config: ExperimentConfig) -> int:
    solver = config.solver_config()
    data = generate_data(solver.grid, solver.times, config.data_spec(), config.seed)
    try:
        state, _ = picard_solve(data.u0, data.theta0, data.f, data.g, solver)
        covariance = check_solution_covariance(data, config.lam, solver, solution=state)
    except PicardDivergenceError as exc:
        logger.error("%s", exc)
        _report(config, "scaling_report.json", error=str(exc))
        return ReturnCodes.FAIL
    criticality = check_norm_criticality(data, state, config.lam, solver)
    _report(config, "scaling_report.json", covariance=covariance.as_dict(), criticality=criticality.as_dict())
    checks = [
        CheckResult("covariance", covariance.max_deviation, covariance.tolerance, covariance.passed),
        CheckResult("criticality", criticality.max_deviation, criticality.tolerance, criticality.passed),
    ]
    return _outcome("verify-scaling", checks)


def _random_trajectories(config: ExperimentConfig, count: int, seed: int) -> List[Trajectory]:
    rng = np.random.default_rng(seed)
    grid, times = config.grid, config.times
    families = ("gaussian-bump", "multi-mode", "random-bandlimited")
    trajectories = []
    for index in range(count):
        shape = random_shape(grid, families[index % len(families)], config.band, rng)
        profile = np.exp(-rng.uniform(0.0, 2.0) * times)
        trajectories.append(Trajectory.separable(ScalarField(grid, shape), times, profile))
    return trajectories


def norm_reports(config: ExperimentConfig) -> List[NormReport]:
    """Estimates, refinement gaps and tail bounds of each norm on the first family member."""
    _, f = generate_family(config.grid, 1, config.seed, config.band)[0]
    alpha, beta, p = config.alpha, config.beta, 2.0
    q = 4.0
    psi = heat_extension(f, alpha)
    params: Mapping[str, Dict[str, Any]] = {
        "morrey": {"p": p, "q": q},
        "parabolic_morrey": {"p": p, "q": q, "alpha": alpha, "variant": config.variant},
        "besov": {"beta": beta, "alpha": alpha},
        "tlm": {"sigma": -alpha / p, "p": p, "q": q, "alpha": alpha},
    }
    estimates = {
        "morrey": morrey_estimate(f, p, q),
        "parabolic_morrey": parabolic_morrey_estimate(psi, p, q, alpha, config.variant),
        "besov": besov_estimate(f, beta, alpha),
        "tlm": tlm_estimate(f, -alpha / p, p, q, alpha),
    }
    return [NormReport.from_estimate(name, params[name], estimates[name]) for name in estimates]


def bandlimited_family(config: ExperimentConfig) -> List[Tuple[str, ScalarField]]:
    """Band-limited members below a quarter of the grid, so that decimation dilates them exactly."""
    rng = np.random.default_rng(config.seed)
    grid = config.grid
    band = max(1, min(config.band, grid.n // 4 - 1))
    members = []
    for index in range(config.family_size):
        shape = random_shape(grid, "random-bandlimited", band, rng)
        members.append((f"random-bandlimited-{index:02d}", ScalarField(grid, shape)))
    return members


def run_verify_norms(config: ExperimentConfig) -> int:
    alpha = config.alpha
    trajectories = _random_trajectories(config, 2 * config.family_size, config.seed)
    checks: List[CheckResult] = []

    holder_rows = []
    worst = 0.0
    for first, second in zip(trajectories[::2], trajectories[1::2]):
        for exponents in HOLDER_EXPONENTS:
            report = holder_check(first, second, *exponents, alpha=alpha, variant=config.variant)
            holder_rows.append((*exponents, report.lhs, report.rhs, report.ratio, report.passed))
            if not report.degenerate:
                worst = max(worst, report.ratio)
    write_csv(config.out_dir / "holder.csv", ("p1", "q1", "p2", "q2", "lhs", "rhs", "ratio", "passed"), holder_rows)
    checks.append(CheckResult("holder", worst, 1.0 + 1e-9, all(row[-1] for row in holder_rows)))

    p, q, beta = RIESZ_EXPONENTS
    riesz_rows = [
        RatioRow(f"trajectory-{index:02d}", riesz_boundedness_ratio(psi, p, q, beta, alpha, config.variant), 1.0)
        for index, psi in enumerate(trajectories[: config.family_size])
    ]
    riesz = RatioStatistics("riesz-boundedness", riesz_rows, RIESZ_SPREAD)
    write_sweep_csv(riesz, config.out_dir / "riesz.csv")
    checks.append(CheckResult("riesz spread", riesz.spread or 0.0, RIESZ_SPREAD, riesz.passed))

    dilation_family = bandlimited_family(config)
    dilations = [besov_dilation_ratio(f, config.beta, alpha) for _, f in dilation_family]
    deviation = max(abs(ratio - 1.0) for ratio in dilations)
    checks.append(CheckResult.below("besov dilation", deviation, DILATION_TOLERANCE))

    _report(
        config,
        "norms_report.json",
        checks=[asdict(check) for check in checks],
        riesz=riesz.as_dict(),
        besov_dilation=dict(zip((name for name, _ in dilation_family), dilations)),
        norms=[report.as_dict() for report in norm_reports(config)],
    )
    return _outcome("verify-norms", checks)


def run_verify_equivalence(config: ExperimentConfig) -> int:
    alpha, d = config.alpha, config.d
    q = config.q if config.q is not None else (d + alpha) / (alpha - 1)
    family = generate_family(config.grid, config.family_size, config.seed, config.band)

    equivalence = check_norm_equivalence(family, alpha, config.p, q)
    embedding = check_besov_embedding(family, config.beta, alpha, 1.0)
    maximality = check_besov_maximality(family, alpha, (d + alpha) / config.beta)
    statistics = (equivalence, embedding, maximality)
    for item in statistics:
        write_sweep_csv(item, config.out_dir / f"{item.name}.csv")
    _report(config, "equivalence_report.json", **{item.name: item.as_dict() for item in statistics})
    checks = [CheckResult(item.name, item.spread or 0.0, item.spread_limit, item.passed) for item in statistics]
    return _outcome("verify-equivalence", checks)


def run_estimate_constants(config: ExperimentConfig) -> int:
    solver = config.solver_config()
    probes = probe_family(solver, config.probe_count, config.seed, config.band, config.amplitude)
    constants = estimate_constants(solver, probes)
    sweep = weight_sweep(solver, probes)
    tuned, tuned_linear = tune_weight(solver, probes)
    _report(
        config,
        "constants.json",
        constants=constants.as_dict(),
        linear_condition=constants.C_L < 1.0 / 3.0,
        weight_sweep={str(weight): value for weight, value in sweep.items()},
        tuned_weight={"weight_c": tuned.weight_c, "C_L": tuned_linear},
    )
    return ReturnCodes.SUCCESS


PIPELINES: Final[Dict[str, Callable[[ExperimentConfig], int]]] = {
    "solve": run_solve,
    "generate": run_generate,
    "verify-kernel": run_verify_kernel,
    "verify-scaling": run_verify_scaling,
    "verify-norms": run_verify_norms,
    "verify-equivalence": run_verify_equivalence,
    "estimate-constants": run_estimate_constants,
}


def run(config: ExperimentConfig) -> int:
    logger.info("Running %s into %s", config.command, config.out_dir)
    return PIPELINES[config.command](config)

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Final, List, Mapping, Optional, Sequence, Set, Tuple, Union

import jsonschema
import tomlkit
import yaml
from tomlkit.exceptions import TOMLKitError

from fracbq.datagen import DataSpec
from fracbq.errors import ConfigError
from fracbq.indices import derived_indices
from fracbq.solver import SolverConfig
from fracbq.spectral import RealArray, SpectralGrid, make_grid
from fracbq.trajectory import graded_times
from fracbq.utils import render_template

logger = logging.getLogger(__name__)

_TOML_TABLE: Final = ("tool", "fracbq")
COMMANDS: Final = (
    "solve",
    "generate",
    "verify-kernel",
    "verify-scaling",
    "verify-norms",
    "verify-equivalence",
    "estimate-constants",
)
SOLVER_COMMANDS: Final = ("solve", "verify-scaling", "estimate-constants")


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON, YAML or TOML experiment config; TOML uses ``[tool.fracbq]`` when present."""
    path = Path(path)
    try:
        text = path.read_text("utf8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc

    try:
        if path.suffix == ".toml":
            document = tomlkit.parse(text).unwrap()
            table = document.get(_TOML_TABLE[0], {}).get(_TOML_TABLE[1])
            data = document if table is None else table
        elif path.suffix in {".json", ".yaml", ".yml"}:
            data = yaml.safe_load(text)
        else:
            raise ConfigError(f"Unsupported config format {path.suffix!r}, expected .json, .yaml, .yml or .toml")
    except (yaml.YAMLError, TOMLKitError) as exc:
        raise ConfigError(f"Cannot parse config file {path}: {exc}") from exc

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file has to hold a mapping, got {type(data)!r}.")
    return dict(data)


def validate_config(data: Any) -> None:
    schema = json.loads((Path(__file__).parent / "config_schema.json").read_text("utf8"))
    try:
        jsonschema.validate(instance=data, schema=schema)
    except jsonschema.ValidationError as exc:
        location = "/".join(str(part) for part in exc.absolute_path) or "<root>"
        raise ConfigError(f"Invalid config at {location}: {exc.message}") from exc


def join_configs(base: Mapping[str, Any], *overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Later mappings win; ``None`` values leave the earlier setting in place."""
    joined = dict(base)
    for override in overrides:
        joined.update({key: value for key, value in override.items() if value is not None})
    return joined


def parse_parametrized(params: Sequence[Mapping[str, Any]]) -> List[Dict[str, Any]]:
    if not params:
        return [{}]

    parsed_params: List[Dict[str, Any]] = []
    known_params: Optional[Set[str]] = None
    for idx, param in enumerate(params):
        param_keys = set(param.keys())
        if known_params is None:
            known_params = param_keys
        elif param_keys != known_params:
            raise ConfigError(
                "All parametrized entries must have same keys. "
                f'First entry is {", ".join(sorted(known_params))} but {", ".join(sorted(param_keys))} '
                f"was spotted at {idx} position",
            )
        parsed_params.append(dict(param))
    return parsed_params


def default_run_name(params: Mapping[str, Any]) -> str:
    return ",".join(f"{key}={value}" for key, value in params.items())


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "solve"
    alpha: float = 1.5
    d: int = 2
    n: int = 64
    L: float = 2 * math.pi
    T: float = 1.0
    nt: int = 64
    grading: float = 3.0
    p: float = 6.0
    q: Optional[float] = None
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
    seed: int = 0
    family: str = "gaussian-bump"
    amplitude: float = 1e-3
    force_amplitude: Optional[float] = None
    band: int = 3
    lam: float = 2.0
    family_size: int = 20
    probe_count: int = 20
    beta: float = 1.0
    kernel_times: Tuple[float, ...] = (0.25, 1.0, 4.0)
    kernel_rho: float = 0.0
    out: str = "fracbq-out"
    run_name: str = ""
    parametrized: Tuple[Dict[str, Any], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}, expected one of {', '.join(COMMANDS)}")
        object.__setattr__(self, "kernel_times", tuple(float(t) for t in self.kernel_times))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        validate_config(dict(data))
        known = {item.name for item in fields(cls)}
        values = {key: value for key, value in data.items() if key in known}
        if "kernel_times" in values:
            values["kernel_times"] = tuple(values["kernel_times"])
        if "parametrized" in values:
            values["parametrized"] = tuple(dict(entry) for entry in values["parametrized"])
        return cls(**values)

    def check_indices(self) -> None:
        """Reject exponent families outside the admissible ranges before anything runs."""
        if self.command in SOLVER_COMMANDS:
            derived_indices(self.alpha, self.d, self.p, self.gamma, self.delta_force)

    def solver_config(self) -> SolverConfig:
        derived_indices(self.alpha, self.d, self.p, self.gamma, self.delta_force)
        return SolverConfig(
            alpha=self.alpha,
            d=self.d,
            n=self.n,
            L=self.L,
            T=self.T,
            nt=self.nt,
            grading=self.grading,
            p=self.p,
            gamma=self.gamma,
            delta_force=self.delta_force,
            weight_c=self.weight_c,
            smallness_delta=self.smallness_delta,
            tol=self.tol,
            max_iter=self.max_iter,
            temperature_sign=self.temperature_sign,
            nonlinear=self.nonlinear,
            buoyancy=self.buoyancy,
            variant=self.variant,
        )

    def data_spec(self) -> DataSpec:
        return DataSpec(
            family=self.family, amplitude=self.amplitude, force_amplitude=self.force_amplitude, band=self.band
        )

    @property
    def grid(self) -> SpectralGrid:
        return make_grid(self.d, self.n, self.L)

    @property
    def times(self) -> RealArray:
        return graded_times(self.T, self.nt, self.grading)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def as_dict(self) -> Dict[str, Any]:
        resolved = asdict(self)
        resolved.pop("parametrized")
        resolved["kernel_times"] = list(self.kernel_times)
        return resolved


def expand_runs(config: ExperimentConfig) -> List[ExperimentConfig]:
    """One config per parametrized entry, each writing into its own named subdirectory."""
    if not config.parametrized:
        return [config]

    base = config.as_dict()
    runs = []
    for params in parse_parametrized(config.parametrized):
        name = render_template(config.run_name, params) if config.run_name else default_run_name(params)
        merged = join_configs(base, params, {"out": str(config.out_dir / name), "run_name": name})
        runs.append(replace(ExperimentConfig.from_mapping(merged), parametrized=()))
    logger.info("Expanded %d parametrized runs", len(runs))
    return runs


def build_experiment(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None
) -> List[ExperimentConfig]:
    """Load, merge with overrides, validate and expand into the runs to execute."""
    base = load_config_file(path) if path is not None else {}
    runs = expand_runs(ExperimentConfig.from_mapping(join_configs(base, overrides or {})))
    for run in runs:
        run.check_indices()
    return runs

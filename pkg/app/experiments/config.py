"""
app/experiments/config.py
=========================
Experiment configuration: per-experiment defaults, the flat ``key = value``
snapshot format and the defaults → config file → CLI flag resolution.

Snapshot example::

    # deep_hankel_lab experiment snapshot
    experiment = depth-sweep
    L = 2,5,10,20
    noise_var = 0.1
    strategy = noisy,smooth,ssa
    ...

Snapshots are read back with ``dotenv_values``; floats are written with
``repr`` so a reload is bit-identical.
"""

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from dotenv import dotenv_values

from app.config import DEFAULT_SEED, LQR_HORIZON, LQR_SAMPLES, OUTPUT_DIR, SAMPLING_TIME
from app.errors import ConfigError, HankelLabError
from app.plant.lti import (
    BENCHMARK_DEN,
    BENCHMARK_NUM,
    SECOND_ORDER_DEN,
    SECOND_ORDER_NUM,
    LtiSystem,
    plant_from_coefficients,
)
from app.utils.preprocess import StrategyTag

logger = logging.getLogger(__name__)

EXPERIMENTS = ("rollout", "depth-sweep", "singvals", "hw-events", "lqr")

# Self-consistency panels run when neither N nor noise_var is given
DEPTH_SWEEP_PANELS: tuple[tuple[float, tuple[int, ...]], ...] = (
    (0.1, (150, 200, 250)),
    (1.0, (1500, 2500, 5000)),
)
DEPTH_GRID: tuple[int, ...] = (2, 5, 10, 15, 20, 25, 30, 40)
SINGVAL_N_GRID: tuple[int, ...] = (100, 316, 1000, 3162, 10000, 31623, 100000)


@dataclass
class ExperimentConfig:
    experiment: str
    plant_num: tuple[float, ...] = SECOND_ORDER_NUM
    plant_den: tuple[float, ...] = SECOND_ORDER_DEN
    plant_ts: float = SAMPLING_TIME
    L: tuple[int, ...] = (2, 5, 10, 20)
    N: Optional[tuple[int, ...]] = None
    noise_var: Optional[float] = None
    strategy: tuple[str, ...] = ("noisy",)
    trials: int = 10
    seed: int = DEFAULT_SEED
    out: Path = OUTPUT_DIR
    resample_input: bool = True
    ssa_both: bool = False
    beta: Optional[float] = None
    gamma: Optional[float] = None
    input_noise_var: float = 0.0
    loop_noise_var: float = 0.0
    horizon: int = LQR_HORIZON

    def __post_init__(self) -> None:
        validate(self)

    def plant(self) -> LtiSystem:
        try:
            return plant_from_coefficients(self.plant_num, self.plant_den, self.plant_ts)
        except HankelLabError as exc:
            raise ConfigError(f"plant_num/plant_den/plant_ts: {exc}") from exc

    def depth_sweep_panels(self) -> tuple[tuple[float, tuple[int, ...]], ...]:
        """(noise variance, N grid) pairs; a single panel once either is set."""
        if self.N is None and self.noise_var is None:
            return DEPTH_SWEEP_PANELS
        var = 0.1 if self.noise_var is None else self.noise_var
        grid = self.N
        if grid is None:
            grid = dict(DEPTH_SWEEP_PANELS).get(var, DEPTH_SWEEP_PANELS[0][1])
        return ((var, grid),)

    @property
    def N_grid(self) -> tuple[int, ...]:
        if self.N is None:
            raise ConfigError(f"N: required for experiment '{self.experiment}'")
        return self.N

    @property
    def variance(self) -> float:
        return 0.0 if self.noise_var is None else self.noise_var


EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "rollout": dict(N=(200,), noise_var=0.1, trials=50, resample_input=False),
    "depth-sweep": dict(L=DEPTH_GRID, strategy=("noisy", "smooth", "ssa")),
    "singvals": dict(L=(2, 8, 20), N=SINGVAL_N_GRID, trials=50),
    "hw-events": dict(L=(2, 5, 8), N=(10, 100, 1000, 10000), trials=200),
    "lqr": dict(
        plant_num=BENCHMARK_NUM,
        plant_den=BENCHMARK_DEN,
        plant_ts=0.0,
        L=(5, 10, 20),
        N=(LQR_SAMPLES,),
        noise_var=1.0,
        input_noise_var=1.0,
        trials=1,
    ),
}


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _fail(name: str, message: str) -> None:
    raise ConfigError(f"{name}: {message}")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        _fail("experiment", f"unknown experiment '{cfg.experiment}', expected one of {EXPERIMENTS}")
    if not cfg.L or any(v < 1 for v in cfg.L):
        _fail("L", f"depths must be >= 1, got {cfg.L}")
    if cfg.N is not None and (not cfg.N or any(v < 1 for v in cfg.N)):
        _fail("N", f"lengths must be >= 1, got {cfg.N}")
    if cfg.noise_var is not None and cfg.noise_var < 0:
        _fail("noise_var", f"must be >= 0, got {cfg.noise_var}")
    if cfg.input_noise_var < 0:
        _fail("input_noise_var", f"must be >= 0, got {cfg.input_noise_var}")
    if cfg.loop_noise_var < 0:
        _fail("loop_noise_var", f"must be >= 0, got {cfg.loop_noise_var}")
    if cfg.trials < 1:
        _fail("trials", f"must be >= 1, got {cfg.trials}")
    if cfg.horizon < 1:
        _fail("horizon", f"must be >= 1, got {cfg.horizon}")
    if not 0 <= cfg.seed < 2**64:
        _fail("seed", f"must be an unsigned 64-bit integer, got {cfg.seed}")
    if cfg.plant_ts < 0:
        _fail("plant_ts", f"must be >= 0, got {cfg.plant_ts}")
    valid = {tag.value for tag in StrategyTag}
    for tag in cfg.strategy:
        if tag not in valid:
            _fail("strategy", f"unknown strategy '{tag}', expected one of {sorted(valid)}")
    for name in ("beta", "gamma"):
        value = getattr(cfg, name)
        if value is not None and not 0.0 < value < 1.0:
            _fail(name, f"must lie strictly between 0 and 1, got {value}")


# ---------------------------------------------------------------------------
# Text codec
# ---------------------------------------------------------------------------


def parse_bool(raw: str) -> bool:
    text = raw.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _tuple_of(item: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(raw: str) -> tuple:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)

    return parse


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda raw: None if raw.strip() == "" else parse(raw)


_PARSERS: dict[str, Callable[[str], Any]] = {
    "experiment": str.strip,
    "plant_num": _tuple_of(float),
    "plant_den": _tuple_of(float),
    "plant_ts": float,
    "L": _tuple_of(int),
    "N": _optional(_tuple_of(int)),
    "noise_var": _optional(float),
    "strategy": _tuple_of(str.strip),
    "trials": int,
    "seed": int,
    "out": lambda raw: Path(raw.strip()),
    "resample_input": parse_bool,
    "ssa_both": parse_bool,
    "beta": _optional(float),
    "gamma": _optional(float),
    "input_noise_var": float,
    "loop_noise_var": float,
    "horizon": int,
}


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def parse_fields(raw: dict[str, Optional[str]]) -> dict[str, Any]:
    """Typed values for raw ``key -> text`` pairs; unknown keys are errors."""
    parsed = {}
    for key, text in raw.items():
        if key not in _PARSERS:
            _fail(key, "unknown configuration key")
        try:
            parsed[key] = _PARSERS[key](text or "")
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from exc
    return parsed


def dump_config(cfg: ExperimentConfig, path: Path) -> Path:
    lines = ["# deep_hankel_lab experiment snapshot"]
    for f in dataclasses.fields(cfg):
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_overrides(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    return parse_fields(dotenv_values(path, interpolate=False))


def load_config(path: Path) -> ExperimentConfig:
    """Rebuild a configuration from a snapshot; the file must name the experiment."""
    overrides = load_overrides(path)
    if "experiment" not in overrides:
        _fail("experiment", f"missing from {path}")
    return resolve_config(overrides["experiment"], overrides=overrides)


def resolve_config(
    experiment: str,
    config_path: Optional[Path] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """Experiment defaults, then the config file, then explicit overrides."""
    if experiment not in EXPERIMENT_DEFAULTS:
        _fail("experiment", f"unknown experiment '{experiment}', expected one of {EXPERIMENTS}")
    values: dict[str, Any] = dict(EXPERIMENT_DEFAULTS[experiment])
    if config_path is not None:
        from_file = load_overrides(config_path)
        if from_file.get("experiment", experiment) != experiment:
            _fail("experiment", f"file is for '{from_file['experiment']}', command is '{experiment}'")
        values.update(from_file)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    values["experiment"] = experiment
    cfg = ExperimentConfig(**values)
    logger.debug("Resolved configuration: %s", cfg)
    return cfg

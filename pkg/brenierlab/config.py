"""
    Experiment configuration: one TOML file, CLI overrides, a stable digest.

        [measure]  source / target / body descriptions and the ND dimension
        [solver]   entropic solver and 1D map resolution
        [check]    exponents, slacks, tolerances and sample counts
        [output]   output directory and plot switch
        [logging]  log level of the command-line front end

    Top-level keys: seed, jobs.
"""
import hashlib
import json
import logging
import os
import tomllib
from dataclasses import dataclass, field, fields, asdict, replace
from pathlib import Path
from typing import Any, Optional

from brenierlab.common.exceptions import ConfigError, BaseLabError
from brenierlab.measures import (
    ConvexBody,
    ConvexPolynomial,
    Gaussian,
    HuberProduct,
    Potential,
    PowerLaw,
    UniformBody,
    make_potential,
)
from brenierlab.result import Ok, Err, Result, collect


__all__ = [
    "OUTPUT_ENV",
    "MeasureSection",
    "SolverSection",
    "CheckSection",
    "OutputSection",
    "LoggingSection",
    "ExperimentConfig",
    "from_dict",
    "load_config",
    "apply_overrides",
    "config_digest",
    "parse_measure",
    "parse_body",
]


logger = logging.getLogger(__name__)

OUTPUT_ENV = "BRENIERLAB_OUTPUT"


@dataclass(frozen=True, slots=True, repr=True)
class MeasureSection:
    source: str = "gaussian"
    target: str = "uniform:-1:1"
    body: str = "box:-1:1"
    dimension: int = 2


@dataclass(frozen=True, slots=True, repr=True)
class SolverSection:
    n: int = 2000
    m: int = 2000
    epsilon: float = 0.0
    tol: float = 1e-6
    dual_tol: float = 1e-8
    max_iter: int = 10_000
    resolution: int = 4096


@dataclass(frozen=True, slots=True, repr=True)
class CheckSection:
    p: float = 0.25
    a: float = 1.0
    alpha: float = 1.0
    holder_p: float = 1.0
    convexity_q: float = 3.0
    slack: float = 1.15
    envelope_slack: float = 1.2
    tolerance: float = 1e-3
    pair_count: int = 4096
    samples: int = 1_000_000
    radii: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    nodes: int = 201


@dataclass(frozen=True, slots=True, repr=True)
class OutputSection:
    directory: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, "brenierlab-out"))
    plots: bool = False


@dataclass(frozen=True, slots=True, repr=True)
class LoggingSection:
    level: str = "WARNING"


@dataclass(frozen=True, slots=True, repr=True)
class ExperimentConfig:
    command: str = "suite"
    seed: int = 0
    jobs: int = 1
    measure: MeasureSection = field(default_factory=MeasureSection)
    solver: SolverSection = field(default_factory=SolverSection)
    check: CheckSection = field(default_factory=CheckSection)
    output: OutputSection = field(default_factory=OutputSection)
    logging: LoggingSection = field(default_factory=LoggingSection)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["check"]["radii"] = list(self.check.radii)
        return data


_SECTION_TYPES = {
    "measure": MeasureSection,
    "solver": SolverSection,
    "check": CheckSection,
    "output": OutputSection,
    "logging": LoggingSection,
}
_TOP_LEVEL = {"command": str, "seed": int, "jobs": int}
_COMMANDS = ("envelope", "transport1d", "transportnd", "concentrate", "suite", "report")


def _coerce(name: str, value: Any, default: Any) -> Result[Any, ConfigError]:
    """Checks a value against the type of the field default; ints are accepted for floats"""
    match default:
        case bool():
            ok = isinstance(value, bool)
        case int():
            ok = isinstance(value, int) and not isinstance(value, bool)
        case float():
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            value = float(value) if ok else value
        case tuple():
            ok = isinstance(value, (list, tuple)) and all(isinstance(v, (int, float)) for v in value)
            value = tuple(float(v) for v in value) if ok else value
        case _:
            ok = isinstance(value, str)
    if not ok:
        return Err(ConfigError(name, f"expected {type(default).__name__}, got {value!r}"))
    return Ok(value)


def _section(name: str, raw: Any) -> Result[Any, list[ConfigError]]:
    cls = _SECTION_TYPES[name]
    if not isinstance(raw, dict):
        return Err([ConfigError(name, "expected a table")])
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = [Err(ConfigError(f"{name}.{key}", "unknown key")) for key in raw if key not in known]
    parsed = [_coerce(f"{name}.{key}", value, getattr(defaults, key)).map(lambda v, k=key: (k, v))
              for key, value in raw.items() if key in known]
    return collect(unknown + parsed).map(lambda pairs: replace(defaults, **dict(pairs)))


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """:raises ConfigError:"""
    if cfg.command not in _COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(_COMMANDS)}")
    if cfg.jobs < 1:
        raise ConfigError("jobs", "expected a positive worker count")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed", "expected a 64-bit unsigned integer")
    if cfg.measure.dimension not in (2, 3):
        raise ConfigError("measure.dimension", "expected 2 or 3")
    if cfg.solver.tol <= 0 or cfg.solver.dual_tol <= 0:
        raise ConfigError("solver.tol", "solver tolerances must be positive")
    if cfg.check.slack < 1 or cfg.check.envelope_slack < 1:
        raise ConfigError("check.slack", "slack factors must be >= 1")
    if not 0 < cfg.check.alpha <= 1:
        raise ConfigError("check.alpha", "expected 0 < alpha <= 1")
    if not 0 <= cfg.check.holder_p <= 1 <= cfg.check.convexity_q:
        raise ConfigError("check.holder_p", "expected 0 <= holder_p <= 1 <= convexity_q")
    if cfg.logging.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError("logging.level", "expected a logging level name")
    return cfg


def from_dict(data: dict) -> Result[ExperimentConfig, list[ConfigError]]:
    """Builds a config from nested dictionaries, gathering every field error"""
    results = list()
    for key, value in data.items():
        if key in _TOP_LEVEL:
            results.append(_coerce(key, value, getattr(ExperimentConfig(), key)).map(lambda v, k=key: (k, v)))
        elif key in _SECTION_TYPES:
            results.append(_section(key, value).map(lambda v, k=key: (k, v)))
        else:
            results.append(Err(ConfigError(key, "unknown section")))

    def flatten(errors: list) -> list[ConfigError]:
        out = list()
        for err in errors:
            out.extend(err if isinstance(err, list) else [err])
        return out

    return collect(results).map_error(flatten).map(lambda pairs: ExperimentConfig(**dict(pairs)))


def _parse_scalar(text: str) -> Any:
    """A TOML value; bare words are taken as strings"""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _nest(flat: dict[str, Any]) -> dict:
    nested: dict = dict()
    for dotted, value in flat.items():
        head, _, tail = dotted.partition(".")
        if tail:
            nested.setdefault(head, dict())[tail] = value
        else:
            nested[head] = value
    return nested


def _merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """
        Applies 'section.key=value' strings (leading dashes allowed) on top of raw config data.
        :raises ConfigError: an override without '='
    """
    flat = dict()
    for item in overrides:
        text = item.lstrip("-")
        key, sep, value = text.partition("=")
        if not sep or not key:
            raise ConfigError(item, "expected section.key=value")
        flat[key.strip()] = _parse_scalar(value.strip())
    return _merge(data, _nest(flat))


def _first_error(errors: list[ConfigError]) -> ConfigError:
    for err in errors[1:]:
        logger.warning("%s", err)
    return errors[0]


def load_config(path: Optional[Path] = None, overrides: Optional[list[str]] = None, **flags) -> ExperimentConfig:
    """
        Config file, then generic overrides, then explicit flags (dotted names as keyword keys).
        :raises ConfigError: unreadable file, unknown field or a value of the wrong type
    """
    data: dict = dict()
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as err:
            raise ConfigError(str(path), f"can not read the config file: {err}")
    data = apply_overrides(data, overrides or list())
    data = _merge(data, _nest({k: v for k, v in flags.items() if v is not None}))
    cfg = from_dict(data).get_or_raise(_first_error)
    return _validate(cfg)


_EXECUTION_ONLY = ("jobs", "output", "logging")


def config_digest(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form, without the fields that can not change a result (jobs, output, logging)"""
    data = {k: v for k, v in cfg.to_dict().items() if k not in _EXECUTION_ONLY}
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- measure and body descriptions

def _numbers(field_name: str, parts: list[str], count: int) -> list[float]:
    if len(parts) != count:
        raise ConfigError(field_name, f"expected {count} numeric parameters, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(field_name, f"parameters {parts} are not numbers")


def parse_body(spec: str, dimension: int, field_name: str = "measure.body") -> ConvexBody:
    """
        'box:lo:hi' (a cube) or 'ball:r' / 'ball:r:c1:...:cd'.
        :raises ConfigError:
    """
    name, *parts = spec.strip().lower().split(":")
    try:
        match name:
            case "box":
                lo, hi = _numbers(field_name, parts, 2)
                return ConvexBody.box(lo, hi, dimension)
            case "ball" if len(parts) == 1:
                (radius,) = _numbers(field_name, parts, 1)
                return ConvexBody.ball(radius, dimension)
            case "ball":
                radius, *center = _numbers(field_name, parts, 1 + dimension)
                return ConvexBody.ball(radius, dimension, tuple(center))
    except BaseLabError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(field_name, str(err))
    raise ConfigError(field_name, f"unknown body '{spec}'")


def parse_measure(spec: str, dimension: int = 1, field_name: str = "measure.source") -> Potential:
    """
        'gaussian', 'gaussian:var', 'uniform:lo:hi', 'ball:r', 'powerlaw:beta', 'huber', 'poly:a:c'
        (a x^2/2 + c x^4, one-dimensional).
        :raises ConfigError:
    """
    name, *parts = spec.strip().lower().split(":")
    try:
        match name:
            case "gaussian" if not parts:
                return make_potential(Gaussian(dimension))
            case "gaussian":
                (variance,) = _numbers(field_name, parts, 1)
                return make_potential(Gaussian(dimension, variance=variance))
            case "uniform":
                lo, hi = _numbers(field_name, parts, 2)
                return make_potential(UniformBody(ConvexBody.box(lo, hi, dimension)))
            case "ball":
                return make_potential(UniformBody(parse_body(spec, dimension, field_name)))
            case "powerlaw":
                (beta,) = _numbers(field_name, parts, 1)
                return make_potential(PowerLaw(dimension, beta))
            case "huber":
                _numbers(field_name, parts, 0)
                return make_potential(HuberProduct(dimension))
            case "poly":
                a, c = _numbers(field_name, parts, 2)
                if dimension != 1:
                    raise ConfigError(field_name, "polynomial measures are one-dimensional here")
                return make_potential(ConvexPolynomial(1, ((a,),), c))
    except BaseLabError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(field_name, str(err))
    raise ConfigError(field_name, f"unknown measure '{spec}'")

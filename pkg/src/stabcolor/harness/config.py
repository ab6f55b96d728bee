"""Experiment configuration: YAML file, environment overrides, flag overrides.

Precedence is defaults < file < environment (``STABCOLOR_*``) < flags.
Every field is validated when the config is built, before any trial runs.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields

import yaml

from ..core import ID_POLICIES, TOPOLOGY_KINDS
from ..simnet import ADVERSARY_MODES, CHANNEL_MODES, STOP_CONDITIONS, TRANSPORTS

ENV_PREFIX = "STABCOLOR_"
SCHEDULES = ("sync", "random")


class ConfigError(ValueError):
    pass


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"0,2,4"`` -> (0, 2, 4); ``"3-6"`` -> (3, 4, 5, 6)."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep and lo:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def parse_seeds(value) -> tuple[int, ...]:
    """A count (``25`` -> seeds 0..24), a list, or a string list/range."""
    if isinstance(value, bool):
        raise ConfigError("seeds must be a count or a list of integers")
    if isinstance(value, int):
        if value < 1:
            raise ConfigError("seed count must be positive")
        return tuple(range(value))
    if isinstance(value, str):
        text = value.strip()
        if text.isdigit():
            return parse_seeds(int(text))
        return parse_int_list(text)
    return tuple(int(x) for x in value)


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "ring"
    n: int = 8
    p: float = 0.2
    id_policy: str = "random-distinct"
    id_exponent: int = 3
    k: tuple = (2,)
    adversary: str = "domain"
    schedule: str = "random"
    fairness: int | None = None
    deliver_p: float = 1.0
    seeds: tuple = tuple(range(10))
    stop: str = "galpha"
    max_steps: int = 1_000_000
    closure_rounds: int | None = None
    channel_mode: str = "shared"
    transport: str = "merged"
    out: str | None = None
    trace: str | None = None
    workers: int = 1

    def __post_init__(self):
        def choice(name, options):
            if getattr(self, name) not in options:
                raise ConfigError(f"{name} must be one of {', '.join(options)}; got {getattr(self, name)!r}")

        choice("topology", TOPOLOGY_KINDS)
        choice("id_policy", ID_POLICIES)
        choice("adversary", ADVERSARY_MODES)
        choice("schedule", SCHEDULES)
        choice("stop", STOP_CONDITIONS)
        choice("channel_mode", CHANNEL_MODES)
        choice("transport", TRANSPORTS)
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.topology == "ring" and self.n < 3:
            raise ConfigError("a ring needs n >= 3")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("p must be in (0, 1]")
        if self.id_exponent < 1:
            raise ConfigError("id_exponent must be >= 1")
        if not self.k or any(x < 0 for x in self.k):
            raise ConfigError("k must be a non-empty list of non-negative integers")
        if self.fairness is not None and self.fairness < 2:
            raise ConfigError("fairness must be at least 2")
        if not 0.0 < self.deliver_p <= 1.0:
            raise ConfigError("deliver_p must be in (0, 1]")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be a non-empty list of distinct integers")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.closure_rounds is not None and self.closure_rounds < 0:
            raise ConfigError("closure_rounds must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    # -- mapping round trip

    def to_mapping(self) -> dict:
        d = dataclasses.asdict(self)
        d["k"] = list(self.k)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_mapping(cls, data: dict, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        values = base.to_mapping() if base is not None else {}
        values.update(data)
        values = {name: coerce(name, v) for name, v in values.items()}
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=True)

    @classmethod
    def loads(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
        return cls.from_mapping(data or {}, base)


_INT_FIELDS = {"n", "id_exponent", "max_steps", "workers"}
_OPT_INT_FIELDS = {"fairness", "closure_rounds"}
_FLOAT_FIELDS = {"p", "deliver_p"}
_OPT_STR_FIELDS = {"out", "trace"}


def coerce(name: str, raw):
    """Turn a file, environment or flag value into the field's type."""
    try:
        if name == "k":
            if isinstance(raw, (list, tuple)):
                return tuple(int(x) for x in raw)
            if isinstance(raw, int) and not isinstance(raw, bool):
                return (raw,)
            return parse_int_list(raw)
        if name == "seeds":
            return parse_seeds(raw)
        if name in _INT_FIELDS:
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(raw)
        if name in _OPT_INT_FIELDS:
            if raw is None or (isinstance(raw, str) and raw.lower() in ("", "none", "null")):
                return None
            return int(raw)
        if name in _FLOAT_FIELDS:
            return float(raw)
        if name in _OPT_STR_FIELDS:
            return None if raw in (None, "") else str(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {raw!r}") from None


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name not in known:
            raise ConfigError(f"unknown environment override {key}")
        out[name] = value
    return out


def build_config(path=None, flags: dict | None = None, environ=None) -> ExperimentConfig:
    """Layer defaults, an optional YAML file, ``STABCOLOR_*`` variables and flags."""
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path) as fh:
                cfg = ExperimentConfig.loads(fh.read(), cfg)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    env = env_overrides(environ)
    if env:
        cfg = ExperimentConfig.from_mapping(env, cfg)
    given = {k: v for k, v in (flags or {}).items() if v is not None}
    if given:
        cfg = ExperimentConfig.from_mapping(given, cfg)
    return cfg


__all__ = [
    "ConfigError",
    "ENV_PREFIX",
    "ExperimentConfig",
    "build_config",
    "coerce",
    "env_overrides",
    "parse_seeds",
]

"""Scenario configuration: INI sections, named profiles, overrides.

Keys live in five sections (``[network]``, ``[adversary]``, ``[trust]``,
``[allocation]``, ``[simulation]``) but are unique across sections, so an
override may name a key either bare (``rounds=50``) or qualified
(``simulation.rounds=50``). Precedence, lowest first: dataclass defaults,
config file, command-line overrides.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError

TRUST_MODES = ("social+behavioral", "behavioral", "none")
COMBINATIONS = ("map-prior", "bootstrap")
MOBILITY = ("static", "random-waypoint")


def _parse_pairs(text: str) -> tuple:
    pairs = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        a, sep, b = item.partition("-")
        if not sep:
            raise ConfigError(f"source pair {item!r} must look like 'src-dst'")
        try:
            pairs.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(f"source pair {item!r} must use integer node ids") from None
    return tuple(pairs)


def _format_pairs(pairs) -> str:
    return ",".join(f"{a}-{b}" for a, b in pairs)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    # [network]
    node_count: int = field(default=70, metadata={"section": "network"})
    width: float = field(default=1500.0, metadata={"section": "network"})
    height: float = field(default=1500.0, metadata={"section": "network"})
    radio_range: float = field(default=400.0, metadata={"section": "network"})
    capacity: float = field(default=50.0, metadata={"section": "network"})
    k_paths: int = field(default=3, metadata={"section": "network"})
    mobility: str = field(default="random-waypoint", metadata={"section": "network"})
    speed_min: float = field(default=1.0, metadata={"section": "network"})
    speed_max: float = field(default=5.0, metadata={"section": "network"})
    # [adversary]
    malicious_count: int = field(default=10, metadata={"section": "adversary"})
    drop_probability: float = field(default=0.8, metadata={"section": "adversary"})
    plr: float = field(default=0.0, metadata={"section": "adversary"})
    spoof_count: int = field(default=0, metadata={"section": "adversary"})
    # [trust]
    trust_mode: str = field(default="social+behavioral", metadata={"section": "trust"})
    combination: str = field(default="map-prior", metadata={"section": "trust"})
    observe_probability: float = field(default=0.1, metadata={"section": "trust"})
    prior_strength: float = field(default=10.0, metadata={"section": "trust"})
    social_malicious: float = field(default=0.6, metadata={"section": "trust"})
    social_valid_min: float = field(default=0.85, metadata={"section": "trust"})
    social_valid_max: float = field(default=1.0, metadata={"section": "trust"})
    seed_threshold: float = field(default=0.85, metadata={"section": "trust"})
    unobserved_trust: float = field(default=1.0, metadata={"section": "trust"})
    tau_t: float = field(default=0.65, metadata={"section": "trust"})
    tau_s: float = field(default=0.9, metadata={"section": "trust"})
    ism_enabled: bool = field(default=True, metadata={"section": "trust"})
    relay_evidence: bool = field(default=False, metadata={"section": "trust"})
    epsilon: float = field(default=0.7, metadata={"section": "trust"})
    zeta: float = field(default=0.1, metadata={"section": "trust"})
    rho: float = field(default=0.5, metadata={"section": "trust"})
    refresh_period: int = field(default=50, metadata={"section": "trust"})
    # [allocation]
    mu: float = field(default=0.0, metadata={"section": "allocation"})
    utility: str = field(default="combined", metadata={"section": "allocation"})
    t0: float = field(default=1.0, metadata={"section": "allocation"})
    max_iter: int = field(default=5000, metadata={"section": "allocation"})
    tol: float = field(default=1e-6, metadata={"section": "allocation"})
    # [simulation]
    rounds: int = field(default=200, metadata={"section": "simulation"})
    packets_per_round: int = field(default=100, metadata={"section": "simulation"})
    source_pairs: int = field(default=4, metadata={"section": "simulation"})
    pairs: tuple = field(default=(), metadata={"section": "simulation"})
    rng_seed: int = field(default=1, metadata={"section": "simulation"})

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.node_count >= 2, "node_count must be >= 2")
        need(self.width > 0 and self.height > 0, "area dimensions must be positive")
        need(self.radio_range > 0, "radio_range must be positive")
        need(self.capacity >= 0, "capacity must be >= 0")
        need(self.k_paths >= 1, "k_paths must be >= 1")
        need(self.mobility in MOBILITY, f"mobility must be one of {MOBILITY}")
        need(0 <= self.speed_min <= self.speed_max, "need 0 <= speed_min <= speed_max")
        need(0 <= self.malicious_count < self.node_count, "need 0 <= malicious_count < node_count")
        need(0 <= self.spoof_count <= self.malicious_count, "spoof_count cannot exceed malicious_count")
        for name in ("drop_probability", "plr", "observe_probability", "social_malicious",
                     "social_valid_min", "social_valid_max", "seed_threshold",
                     "unobserved_trust", "tau_t", "tau_s", "epsilon", "zeta", "rho"):
            v = getattr(self, name)
            need(0.0 <= v <= 1.0, f"{name} must lie in [0, 1], got {v}")
        need(self.social_valid_min <= self.social_valid_max, "social_valid_min > social_valid_max")
        need(self.epsilon >= self.zeta, "epsilon must be >= zeta")
        need(self.trust_mode in TRUST_MODES, f"trust_mode must be one of {TRUST_MODES}")
        need(self.combination in COMBINATIONS, f"combination must be one of {COMBINATIONS}")
        need(self.prior_strength >= 0, "prior_strength must be >= 0")
        need(self.refresh_period >= 0, "refresh_period must be >= 0")
        need(self.mu >= 0, "mu must be >= 0")
        need(self.utility in ("combined", "diversity"), "utility must be combined or diversity")
        need(self.t0 > 0 and self.tol > 0 and self.max_iter >= 1, "bad solver settings")
        need(self.rounds >= 1 and self.packets_per_round >= 0, "bad run length")
        need(self.source_pairs >= 0, "source_pairs must be >= 0")
        for a, b in self.pairs:
            need(0 <= a < self.node_count and 0 <= b < self.node_count and a != b,
                 f"bad source pair {a}-{b}")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @property
    def mobile(self) -> bool:
        return self.mobility == "random-waypoint"


FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
SECTIONS = ("network", "adversary", "trust", "allocation", "simulation")


def _coerce(name: str, text: str):
    f = FIELDS[name]
    typ = f.type if isinstance(f.type, str) else f.type.__name__
    text = text.strip()
    try:
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
        if typ == "bool":
            return _bool(text)
        if typ == "tuple":
            return _parse_pairs(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def _resolve_key(key: str) -> str:
    section, dot, name = key.strip().rpartition(".")
    if name not in FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    if dot and FIELDS[name].metadata["section"] != section:
        raise ConfigError(f"key {name!r} belongs to section [{FIELDS[name].metadata['section']}]")
    return name


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read INI ``text`` on top of ``base`` (default: built-in defaults)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            name = _resolve_key(f"{section}.{key}")
            values[name] = _coerce(name, raw)
    return dataclasses.replace(base or ScenarioConfig(), **values)


def load_config(path: str | Path) -> ScenarioConfig:
    """Load a config file, or a named profile (``desk30``, ``full70``)."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        return load_profile(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def load_profile(name: str) -> ScenarioConfig:
    try:
        text = resources.files("trustflow.profiles").joinpath(f"{name}.cfg").read_text()
    except FileNotFoundError:
        raise ConfigError(f"no profile named {name!r}") from None
    return parse_config(text)


def apply_overrides(cfg: ScenarioConfig, overrides: Iterable[str] | Mapping[str, object]) -> ScenarioConfig:
    """Apply ``key=value`` strings (or a mapping) on top of ``cfg``."""
    values = {}
    items = overrides.items() if isinstance(overrides, Mapping) else (
        _split_override(o) for o in overrides)
    for key, value in items:
        name = _resolve_key(key)
        values[name] = _coerce(name, value) if isinstance(value, str) else value
    return dataclasses.replace(cfg, **values)


def _split_override(text: str) -> tuple:
    key, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} must look like key=value")
    return key.strip(), value


def format_config(cfg: ScenarioConfig) -> str:
    """Serialize every key; parsing the result gives back ``cfg``."""
    buf = io.StringIO()
    for section in SECTIONS:
        buf.write(f"[{section}]\n")
        for name, f in FIELDS.items():
            if f.metadata["section"] != section:
                continue
            v = getattr(cfg, name)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, tuple):
                text = _format_pairs(v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            buf.write(f"{name} = {text}\n")
        buf.write("\n")
    return buf.getvalue()


def config_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for name in FIELDS:
        v = getattr(cfg, name)
        out[name] = [list(p) for p in v] if name == "pairs" else v
    return out


def config_from_dict(values: Mapping[str, object]) -> ScenarioConfig:
    """Inverse of :func:`config_dict`."""
    values = dict(values)
    if "pairs" in values:
        values["pairs"] = tuple((int(a), int(b)) for a, b in values["pairs"])
    for name in values:
        _resolve_key(name)
    return dataclasses.replace(ScenarioConfig(), **values)

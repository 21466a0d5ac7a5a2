"""Scenario configuration: an INI file with one ``[scenario]`` section, one
``[facility.<name>]`` section per facility (in file order) and a ``[travel]``
matrix. See README.md for the full key list."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .distributions import ConfigError, ServiceDistribution, parse_distribution
from .diversion import POLICIES
from .facility import SUBSYSTEMS

__all__ = [
    "FacilityConfig",
    "ScenarioConfig",
    "ConfigValidationError",
    "parse_config",
    "parse_config_text",
    "resolve_config_path",
    "bundled_configs",
]

SCENARIO_KEYS = {
    "policies": str,
    "replications": int,
    "horizon_days": int,
    "warmup_days": int,
    "seed": int,
    "rate_window": float,
    "session_minutes": float,
    "arrival_window": float,
    "output_dir": str,
}


class ConfigValidationError(ConfigError):
    """Every violation found in a config, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid scenario config:\n  " + "\n  ".join(self.violations))


@dataclass(frozen=True)
class FacilityConfig:
    name: str
    interarrival: float
    service: dict = field(default_factory=dict)
    p_ncd: float = 0.5
    p_lab: float = 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    facilities: tuple
    travel: tuple
    policies: tuple = POLICIES
    replications: int = 40
    horizon_days: int = 365
    warmup_days: int = 180
    seed: int = 20240101
    rate_window: float = 60.0
    session_minutes: float = 360.0
    arrival_window: float | None = None  # None: same as session_minutes
    output_dir: str = "out"

    @property
    def arrival_minutes(self) -> float:
        return self.session_minutes if self.arrival_window is None else self.arrival_window

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.facilities]

    def violations(self) -> list[str]:
        out = []
        n = len(self.facilities)
        if n < 1:
            out.append("at least one [facility.<name>] section is required")
        if len(set(self.names)) != n:
            out.append("facility names must be unique")
        for f in self.facilities:
            where = f"facility.{f.name}"
            if not f.interarrival > 0:
                out.append(f"{where}.interarrival must be > 0 (got {f.interarrival})")
            for key in ("p_ncd", "p_lab"):
                v = getattr(f, key)
                if not 0.0 <= v <= 1.0:
                    out.append(f"{where}.{key} must lie in [0, 1] (got {v})")
            for s in SUBSYSTEMS:
                if not isinstance(f.service.get(s), ServiceDistribution):
                    out.append(f"{where}.{s} service distribution is missing")
        if len(self.travel) != n or any(len(row) != n for row in self.travel):
            out.append(f"travel must be a {n}x{n} matrix")
        else:
            for i, row in enumerate(self.travel):
                for j, d in enumerate(row):
                    if not d > 0:
                        out.append(f"travel.{self.names[i]}[{j}] must be > 0 (got {d})")
                    if j != i and row[i] > d:
                        out.append(
                            f"travel.{self.names[i]}: assigned facility must be nearest "
                            f"({row[i]} > {d} to {self.names[j]})")
        if not self.policies:
            out.append("scenario.policies must name at least one policy")
        for p in self.policies:
            if p not in POLICIES:
                out.append(f"scenario.policies: unknown policy {p!r} (choose from {POLICIES})")
        for key in ("replications", "horizon_days"):
            if not getattr(self, key) > 0:
                out.append(f"scenario.{key} must be > 0 (got {getattr(self, key)})")
        if self.warmup_days < 0:
            out.append(f"scenario.warmup_days must be >= 0 (got {self.warmup_days})")
        if not self.warmup_days < self.horizon_days:
            out.append(f"scenario.warmup_days must be < horizon_days "
                       f"({self.warmup_days} >= {self.horizon_days})")
        if not 0 <= self.seed < 2 ** 64:
            out.append(f"scenario.seed must be a 64-bit unsigned integer (got {self.seed})")
        if not self.rate_window > 0:
            out.append(f"scenario.rate_window must be > 0 (got {self.rate_window})")
        if not self.session_minutes > 0:
            out.append(f"scenario.session_minutes must be > 0 (got {self.session_minutes})")
        if self.arrival_window is not None and not self.arrival_window > 0:
            out.append(f"scenario.arrival_window must be > 0 (got {self.arrival_window})")
        return out

    def validate(self) -> "ScenarioConfig":
        bad = self.violations()
        if bad:
            raise ConfigValidationError(bad)
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_ini(self) -> str:
        cp = _new_parser()
        cp["scenario"] = {
            "policies": ", ".join(self.policies),
            "replications": str(self.replications),
            "horizon_days": str(self.horizon_days),
            "warmup_days": str(self.warmup_days),
            "seed": str(self.seed),
            "rate_window": repr(float(self.rate_window)),
            "session_minutes": repr(float(self.session_minutes)),
        }
        if self.arrival_window is not None:
            cp["scenario"]["arrival_window"] = repr(float(self.arrival_window))
        cp["scenario"]["output_dir"] = self.output_dir
        for f in self.facilities:
            section = {
                "interarrival": repr(float(f.interarrival)),
                "p_ncd": repr(float(f.p_ncd)),
                "p_lab": repr(float(f.p_lab)),
            }
            section.update({s: str(f.service[s]) for s in SUBSYSTEMS})
            cp[f"facility.{f.name}"] = section
        cp["travel"] = {
            name: ", ".join(repr(float(d)) for d in row)
            for name, row in zip(self.names, self.travel)
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case
    return cp


def _number(raw: str, kind, where: str, errors: list):
    try:
        return kind(raw)
    except ValueError:
        errors.append(f"{where}: expected {kind.__name__}, got {raw!r}")
        return None


def parse_config_text(text: str, overrides: dict | None = None) -> ScenarioConfig:
    """Parse INI text; ``overrides`` maps ``section.key`` to a raw string value."""
    cp = _new_parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigValidationError([f"malformed config: {exc}"]) from None
    errors: list[str] = []
    for dotted, raw in (overrides or {}).items():
        section, _, key = dotted.rpartition(".")
        if not section or not cp.has_section(section):
            errors.append(f"override {dotted!r}: no such section {section!r}")
            continue
        cp[section][key] = str(raw)

    if not cp.has_section("scenario"):
        errors.append("missing [scenario] section")
    sc = cp["scenario"] if cp.has_section("scenario") else {}
    kwargs = {}
    for key, kind in SCENARIO_KEYS.items():
        if key not in sc:
            continue
        if key == "policies":
            kwargs[key] = tuple(p.strip() for p in sc[key].split(",") if p.strip())
        elif kind is str:
            kwargs[key] = sc[key]
        else:
            value = _number(sc[key], kind, f"scenario.{key}", errors)
            if value is not None:
                kwargs[key] = value
    for key in sc:
        if key not in SCENARIO_KEYS:
            errors.append(f"scenario.{key}: unknown key")

    facilities = []
    for section in cp.sections():
        if not section.startswith("facility."):
            if section not in ("scenario", "travel"):
                errors.append(f"[{section}]: unknown section")
            continue
        name = section[len("facility."):]
        sec = cp[section]
        if "interarrival" not in sec:
            errors.append(f"{section}.interarrival is missing")
        interarrival = _number(sec.get("interarrival", "nan"), float, f"{section}.interarrival", errors)
        probs = {}
        for key in ("p_ncd", "p_lab"):
            probs[key] = _number(sec.get(key, "0.5"), float, f"{section}.{key}", errors)
        service = {}
        for s in SUBSYSTEMS:
            if s not in sec:
                errors.append(f"{section}.{s} service distribution is missing")
                continue
            try:
                service[s] = parse_distribution(sec[s])
            except ConfigError as exc:
                errors.append(f"{section}.{s}: {exc}")
        for key in sec:
            if key not in ("interarrival", "p_ncd", "p_lab", *SUBSYSTEMS):
                errors.append(f"{section}.{key}: unknown key")
        facilities.append(FacilityConfig(name, interarrival if interarrival is not None else float("nan"),
                                          service, probs["p_ncd"] or 0.0, probs["p_lab"] or 0.0))

    travel = []
    if not cp.has_section("travel"):
        errors.append("missing [travel] section")
    else:
        tr = cp["travel"]
        for f in facilities:
            if f.name not in tr:
                errors.append(f"travel.{f.name} row is missing")
                travel.append(())
                continue
            row = [_number(v.strip(), float, f"travel.{f.name}", errors) for v in tr[f.name].split(",")]
            travel.append(tuple(v if v is not None else float("nan") for v in row))
        for key in tr:
            if key not in {f.name for f in facilities}:
                errors.append(f"travel.{key}: not a facility")

    if errors:
        raise ConfigValidationError(errors)
    cfg = ScenarioConfig(facilities=tuple(facilities), travel=tuple(travel), **kwargs)
    return cfg.validate()


def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("losdivert.data").iterdir()
                  if p.name.endswith(".cfg"))


def resolve_config_path(path) -> Path:
    """A filesystem path, or the name of a config bundled with the package."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in bundled_configs() and p.parent == Path("."):
        return Path(str(resources.files("losdivert.data") / p.name))
    raise FileNotFoundError(f"config file not found: {path}")


def parse_config(path, overrides: dict | None = None) -> ScenarioConfig:
    text = resolve_config_path(path).read_text()
    return parse_config_text(text, overrides)

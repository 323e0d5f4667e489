"""Flat ``key = value`` scenario configuration.

Blank lines and ``#`` comments are ignored. Unknown keys and bad values are
reported with their line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from .adversary import BehaviorProfile, ProposerMode
from .crypto import BACKENDS
from .selection import SelectionParameterError, parse_tau


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    nodes: int = 10
    weights_csv: str | None = None
    weight_mu: float = 1.798
    weight_sigma: float = 1.0
    weight_mean: float = 9.97
    behaviors: list[tuple[BehaviorProfile, int]] = field(default_factory=list)
    epochs: int = 2
    tau: Fraction = Fraction(1, 2)
    layers: int = 3
    backend: str = "ecvrf"
    rng_seed: int = 0
    clients: int = 2
    proposer: ProposerMode = ProposerMode.HONEST
    trials_a: int = 3000
    trials_b: int = 3000
    alpha: float = 0.05
    control: str = "none"

    def profiles(self) -> list[BehaviorProfile]:
        """One profile per node: listed behaviors first, honest for the rest."""
        out = []
        for profile, count in self.behaviors:
            out.extend([profile] * count)
        if len(out) > self.nodes:
            raise ConfigError(f"behaviors cover {len(out)} nodes but nodes = {self.nodes}")
        return out + [BehaviorProfile()] * (self.nodes - len(out))

    def as_lines(self) -> list[str]:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "behaviors":
                value = ", ".join(f"{_profile_text(p)}*{n}" for p, n in value)
            elif isinstance(value, ProposerMode):
                value = value.value
            elif value is None:
                continue
            lines.append(f"{f.name} = {value}")
        return lines


def _profile_text(p: BehaviorProfile) -> str:
    return f"{p.kind.value}:{p.attempts}" if p.kind.value == "grinder" else p.kind.value


def _positive_int(v: str) -> int:
    n = int(v)
    if n < 1:
        raise ValueError("must be >= 1")
    return n


def _nonneg_int(v: str) -> int:
    n = int(v)
    if n < 0:
        raise ValueError("must be >= 0")
    return n


def _tau(v: str) -> Fraction:
    try:
        return parse_tau(v)
    except SelectionParameterError as exc:
        raise ValueError(str(exc)) from None


def _backend(v: str) -> str:
    if v not in BACKENDS:
        raise ValueError(f"expected one of {sorted(BACKENDS)}")
    return v


def _behaviors(v: str) -> list[tuple[BehaviorProfile, int]]:
    out = []
    for item in filter(None, (s.strip() for s in v.split(","))):
        spec, _, count = item.partition("*")
        out.append((BehaviorProfile.parse(spec), _positive_int(count or "1")))
    return out


def _control(v: str) -> str:
    if v not in ("none", "uniform"):
        raise ValueError("expected 'none' or 'uniform'")
    return v


def _alpha(v: str) -> float:
    a = float(v)
    if not 0 < a < 1:
        raise ValueError("must lie in (0, 1)")
    return a


_PARSERS = {
    "nodes": _positive_int,
    "weights_csv": str,
    "weight_mu": float,
    "weight_sigma": float,
    "weight_mean": float,
    "behaviors": _behaviors,
    "epochs": _nonneg_int,
    "tau": _tau,
    "layers": _positive_int,
    "backend": _backend,
    "rng_seed": _nonneg_int,
    "clients": _positive_int,
    "proposer": ProposerMode,
    "trials_a": _positive_int,
    "trials_b": _positive_int,
    "alpha": _alpha,
    "control": _control,
}


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    cfg = ScenarioConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _PARSERS[key](value))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r} ({exc})") from None
    try:
        cfg.profiles()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(), str(path))

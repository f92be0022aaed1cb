"""Run configuration: ``key=value`` text files, validation and rendering.

One pair per line; ``#`` starts a comment. Unknown keys are rejected so a
misspelt key never falls back to a default silently. Missing keys take the
defaults in :data:`DEFAULTS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .potentials import Potential
from .walls import WallLaw, check_separability

SCENARIOS = ("driven", "exact")
WALLS = ("oscillating", "constant", "sqrt_quadratic")
POTENTIALS = ("none", "linear_drive", "quadratic_drive", "pure_time")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the key, ``line`` the source line."""

    def __init__(self, message, field=None, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "driven"
    wall: str = "oscillating"
    L0: float = 10.0
    a: float = 3.0
    omega0: float = 0.5
    phase0: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 100.0
    potential: str = "linear_drive"
    epsilon: float = 0.1
    omega: float = 0.05
    v0: float = 0.0
    v1: float = 0.0
    T: float = 200.0
    sample_dt: float = 0.05
    N: int = 64
    initial_mode: int = 1
    modes: str = "1"
    amplitudes: str = ""
    spectrum: bool = False
    max_harmonic: float = 40.0
    resolution: int = 8
    out_dir: str = ""

    def wall_law(self) -> WallLaw:
        if self.wall == "constant":
            return WallLaw.constant(self.L0, horizon=self.T)
        if self.wall == "oscillating":
            return WallLaw.oscillating(self.L0, self.a, self.omega0, self.phase0, horizon=self.T)
        return WallLaw.sqrt_quadratic(self.alpha, self.beta, self.gamma, horizon=self.T)

    def potential_obj(self) -> Potential:
        if self.potential == "none":
            return Potential.none()
        if self.potential == "linear_drive":
            return Potential.linear_drive(self.epsilon, self.omega)
        if self.potential == "quadratic_drive":
            return Potential.quadratic_drive(self.epsilon, self.omega)
        return Potential.pure_time(self.v0, self.v1, self.omega)

    def mode_indices(self) -> list[int]:
        return [int(s) for s in self.modes.split(",") if s.strip()]

    def mode_amplitudes(self) -> list[complex]:
        if not self.amplitudes.strip():
            k = len(self.mode_indices())
            return [1.0 / math.sqrt(k) + 0j] * k
        return [complex(s.strip().replace(" ", "")) for s in self.amplitudes.split(",")]


DEFAULTS = RunConfig()
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw, line=None):
    kind = _TYPES[key]
    try:
        if kind == "float":
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError
            return val
        if kind == "int":
            return int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind}", key, line) from None
    return raw


def _pairs(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", None, lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", key, lineno)
        yield lineno, key, val


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    for lineno, key, val in _pairs(text):
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key, lineno)
        values[key] = _convert(key, val, lineno)
        lines[key] = lineno
    cfg = replace(DEFAULTS, **values)
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.field in lines and exc.line is None:
            raise ConfigError(str(exc), exc.field, lines[exc.field]) from None
        raise
    return cfg


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``key=value`` strings on top of a parsed config."""
    values = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, val = (s.strip() for s in item.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", key)
        values[key] = _convert(key, val)
    cfg = replace(cfg, **values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def need(ok, field, msg):
        if not ok:
            raise ConfigError(f"{field}: {msg}", field)

    need(cfg.scenario in SCENARIOS, "scenario", f"must be one of {SCENARIOS}")
    need(cfg.wall in WALLS, "wall", f"must be one of {WALLS}")
    need(cfg.potential in POTENTIALS, "potential", f"must be one of {POTENTIALS}")
    need(cfg.T > 0, "T", "must be positive")
    need(cfg.sample_dt > 0, "sample_dt", "must be positive")
    need(cfg.sample_dt <= cfg.T, "sample_dt", "must not exceed T")
    need(cfg.N >= 2, "N", "must be >= 2")
    need(1 <= cfg.initial_mode <= cfg.N, "initial_mode", "must lie in 1..N")
    need(cfg.max_harmonic > 0, "max_harmonic", "must be positive")
    need(cfg.resolution >= 1, "resolution", "must be >= 1")
    if cfg.wall in ("constant", "oscillating"):
        need(cfg.L0 > 0, "L0", "must be positive")
    if cfg.wall == "oscillating":
        need(cfg.a >= 0, "a", "must be >= 0")
        need(cfg.L0 > cfg.a, "L0", "must exceed a so the wall stays positive")
    if cfg.wall == "sqrt_quadratic":
        need(cfg.gamma > 0, "gamma", "must be positive")
    if cfg.potential in ("linear_drive", "quadratic_drive", "pure_time"):
        need(cfg.omega >= 0, "omega", "must be >= 0")
    try:
        cfg.wall_law()
    except ValueError as exc:
        raise ConfigError(f"wall: {exc}", "wall") from None
    if cfg.spectrum:
        need(cfg.potential in ("linear_drive", "quadratic_drive") and cfg.omega > 0, "omega",
             "spectrum needs a drive with omega > 0 as its base frequency")
    if cfg.scenario == "exact":
        need(cfg.potential in ("none", "pure_time"), "potential",
             "exact scenario supports only none or pure_time")
        rep = check_separability(cfg.wall_law(), cfg.potential_obj(), cfg.T)
        need(rep.separable, "wall", f"exact scenario needs a separable wall law ({rep.reason})")
        try:
            idx = cfg.mode_indices()
        except ValueError:
            raise ConfigError("modes: expected comma-separated integers", "modes") from None
        need(len(idx) > 0 and min(idx) >= 1 and len(set(idx)) == len(idx), "modes",
             "need distinct positive mode indices")
        try:
            amps = cfg.mode_amplitudes()
        except ValueError:
            raise ConfigError("amplitudes: expected comma-separated complex numbers",
                              "amplitudes") from None
        need(len(amps) == len(idx), "amplitudes", "need one amplitude per mode")
        total = sum(abs(c) ** 2 for c in amps)
        need(abs(total - 1.0) <= 1e-10, "amplitudes", f"sum |c|^2 = {total:.12g}, must be 1")


def render_config(cfg: RunConfig) -> str:
    """Text that :func:`parse_config` maps back to ``cfg``."""
    out = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        out.append(f"{f.name}={s}")
    return "\n".join(out) + "\n"

"""Flat key=value scenario configuration.

One ``key = value`` pair per line, ``#`` starts a comment, unknown keys
are errors. A material preset fills alpha/beta/k/T_m/L; explicit keys
override preset values. Missing dt resolves to the largest explicit step
at s0 (so the CFL clamp never subdivides); missing t_final means run to
setpoint convergence under a hard cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .controller import ControllerGains
from .diagnostics import default_epsilon, epsilon_upper_bound
from .errors import ConfigError
from .model import (InitialCondition, MATERIAL_PRESETS, PlantParams, Setpoint,
                    flat_profile, linear_profile, validate_config)
from .solver import SolverSettings, stable_dt

_FLOAT_KEYS = ("alpha", "beta", "k", "L", "T_m", "s0", "s_r", "qc0",
               "T0_amplitude", "dt", "t_final", "c1", "c2", "delta1",
               "delta2", "epsilon")
_INT_KEYS = ("N",)
_STR_KEYS = ("T0_profile", "material_preset")
KNOWN_KEYS = frozenset(_FLOAT_KEYS) | frozenset(_INT_KEYS) | frozenset(_STR_KEYS)

_DEFAULTS = {
    "qc0": 0.0,
    "T0_profile": "linear",
    "T0_amplitude": 1.0,
    "N": 200,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved scenario: plant, initial data, gains, numerics."""

    params: PlantParams
    ic: InitialCondition
    sp: Setpoint
    gains: ControllerGains
    settings: SolverSettings
    epsilon: float
    t_final: float | None
    T0_profile: str
    T0_amplitude: float
    material_preset: str | None

    def resolved_dt(self) -> float:
        if self.settings.dt is not None:
            return self.settings.dt
        return stable_dt(self.ic.s0, self.settings.N, self.params.alpha,
                         self.settings.cfl_safety)


def parse_text(text: str) -> dict[str, str]:
    """Raw key -> value strings; raises ConfigError on malformed lines."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _typed(raw: dict[str, str]) -> dict[str, object]:
    typed: dict[str, object] = {}
    for key, value in raw.items():
        try:
            if key in _FLOAT_KEYS:
                typed[key] = float(value)
            elif key in _INT_KEYS:
                typed[key] = int(value)
            else:
                typed[key] = value
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: cannot parse {value!r}") from exc
    return typed


def from_mapping(values: dict[str, object]) -> ScenarioConfig:
    """Build and validate a scenario from typed key/value pairs."""
    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    merged: dict[str, object] = dict(_DEFAULTS)

    preset_name = values.get("material_preset")
    if preset_name is not None:
        if preset_name not in MATERIAL_PRESETS:
            raise ConfigError(
                f"unknown material_preset {preset_name!r}; "
                f"available: {sorted(MATERIAL_PRESETS)}")
        merged.update(MATERIAL_PRESETS[preset_name])
    merged.update(values)

    missing = [key for key in ("alpha", "beta", "k", "L", "T_m", "s0", "s_r",
                               "c1", "c2", "delta1", "delta2")
               if key not in merged]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")

    params = PlantParams(alpha=float(merged["alpha"]), beta=float(merged["beta"]),
                         k=float(merged["k"]), L=float(merged["L"]),
                         T_m=float(merged["T_m"]))
    n = int(merged["N"])
    profile_kind = str(merged["T0_profile"])
    amplitude = float(merged["T0_amplitude"])
    if profile_kind == "linear":
        t0 = linear_profile(params.T_m, amplitude, n)
    elif profile_kind == "flat":
        if amplitude != 0.0:
            raise ConfigError(
                "T0_profile=flat requires T0_amplitude=0 "
                "(the interface sample must sit at the melting temperature)")
        t0 = flat_profile(params.T_m, n)
    else:
        raise ConfigError(f"T0_profile must be linear or flat, got {profile_kind!r}")

    ic = InitialCondition(s0=float(merged["s0"]), T0=t0,
                          qc0=float(merged.get("qc0", 0.0)))
    sp = Setpoint(s_r=float(merged["s_r"]))
    gains = ControllerGains(c1=float(merged["c1"]), c2=float(merged["c2"]),
                            delta1=float(merged["delta1"]),
                            delta2=float(merged["delta2"]))
    dt = merged.get("dt")
    settings = SolverSettings(N=n, dt=None if dt is None else float(dt))

    problems = [str(v) for v in validate_config(params, ic, sp, gains)]
    epsilon = merged.get("epsilon")
    if epsilon is None:
        epsilon = default_epsilon(params.alpha, params.beta, gains.c1)
    else:
        epsilon = float(epsilon)
        hi = epsilon_upper_bound(params.alpha, params.beta, gains.c1)
        if not 0.0 < epsilon < hi:
            problems.append(
                f"epsilon: actual={epsilon:.9g}, bound={hi:.9g} "
                f"(0 < epsilon < 2 sqrt(alpha c1)/beta)")
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))

    t_final = merged.get("t_final")
    return ScenarioConfig(
        params=params, ic=ic, sp=sp, gains=gains, settings=settings,
        epsilon=float(epsilon),
        t_final=None if t_final is None else float(t_final),
        T0_profile=profile_kind, T0_amplitude=amplitude,
        material_preset=None if preset_name is None else str(preset_name),
    )


def loads(text: str) -> ScenarioConfig:
    return from_mapping(_typed(parse_text(text)))


def load(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def to_text(cfg: ScenarioConfig, resolved_dt: float | None = None,
            resolved_t_final: float | None = None) -> str:
    """Serialize a scenario back to the flat format (round-trip precision).

    Pass the resolved dt / t_final actually used by a run to freeze them.
    """
    dt = resolved_dt if resolved_dt is not None else cfg.settings.dt
    t_final = resolved_t_final if resolved_t_final is not None else cfg.t_final
    lines = []
    if cfg.material_preset is not None:
        lines.append(f"material_preset = {cfg.material_preset}")
    lines += [
        f"alpha = {cfg.params.alpha!r}",
        f"beta = {cfg.params.beta!r}",
        f"k = {cfg.params.k!r}",
        f"L = {cfg.params.L!r}",
        f"T_m = {cfg.params.T_m!r}",
        f"s0 = {cfg.ic.s0!r}",
        f"s_r = {cfg.sp.s_r!r}",
        f"qc0 = {cfg.ic.qc0!r}",
        f"T0_profile = {cfg.T0_profile}",
        f"T0_amplitude = {cfg.T0_amplitude!r}",
        f"N = {cfg.settings.N}",
        f"c1 = {cfg.gains.c1!r}",
        f"c2 = {cfg.gains.c2!r}",
        f"delta1 = {cfg.gains.delta1!r}",
        f"delta2 = {cfg.gains.delta2!r}",
        f"epsilon = {cfg.epsilon!r}",
    ]
    if dt is not None:
        lines.append(f"dt = {dt!r}")
    if t_final is not None:
        lines.append(f"t_final = {t_final!r}")
    return "\n".join(lines) + "\n"


def as_mapping(cfg: ScenarioConfig) -> dict[str, object]:
    """Flatten a scenario back to config keys (inverse of from_mapping)."""
    base: dict[str, object] = {
        "alpha": cfg.params.alpha, "beta": cfg.params.beta, "k": cfg.params.k,
        "L": cfg.params.L, "T_m": cfg.params.T_m,
        "s0": cfg.ic.s0, "s_r": cfg.sp.s_r, "qc0": cfg.ic.qc0,
        "T0_profile": cfg.T0_profile, "T0_amplitude": cfg.T0_amplitude,
        "N": cfg.settings.N, "c1": cfg.gains.c1, "c2": cfg.gains.c2,
        "delta1": cfg.gains.delta1, "delta2": cfg.gains.delta2,
        "epsilon": cfg.epsilon,
    }
    if cfg.settings.dt is not None:
        base["dt"] = cfg.settings.dt
    if cfg.t_final is not None:
        base["t_final"] = cfg.t_final
    return base


def with_overrides(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Rebuild a scenario with some keys replaced (used by sweeps)."""
    base = as_mapping(cfg)
    base.update(overrides)
    return from_mapping(base)

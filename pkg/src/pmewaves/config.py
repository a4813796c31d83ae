"""Run configuration: a small sectioned key = value format with line-number
diagnostics, validated into an immutable RunConfig.

Example::

    [flow]
    cos = [0.3]
    sin = [0.4]

    [params]
    m = 2.0
    c = 4.0
    K = 100
    delta_schedule = [1e-1, 1e-2, 1e-3, 1e-4]
    L_schedule = [8, 16, 32]
    amplitude_schedule = [0.0, 0.5, 1.0]

    [grid]
    Ny = 32
    Nx_schedule = [128, 256, 512]

Values are JSON fragments (numbers, lists, strings).  Unknown sections or
keys are rejected; schedules must be monotone; m = 1 is excluded (the
operator degenerates to the linear heat case, outside this solver's scope).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dc_fields

from .flow import make_flow, speed_bounds

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    flow_cos: tuple = ()
    flow_sin: tuple = ()
    m: float = 2.0
    c: float = 1.0
    K: float = 100.0
    delta_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    L_schedule: tuple = (8.0, 16.0, 32.0)
    amplitude_schedule: tuple = (0.0, 0.5, 1.0)
    Ny: int = 32
    Nx_schedule: tuple = (128, 256, 512)
    newton_tol_factor: float = 1e-9
    linear_tol: float = 1e-10
    quadrature_tol: float = 1e-11
    A_weight: float = 0.5
    out_dir: str = "out"
    seed: int = 1234

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}


_SCHEMA = {
    "flow": {"cos": "flow_cos", "sin": "flow_sin"},
    "params": {
        "m": "m", "c": "c", "K": "K",
        "delta_schedule": "delta_schedule",
        "L_schedule": "L_schedule",
        "amplitude_schedule": "amplitude_schedule",
    },
    "grid": {"Ny": "Ny", "Nx_schedule": "Nx_schedule"},
    "tolerances": {
        "newton": "newton_tol_factor",
        "linear": "linear_tol",
        "quadrature": "quadrature_tol",
    },
    "solver": {"A_weight": "A_weight"},
    "output": {"dir": "out_dir", "seed": "seed"},
}

_TUPLE_FIELDS = {
    "flow_cos", "flow_sin", "delta_schedule", "L_schedule",
    "amplitude_schedule", "Nx_schedule",
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError naming the offending line."""
    values: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(
                f"line {lineno}: unknown key '{key}' in section [{section}]"
            )
        try:
            value = json.loads(rhs.strip())
        except json.JSONDecodeError:
            value = rhs.strip()
        attr = _SCHEMA[section][key]
        if attr in _TUPLE_FIELDS:
            if not isinstance(value, list):
                raise ConfigError(f"line {lineno}: '{key}' must be a list")
            value = tuple(value)
        values[attr] = value

    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.m == 1.0:
        raise ConfigError(
            "m = 1 is excluded: the equation degenerates to the linear case"
        )
    if cfg.m <= 0.0:
        raise ConfigError("m must be positive")
    if cfg.c <= 0.0:
        raise ConfigError("c must be positive")
    if cfg.K <= 0.0:
        raise ConfigError("K must be positive")
    for name, sched, direction in [
        ("delta_schedule", cfg.delta_schedule, "decreasing"),
        ("L_schedule", cfg.L_schedule, "increasing"),
        ("amplitude_schedule", cfg.amplitude_schedule, "increasing"),
    ]:
        if not sched:
            raise ConfigError(f"{name} must be nonempty")
        diffs = [b - a for a, b in zip(sched, sched[1:])]
        if direction == "decreasing" and any(d >= 0 for d in diffs):
            raise ConfigError(f"{name} must be strictly decreasing")
        if direction == "increasing" and any(d <= 0 for d in diffs):
            raise ConfigError(f"{name} must be strictly increasing")
    if any(d <= 0 for d in cfg.delta_schedule):
        raise ConfigError("delta_schedule entries must be positive")
    if len(cfg.Nx_schedule) != len(cfg.L_schedule):
        raise ConfigError("Nx_schedule must have one entry per L_schedule entry")
    for tol_name in ("newton_tol_factor", "linear_tol", "quadrature_tol"):
        if getattr(cfg, tol_name) <= 0.0:
            raise ConfigError(f"tolerance {tol_name} must be positive")
    if not 0.0 <= cfg.A_weight <= 1.0:
        raise ConfigError("solver A_weight must lie in [0, 1]")

    flow = make_flow(cfg.flow_cos, cfg.flow_sin)
    c_star, c0, _ = speed_bounds(flow, cfg.c)
    if cfg.c <= c_star:
        raise ConfigError(
            f"wave speed c = {cfg.c} must strictly exceed c* = {c_star} "
            "(flow minimum too deep)"
        )


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of parse_config: parse(serialize(cfg)) == cfg."""
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, attr in keys.items():
            value = getattr(cfg, attr)
            if isinstance(value, tuple):
                value = list(value)
            lines.append(f"{key} = {json.dumps(value)}")
        lines.append("")
    return "\n".join(lines)

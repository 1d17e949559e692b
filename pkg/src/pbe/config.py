"""Simulation configuration and its flat ``key = value`` file format.

Keys are grouped by dotted sections::

    # sum kernel, alpha = -1/2
    mesh.cells = 120
    kernel.coagulation = sum
    kernel.alpha = -0.5
    time.T = 100

Unknown keys are errors. A bare key is accepted when it names exactly one
canonical key (``alpha`` -> ``kernel.alpha``); ``kernel`` and ``initial``
alias ``kernel.coagulation`` and ``initial.kind``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

DT_MODES = ("adaptive", "fixed", "proportional")
INITIAL_KINDS = ("exp", "zero", "table")


@dataclass(frozen=True)
class SimConfig:
    x_min: float = 1e-3
    R: float = 100.0
    n_cells: int = 120
    mesh_kind: str = "uniform"
    mesh_ratio: float | None = None
    max_ratio: float = 4.0
    coagulation: str = "sum"
    beta: float = 1.0
    alpha: float = -0.5
    selection_exponent: float | None = None
    fragmentation: bool = True
    quadrature_order: int = 5
    initial: str = "exp"
    initial_table: str | None = None
    T: float = 100.0
    theta: float = 0.5
    dt_mode: str = "adaptive"
    dt: float | None = None
    dt_per_h: float | None = None
    dt_max: float = math.inf
    max_steps: int = 50_000_000
    output_times: tuple = ()
    output_dir: str = "out"
    eoc_grids: tuple = (30, 60, 120, 240, 480)
    self_check: bool = True

    def __post_init__(self):
        _validate(self)

    def mesh(self):
        from .mesh import build_mesh

        return build_mesh(
            self.mesh_kind, self.x_min, self.R, self.n_cells, ratio=self.mesh_ratio, max_ratio=self.max_ratio
        )

    def kernel_set(self):
        from .kernels import make_kernel_set

        return make_kernel_set(
            coagulation=self.coagulation,
            alpha=self.alpha,
            selection_exponent=self.selection_exponent,
            beta=self.beta,
            fragmentation=self.fragmentation,
        )

    def initial_density(self):
        from .densities import ExponentialDensity, TabulatedDensity, ZeroDensity

        if self.initial == "exp":
            return ExponentialDensity()
        if self.initial == "zero":
            return ZeroDensity()
        return TabulatedDensity.from_csv(self.initial_table)

    def with_overrides(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        """Canonical text form; ``parse_config_text(cfg.to_text()) == cfg``."""
        lines = []
        for key, attr in _KEYS.items():
            value = getattr(self, attr)
            if value is None:
                continue
            lines.append(f"{key} = {_format(value)}")
        return "\n".join(lines) + "\n"


_KEYS = {
    "mesh.kind": "mesh_kind",
    "mesh.x_min": "x_min",
    "mesh.R": "R",
    "mesh.cells": "n_cells",
    "mesh.ratio": "mesh_ratio",
    "mesh.max_ratio": "max_ratio",
    "kernel.coagulation": "coagulation",
    "kernel.beta": "beta",
    "kernel.alpha": "alpha",
    "kernel.selection_exponent": "selection_exponent",
    "kernel.fragmentation": "fragmentation",
    "kernel.quadrature_order": "quadrature_order",
    "initial.kind": "initial",
    "initial.table": "initial_table",
    "time.T": "T",
    "time.theta": "theta",
    "time.dt_mode": "dt_mode",
    "time.dt": "dt",
    "time.dt_per_h": "dt_per_h",
    "time.dt_max": "dt_max",
    "time.max_steps": "max_steps",
    "output.times": "output_times",
    "output.dir": "output_dir",
    "eoc.grids": "eoc_grids",
    "run.self_check": "self_check",
}
_ALIASES = {"kernel": "kernel.coagulation", "initial": "initial.kind"}
for _key in _KEYS:
    _tail = _key.split(".", 1)[1]
    if sum(k.split(".", 1)[1] == _tail for k in _KEYS) == 1:
        _ALIASES.setdefault(_tail, _key)

_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean (true/false), got {raw!r}")


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if not value.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(value)


def _convert(key: str, attr: str, raw: str):
    typ = _TYPES[attr]
    raw = raw.strip()
    if attr == "output_times":
        return tuple(_parse_float(key, v) for v in raw.split(",") if v.strip())
    if attr == "eoc_grids":
        return tuple(_parse_int(key, v) for v in raw.split(",") if v.strip())
    if typ.startswith("bool"):
        return _parse_bool(key, raw)
    if typ.startswith("int"):
        return _parse_int(key, raw)
    if typ.startswith("float"):
        if raw.lower() in ("none", "") and "None" in typ:
            return None
        return _parse_float(key, raw)
    if "None" in typ and raw.lower() == "none":
        return None
    return raw


def canonical_key(key: str) -> str:
    if key in _KEYS:
        return key
    if key in _ALIASES:
        return _ALIASES[key]
    raise ConfigError(f"unknown configuration key {key!r}; known keys: {', '.join(_KEYS)}")


def parse_config_text(text: str, source: str = "<config>", base_dir: Path | None = None) -> SimConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        key = canonical_key(key)
        attr = _KEYS[key]
        if attr in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[attr] = _convert(key, attr, raw)
    if values.get("initial_table") and base_dir is not None:
        table = Path(values["initial_table"])
        if not table.is_absolute():
            values["initial_table"] = str(base_dir / table)
    return SimConfig(**values)


def parse_config(path: str | Path) -> SimConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from None
    return parse_config_text(text, source=str(path), base_dir=path.parent)


def _check(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def _validate(cfg: SimConfig) -> None:
    fin = math.isfinite
    _check(fin(cfg.x_min) and cfg.x_min >= 0.0, "mesh.x_min", f"must be finite and >= 0, got {cfg.x_min!r}")
    _check(fin(cfg.R) and cfg.R > cfg.x_min, "mesh.R", f"must be finite and > mesh.x_min, got {cfg.R!r}")
    _check(isinstance(cfg.n_cells, int) and cfg.n_cells >= 2, "mesh.cells", f"must be an integer >= 2, got {cfg.n_cells!r}")
    _check(cfg.mesh_kind in ("uniform", "geometric"), "mesh.kind", f"must be uniform or geometric, got {cfg.mesh_kind!r}")
    _check(cfg.mesh_ratio is None or cfg.mesh_ratio > 1.0, "mesh.ratio", f"must be > 1, got {cfg.mesh_ratio!r}")
    _check(cfg.max_ratio >= 1.0, "mesh.max_ratio", f"must be >= 1, got {cfg.max_ratio!r}")
    _check(
        cfg.coagulation in ("none", "constant", "sum", "product"),
        "kernel.coagulation",
        f"must be one of none, constant, sum, product; got {cfg.coagulation!r}",
    )
    _check(fin(cfg.beta) and cfg.beta >= 0.0, "kernel.beta", f"must be finite and >= 0, got {cfg.beta!r}")
    _check(fin(cfg.alpha) and -1.0 < cfg.alpha <= 0.0, "kernel.alpha", f"must lie in the admissible range (-1, 0], got {cfg.alpha!r}")
    _check(
        cfg.selection_exponent is None or fin(cfg.selection_exponent),
        "kernel.selection_exponent",
        f"must be finite, got {cfg.selection_exponent!r}",
    )
    _check(cfg.quadrature_order >= 1, "kernel.quadrature_order", f"must be >= 1, got {cfg.quadrature_order!r}")
    _check(cfg.initial in INITIAL_KINDS, "initial.kind", f"must be one of {', '.join(INITIAL_KINDS)}, got {cfg.initial!r}")
    _check(cfg.initial != "table" or bool(cfg.initial_table), "initial.table", "a table path is required when initial.kind = table")
    _check(fin(cfg.T) and cfg.T >= 0.0, "time.T", f"must be finite and >= 0, got {cfg.T!r}")
    _check(0.0 < cfg.theta < 1.0, "time.theta", f"must lie in (0, 1), got {cfg.theta!r}")
    _check(cfg.dt_mode in DT_MODES, "time.dt_mode", f"must be one of {', '.join(DT_MODES)}, got {cfg.dt_mode!r}")
    if cfg.dt_mode == "fixed":
        _check(cfg.dt is not None and fin(cfg.dt) and cfg.dt > 0.0, "time.dt", f"must be > 0 for dt_mode = fixed, got {cfg.dt!r}")
    if cfg.dt_mode == "proportional":
        _check(
            cfg.dt_per_h is not None and fin(cfg.dt_per_h) and cfg.dt_per_h > 0.0,
            "time.dt_per_h",
            f"must be > 0 for dt_mode = proportional, got {cfg.dt_per_h!r}",
        )
    _check(cfg.dt_max > 0.0, "time.dt_max", f"must be > 0, got {cfg.dt_max!r}")
    _check(isinstance(cfg.max_steps, int) and cfg.max_steps >= 1, "time.max_steps", f"must be an integer >= 1, got {cfg.max_steps!r}")
    _check(
        all(fin(t) and 0.0 <= t <= cfg.T for t in cfg.output_times),
        "output.times",
        f"every instant must lie in [0, time.T = {cfg.T!r}], got {cfg.output_times!r}",
    )
    grids = cfg.eoc_grids
    _check(len(grids) == 0 or all(isinstance(g, int) and g >= 2 for g in grids), "eoc.grids", f"cell counts must be integers >= 2, got {grids!r}")

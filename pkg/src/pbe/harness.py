"""Convergence studies: EOC tables and error orders against analytic solutions."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import SimConfig
from .densities import ExponentialDensity
from .diagnostics import l1_distance, l1_distance_pointwise, moment
from .kernels import discretize_kernels
from .solver import SimulationResult, project_initial, run, stable_dt

ANALYTIC_CASES = ("const_coag", "linear_frag")
CONVERGED = "converged below resolution"


def check_doubling(grids: Sequence[int], minimum: int = 3) -> list[int]:
    grids = [int(g) for g in grids]
    if len(grids) < minimum:
        raise ValueError(f"need at least {minimum} grids, got {grids}")
    for a, b in zip(grids, grids[1:]):
        if b != 2 * a:
            raise ValueError(f"grids must double at every step, got {a} -> {b}")
    return grids


def fingerprint(config: SimConfig) -> str:
    return hashlib.sha256(config.to_text().encode()).hexdigest()[:16]


def eoc_values(errors: Sequence[float]) -> list:
    """``ln(e_k / e_{k+1}) / ln 2`` per pair; a zero error gives :data:`CONVERGED`."""
    out = []
    for a, b in zip(errors, errors[1:]):
        if a == 0.0 or b == 0.0:
            out.append(CONVERGED)
        else:
            out.append(math.log(a / b) / math.log(2.0))
    return out


@dataclass
class EOCReport:
    """Total number ``N = mu_0(T)`` per grid with successive errors and EOCs.

    ``errors[k] = |N_k - N_{k+1}|`` belongs to grid ``cells[k+1]``;
    ``eoc[k]`` compares ``errors[k]`` with ``errors[k+1]`` and belongs to
    grid ``cells[k+2]``.
    """

    cells: list
    N: list
    errors: list
    eoc: list
    fingerprint: str
    dt: list = field(default_factory=list)
    capped_steps: list = field(default_factory=list)
    norm: str = "number"

    def rows(self) -> list[tuple]:
        rows = []
        for k, n in enumerate(self.cells):
            err = self.errors[k - 1] if k >= 1 else None
            eoc = self.eoc[k - 2] if k >= 2 else None
            rows.append((n, self.N[k], err, eoc))
        return rows

    def finest_eoc(self):
        return self.eoc[-1] if self.eoc else None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cells", "N", "error", "eoc"])
            for n, N, err, eoc in self.rows():
                w.writerow([n, _fmt(N), _fmt(err), _fmt(eoc)])

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _run_grid(config: SimConfig) -> tuple[SimulationResult, float]:
    res = run(config)
    return res, moment(res.final, 0)


def proportional_dt(base: SimConfig, coarse_cells: int) -> float:
    """``dt / h`` from the stability bound of the projected initial state on the coarsest grid."""
    cfg = replace(base, n_cells=coarse_cells)
    mesh = cfg.mesh()
    dk = discretize_kernels(cfg.kernel_set(), mesh, cfg.quadrature_order)
    state = project_initial(cfg.initial_density(), mesh)
    return stable_dt(state, dk, cfg.theta, cfg.dt_max) / mesh.h


def grid_configs(base: SimConfig, grids: Sequence[int]) -> list[SimConfig]:
    """Per-grid configurations with ``dt`` proportional to ``h``."""
    grids = list(grids)
    ratio = proportional_dt(base, grids[0])
    return [replace(base, n_cells=n, dt_mode="proportional", dt_per_h=ratio, output_times=()) for n in grids]


def eoc_study(
    base_config: SimConfig,
    grids: Sequence[int] | None = None,
    workers: int | None = None,
    norm: str = "number",
) -> EOCReport:
    """Run every grid to ``T`` and tabulate the experimental order of convergence.

    ``norm="number"`` compares the scalars ``N = mu_0(T)``; ``norm="l1"``
    compares final densities after averaging the finer one onto the coarser
    mesh (uniform meshes only).
    """
    if norm not in ("number", "l1"):
        raise ValueError(f"norm must be 'number' or 'l1', got {norm!r}")
    grids = check_doubling(grids if grids is not None else base_config.eoc_grids)
    configs = grid_configs(base_config, grids)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_grid, configs))
    else:
        results = [_run_grid(c) for c in configs]
    N = [n for _, n in results]
    if norm == "number":
        errors = [abs(a - b) for a, b in zip(N, N[1:])]
    else:
        errors = [l1_distance(a.final, b.final) for (a, _), (b, _) in zip(results, results[1:])]
    return EOCReport(
        cells=grids,
        N=N,
        errors=errors,
        eoc=eoc_values(errors),
        fingerprint=fingerprint(base_config),
        dt=[c.dt_per_h * c.mesh().h for c in configs],
        capped_steps=[r.capped_steps for r, _ in results],
        norm=norm,
    )


def analytic_reference(case: str, t: float) -> ExponentialDensity:
    """Closed-form density at time ``t`` for ``c_in = exp(-x)``.

    ``const_coag``: ``K = 1``, no breakage, ``4/(t+2)^2 exp(-2x/(t+2))``.
    ``linear_frag``: no coagulation, ``alpha = 0``, ``S = x``, ``(1+t)^2 exp(-(1+t)x)``.
    """
    if case == "const_coag":
        return ExponentialDensity(4.0 / (t + 2.0) ** 2, 2.0 / (t + 2.0))
    if case == "linear_frag":
        return ExponentialDensity((1.0 + t) ** 2, 1.0 + t)
    raise ValueError(f"unsupported analytic case {case!r}; expected one of {ANALYTIC_CASES}")


def analytic_config(case: str, n_cells: int, T: float = 1.0, **overrides) -> SimConfig:
    """Configuration matching :func:`analytic_reference` for ``case``."""
    if case == "const_coag":
        base = SimConfig(coagulation="constant", beta=1.0, fragmentation=False, x_min=1e-3, R=100.0)
    elif case == "linear_frag":
        base = SimConfig(coagulation="none", alpha=0.0, selection_exponent=1.0, x_min=0.0, R=20.0)
    else:
        raise ValueError(f"unsupported analytic case {case!r}; expected one of {ANALYTIC_CASES}")
    return replace(base, n_cells=n_cells, T=T, **overrides)


def error_vs_reference(
    result: SimulationResult,
    reference: str | Callable[[float], Callable],
    pointwise: bool = False,
) -> float:
    """Largest L1 error over the recorded output instants.

    ``reference`` is a case name or a map ``t -> density``. The default
    compares cell averages; ``pointwise=True`` integrates
    ``|c^h(x) - c(x)|`` instead.
    """
    ref = (lambda t: analytic_reference(reference, t)) if isinstance(reference, str) else reference
    errs = []
    for t, state in result.outputs.items():
        func = ref(state.t)
        errs.append(l1_distance_pointwise(state, func) if pointwise else l1_distance(state, func))
    return max(errs) if errs else 0.0


@dataclass
class OracleStudy:
    cells: list
    h: list
    dt: list
    errors: list
    ratios: list
    pointwise_errors: list
    pointwise_ratios: list


def oracle_study(case: str, grids: Sequence[int], T: float = 1.0, output_times: Sequence[float] = ()) -> OracleStudy:
    """Errors against the analytic solution on a doubling sequence with ``dt`` proportional to ``h``."""
    grids = check_doubling(grids, minimum=2)
    base = analytic_config(case, grids[0], T=T, output_times=tuple(output_times))
    configs = grid_configs(base, grids)
    errs, perrs, hs, dts = [], [], [], []
    for cfg in configs:
        cfg = replace(cfg, output_times=tuple(output_times))
        res = run(cfg)
        errs.append(error_vs_reference(res, case))
        perrs.append(error_vs_reference(res, case, pointwise=True))
        h = cfg.mesh().h
        hs.append(h)
        dts.append(cfg.dt_per_h * h)
    ratio = lambda e: [a / b if b > 0 else math.inf for a, b in zip(e, e[1:])]
    return OracleStudy(list(grids), hs, dts, errs, ratio(errs), perrs, ratio(perrs))


def fitted_constants(errors: Sequence[float], h: Sequence[float], dt: Sequence[float]) -> np.ndarray:
    """``D_k = e_k / (h_k + dt_k)`` for an error bound of the form ``D (h + dt)``."""
    return np.asarray(errors) / (np.asarray(h) + np.asarray(dt))


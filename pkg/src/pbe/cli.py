"""Command line front end: ``pbe run|eoc|validate <config>``.

Exit status is 0 on success, 1 when a check fails or the solver aborts,
and 2 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import math
import shutil
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import SimConfig, parse_config
from .errors import ConfigError, PBEError
from .harness import check_doubling, eoc_study, oracle_study
from .kernels import discretize_kernels
from .solver import SimulationResult, check_fluxes, project_initial, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _f(v: float) -> str:
    return format(float(v), ".17g")


def density_filename(t: float) -> str:
    return f"density_t{float(t):g}.csv"


def write_density(path: Path, state) -> None:
    mesh = state.mesh
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_center", "dx", "c"])
        for x, dx, c in zip(mesh.centers, mesh.widths, state.c):
            w.writerow([_f(x), _f(dx), _f(c)])


def write_moments(path: Path, result: SimulationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mu0", "mu1", "mu2", "leakage"])
        for row in result.moments.as_array():
            w.writerow([_f(v) for v in row])


class _Staging:
    """Write into a scratch directory and move files to ``out`` only on success."""

    def __init__(self, out: Path):
        self.out = out

    def __enter__(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".pbe-", dir=self.out))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for f in sorted(self.tmp.iterdir()):
                f.replace(self.out / f.name)
        shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def cmd_run(cfg: SimConfig) -> int:
    result = run(cfg)
    with _Staging(Path(cfg.output_dir)) as tmp:
        for t, state in sorted(result.outputs.items()):
            write_density(tmp / density_filename(t), state)
        write_moments(tmp / "moments.csv", result)
    print(
        f"run: {cfg.n_cells} cells, T = {cfg.T:g}, {result.steps} steps, "
        f"mu0(T) = {result.moments.mu0[-1]:.10g}, leakage = {result.leakage:.6g}"
    )
    return EXIT_OK


def cmd_eoc(cfg: SimConfig, grids) -> int:
    report = eoc_study(cfg, grids)
    with _Staging(Path(cfg.output_dir)) as tmp:
        report.to_csv(tmp / "eoc.csv")
        report.to_json(tmp / "eoc.json")
    print(f"{'cells':>6} {'N':>22} {'error':>22} {'eoc':>10}")
    for n, N, err, eoc in report.rows():
        err_s = "" if err is None else f"{err:.6e}"
        eoc_s = "" if eoc is None else (eoc if isinstance(eoc, str) else f"{eoc:.4f}")
        print(f"{n:>6} {N:>22.15g} {err_s:>22} {eoc_s:>10}")
    return EXIT_OK


def validation_checks(cfg: SimConfig) -> list[tuple[str, bool, str]]:
    """Invariant checks on ``cfg`` plus the analytic convergence checks."""
    checks = []
    mesh = cfg.mesh()
    dk = discretize_kernels(cfg.kernel_set(), mesh, cfg.quadrature_order)
    c0 = project_initial(cfg.initial_density(), mesh)
    try:
        check_fluxes(c0, dk, rtol=1e-12)
        checks.append(("flux recurrence matches direct sums", True, ""))
    except PBEError as exc:
        checks.append(("flux recurrence matches direct sums", False, str(exc)))

    try:
        res = run(replace(cfg, self_check=False))
    except PBEError as exc:
        checks.append(("run completes with nonnegative densities", False, str(exc)))
        return checks
    states = list(res.outputs.values()) + [res.final]
    low = min(float(np.min(s.c)) for s in states)
    checks.append(("run completes with nonnegative densities", low >= 0.0, f"min c = {low:.3e}"))

    resid = float(res.moments.ledger_residual().max())
    checks.append(("mass ledger mu1 + leakage = mu1(0)", resid <= 1e-10, f"max rel. residual {resid:.3e}"))

    n0 = res.moments.mu0[0]
    growth = dk.eta * dk.sup_S
    worst = max(
        m / (n0 * math.exp(min(growth * t, 700.0))) for t, m in zip(res.moments.times, res.moments.mu0)
    ) if n0 > 0 else 0.0
    checks.append(("number bound mu0(t) <= mu0(0) exp(eta |S| t)", worst <= 1.0 + 1e-12, f"max ratio {worst:.3e}"))

    for case, grids in (("const_coag", (60, 120, 240)), ("linear_frag", (120, 240, 480))):
        study = oracle_study(case, grids)
        ok = all(r >= 1.8 for r in study.ratios)
        detail = ", ".join(f"{r:.3f}" for r in study.ratios)
        checks.append((f"{case} error ratio per halving >= 1.8", ok, f"ratios {detail}"))
    return checks


def cmd_validate(cfg: SimConfig) -> int:
    checks = validation_checks(cfg)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_FAIL


def _grids(text: str) -> tuple[int, ...]:
    try:
        grids = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"grids must be comma-separated integers, got {text!r}") from None
    return grids


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbe", description="Finite-volume coagulation and fragmentation solver.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "integrate to T and write density and moment CSVs"),
        ("eoc", "experimental order of convergence over doubling grids"),
        ("validate", "check the scheme invariants and analytic convergence"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="key = value configuration file")
        sp.add_argument("--T", type=float, help="final time")
        sp.add_argument("--cells", type=int, help="number of cells")
        sp.add_argument("--theta", type=float, help="stability safety factor in (0, 1)")
        sp.add_argument("--dt", type=float, help="fixed time step (capped by the stability bound)")
        sp.add_argument("--out", help="output directory")
        if name == "eoc":
            sp.add_argument("--grids", type=_grids, help="doubling cell counts, e.g. 30,60,120,240,480")
    return p


def apply_overrides(cfg: SimConfig, args: argparse.Namespace) -> SimConfig:
    changes = {}
    if args.T is not None:
        changes["T"] = args.T
        changes["output_times"] = tuple(t for t in cfg.output_times if t <= args.T)
    if args.cells is not None:
        changes["n_cells"] = args.cells
    if args.theta is not None:
        changes["theta"] = args.theta
    if args.dt is not None:
        changes["dt_mode"] = "fixed"
        changes["dt"] = args.dt
    if args.out is not None:
        changes["output_dir"] = args.out
    if getattr(args, "grids", None):
        changes["eoc_grids"] = args.grids
    return replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = apply_overrides(parse_config(args.config), args)
        if args.command == "eoc":
            check_doubling(cfg.eoc_grids)
    except (ConfigError, ValueError) as exc:
        print(f"pbe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "eoc":
            return cmd_eoc(cfg, cfg.eoc_grids)
        return cmd_validate(cfg)
    except PBEError as exc:
        print(f"pbe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""Explicit finite-volume scheme for coagulation with multiple fragmentation.

The update for cell ``i`` is written on the mass density ``x c``::

    dx_i x_i (c_i' - c_i) = -dt (C_{i+1/2} - C_{i-1/2}) + dt (F_{i+1/2} - F_{i-1/2})

``C`` carries mass to the right through coagulation, ``F`` carries it to
the left through breakage. ``C_{-1/2} = F_{-1/2} = F_{I+1/2} = 0``, while
``C_{I+1/2}`` is the rate at which mass leaves the truncated domain.

Interface fluxes are accumulated left to right from per-cell loss and gain
terms. The same terms give the update in gain/loss form, which is the
flux difference rewritten so that the result is nonnegative in floating
point whenever ``dt`` respects :func:`stable_dt`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels_jit as jit
from .config import SimConfig
from .diagnostics import MomentSeries, cell_averages, moment
from .errors import FluxConsistencyError, NegativeDensityError, StepLimitExceeded
from .kernels import DiscreteKernels, discretize_kernels
from .mesh import Mesh


@dataclass(frozen=True, eq=False)
class State:
    """Cell averages ``c_i`` of the number density at time ``t``."""

    c: np.ndarray
    t: float
    mesh: Mesh

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (self.mesh.n_cells,):
            raise ValueError(f"state has shape {c.shape}, mesh has {self.mesh.n_cells} cells")
        if not np.all(np.isfinite(c)):
            raise ValueError("state contains non-finite entries")
        if np.any(c < 0.0):
            i = int(np.argmin(c))
            raise NegativeDensityError(f"negative density c[{i}] = {c[i]!r} at t = {self.t!r}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "t", float(self.t))


class FluxTerms(NamedTuple):
    """Per-cell pieces of the fluxes at one time level.

    ``rate_c[i]``: coagulation loss rate of cell ``i`` (pairs leaving it),
    ``gain_c[i]``: coagulation mass entering cell ``i`` from the left,
    ``lam[i]``: fragmentation mass loss rate of cell ``i`` per unit ``c_i dx_i``,
    ``gain_f[i]``: fragmentation mass entering cell ``i`` from the right.
    """

    rate_c: np.ndarray
    gain_c: np.ndarray
    lam: np.ndarray
    gain_f: np.ndarray


@dataclass(frozen=True, eq=False)
class FluxPair:
    """Interface fluxes; ``coag[i] = C_{i-1/2}`` and ``frag[i] = F_{i-1/2}``."""

    coag: np.ndarray
    frag: np.ndarray
    terms: FluxTerms | None = None

    @property
    def leakage_rate(self) -> float:
        return float(self.coag[-1])


class Scheme:
    """Mesh-dependent arrays reused at every step."""

    def __init__(self, mesh: Mesh, dk: DiscreteKernels):
        self.mesh = mesh
        self.dk = dk
        self.x = np.ascontiguousarray(mesh.centers)
        self.dx = np.ascontiguousarray(mesh.widths)
        self.xdx = self.x * self.dx
        self.GT = np.ascontiguousarray(mesh.gamma_table.T)
        ii, jj = np.tril_indices(mesh.n_cells)
        self.shifted = bool(np.all(mesh.gamma_table[ii, jj] == ii - jj))
        self.K = np.ascontiguousarray(dk.K_avg)
        # SB[j, k] = S_k B_{j,k}, zero on and below the diagonal
        self.SB = np.ascontiguousarray(np.triu(dk.B_avg * dk.S_avg[None, :], k=1))
        # mass a parent in cell i sends to strictly smaller cells, per unit c_i dx_i
        self.lam = np.ascontiguousarray((self.xdx[:, None] * self.SB).sum(axis=0))
        self.has_coag = bool(np.any(self.K))
        self.has_frag = bool(np.any(self.SB))

    def terms(self, c: np.ndarray) -> FluxTerms:
        n = c.size
        cd = np.ascontiguousarray(c * self.dx)
        rate_c = np.zeros(n)
        gain_c = np.zeros(n)
        gain_f = np.zeros(n)
        if self.has_coag:
            if self.shifted:
                jit.coag_terms_shifted(cd, self.x, self.K, rate_c, gain_c)
            else:
                jit.coag_terms(cd, self.x, self.K, self.GT, rate_c, gain_c)
        if self.has_frag:
            jit.frag_gain(cd, self.xdx, self.SB, gain_f)
            lam = self.lam
        else:
            lam = np.zeros(n)
        return FluxTerms(rate_c, gain_c, lam, gain_f)

    def fluxes(self, c: np.ndarray) -> FluxPair:
        terms = self.terms(c)
        n = c.size
        C = np.empty(n + 1)
        F = np.empty(n + 1)
        cd = np.ascontiguousarray(c * self.dx)
        jit.interface_fluxes(cd, self.x, terms.rate_c, terms.gain_c, terms.lam, terms.gain_f, C, F)
        return FluxPair(C, F, terms)


def compute_fluxes(state: State, dk: DiscreteKernels, scheme: Scheme | None = None) -> FluxPair:
    """Both interface fluxes by the incremental recurrences."""
    scheme = scheme or Scheme(state.mesh, dk)
    return scheme.fluxes(np.asarray(state.c))


def compute_coag_flux(state: State, dk: DiscreteKernels, mesh: Mesh | None = None) -> np.ndarray:
    """``C_{i-1/2}`` for ``i = 0..I+1`` by the incremental recurrence."""
    _check_mesh(state, mesh)
    return compute_fluxes(state, dk).coag


def compute_frag_flux(state: State, dk: DiscreteKernels, mesh: Mesh | None = None) -> np.ndarray:
    """``F_{i-1/2}`` for ``i = 0..I+1`` by the incremental recurrence."""
    _check_mesh(state, mesh)
    return compute_fluxes(state, dk).frag


def _check_mesh(state: State, mesh: Mesh | None) -> None:
    if mesh is not None and not mesh.same_as(state.mesh):
        raise ValueError("state does not live on the given mesh")


def direct_coag_flux(state: State, dk: DiscreteKernels) -> np.ndarray:
    """``C_{i+1/2} = sum_{j<=i} sum_{k>=gamma_{i,j}} x_j K_{j,k} c_j c_k dx_j dx_k`` summed directly."""
    mesh = state.mesh
    n = mesh.n_cells
    cd = np.asarray(state.c) * mesh.widths
    w = mesh.centers * cd
    # tail[j, g] = sum_{k >= g} K[j, k] cd[k]
    tail = np.zeros((n, n + 1))
    tail[:, :n] = np.cumsum((dk.K_avg * cd[None, :])[:, ::-1], axis=1)[:, ::-1]
    G = mesh.gamma_table
    out = np.zeros(n + 1)
    jj = np.arange(n)
    for i in range(n):
        js = jj[: i + 1]
        out[i + 1] = np.dot(w[js], tail[js, G[i, js]])
    return out


def direct_frag_flux(state: State, dk: DiscreteKernels) -> np.ndarray:
    """``F_{i+1/2} = sum_{j<=i} sum_{k>i} x_j S_k B_{j,k} c_k dx_k dx_j`` summed directly."""
    mesh = state.mesh
    n = mesh.n_cells
    cd = np.asarray(state.c) * mesh.widths
    M = (mesh.centers * mesh.widths)[:, None] * dk.B_avg * (dk.S_avg * cd)[None, :]
    out = np.zeros(n + 1)
    for i in range(n - 1):
        out[i + 1] = M[: i + 1, i + 1 :].sum()
    return out


def stable_dt(state: State, dk: DiscreteKernels, theta: float = 0.5, dt_max: float = math.inf) -> float:
    """Largest step keeping the next state nonnegative, scaled by ``theta``.

    ``dt = theta / (sup_K * sum_k dx_k c_k + eta * sup_S)``; ``dt_max`` when
    the denominator vanishes and as an upper cap.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
    denom = dk.sup_K * moment(state, 0) + dk.eta * dk.sup_S
    if denom <= 0.0:
        return float(dt_max)
    return float(min(theta / denom, dt_max))


def step(state: State, fluxes: FluxPair, dt: float) -> State:
    """Advance one explicit step of length ``dt``.

    Raises :class:`NegativeDensityError` when an entry of the new state is
    negative, which under a compliant ``dt`` means the fluxes are wrong.
    """
    mesh = state.mesh
    c = np.ascontiguousarray(state.c)
    x, dx = mesh.centers, mesh.widths
    if fluxes.terms is not None:
        t = fluxes.terms
        out = np.empty_like(c)
        lo = jit.split_update(c, x, dx, t.rate_c, t.gain_c, t.lam, t.gain_f, dt, out)
    else:
        div = -np.diff(fluxes.coag) + np.diff(fluxes.frag)
        out = c + dt * div / (dx * x)
        lo = out.min() if out.size else 0.0
    if lo < 0.0:
        i = int(np.argmin(out))
        raise NegativeDensityError(
            f"step produced c[{i}] = {out[i]!r} at t = {state.t + dt!r} with dt = {dt!r}; "
            "the flux computation is inconsistent with the stability bound"
        )
    return State(out, state.t + dt, mesh)


def project_initial(c_in: Callable, mesh: Mesh, t: float = 0.0) -> State:
    """Cell averages of ``c_in``; exact when ``c_in`` provides ``integral(a, b)``."""
    if getattr(c_in, "integral", None) is None:
        probe = c_in(np.linspace(mesh.x_min, mesh.R, 4 * mesh.n_cells + 1)[1:])
        if np.any(np.asarray(probe) < 0.0):
            raise ValueError("initial density takes negative values on the domain")
    avg = cell_averages(c_in, mesh)
    if np.any(avg < 0.0):
        raise ValueError("initial density has a negative cell average")
    return State(avg, t, mesh)


@dataclass
class SimulationResult:
    """Final state, the states at the output instants and the moment series."""

    final: State
    outputs: dict = field(default_factory=dict)
    moments: MomentSeries = field(default_factory=MomentSeries)
    steps: int = 0
    capped_steps: int = 0
    leakage: float = 0.0
    dk: DiscreteKernels | None = None


def check_fluxes(state: State, dk: DiscreteKernels, scheme: Scheme | None = None, rtol: float = 1e-10) -> None:
    """Compare recurrence fluxes with the direct sums; raise on disagreement."""
    pair = compute_fluxes(state, dk, scheme)
    for name, rec, ref in (
        ("coagulation", pair.coag, direct_coag_flux(state, dk)),
        ("fragmentation", pair.frag, direct_frag_flux(state, dk)),
    ):
        scale = max(float(np.max(np.abs(ref))), 1e-300)
        err = float(np.max(np.abs(rec - ref)))
        if err > rtol * scale:
            raise FluxConsistencyError(
                f"{name} flux recurrence disagrees with the direct sum by {err:.3e} (scale {scale:.3e})"
            )


def _probe_state(state: State) -> State:
    # coarse probe: every cell occupied so that every gamma entry is exercised
    c = np.asarray(state.c)
    probe = np.where(c > 0.0, c, 0.0) + 1e-3 * (c.max() if c.max() > 0 else 1.0)
    return State(probe, state.t, state.mesh)


def resolve_dt_mode(config: SimConfig, mesh: Mesh):
    """Return a fixed step length or None for adaptive stepping."""
    if config.dt_mode == "fixed":
        return float(config.dt)
    if config.dt_mode == "proportional":
        return float(config.dt_per_h) * mesh.h
    return None


def run(
    config: SimConfig,
    initial: Callable | None = None,
    dk: DiscreteKernels | None = None,
) -> SimulationResult:
    """Integrate from the projected initial density to ``config.T``.

    Adaptive mode takes ``stable_dt`` at every step. Fixed and proportional
    modes use the configured length but never exceed the stability bound
    (such steps are counted in ``capped_steps``). The last step is shortened
    to land on ``T``; each output instant records the state at the first step
    boundary at or after it.
    """
    mesh = config.mesh()
    if dk is None:
        dk = discretize_kernels(config.kernel_set(), mesh, config.quadrature_order)
    state = project_initial(initial if initial is not None else config.initial_density(), mesh)
    scheme = Scheme(mesh, dk)
    if config.self_check and mesh.n_cells <= 2048:
        check_fluxes(_probe_state(state), dk, scheme)

    T = config.T
    pending = sorted(set(config.output_times) | {T})
    result = SimulationResult(final=state, dk=dk)
    leakage = 0.0
    fixed = resolve_dt_mode(config, mesh)

    def flush(st: State) -> None:
        while pending and st.t >= pending[0]:
            result.outputs[pending.pop(0)] = st
        if not result.moments.times or result.moments.times[-1] != st.t:
            result.moments.record(st, leakage)

    result.moments.record(state, leakage)
    while pending and pending[0] <= 0.0:
        result.outputs[pending.pop(0)] = state

    n_steps = 0
    while state.t < T:
        if n_steps >= config.max_steps:
            raise StepLimitExceeded(f"reached the step ceiling {config.max_steps} at t = {state.t!r} < T = {T!r}")
        bound = stable_dt(state, dk, config.theta, config.dt_max)
        if fixed is None:
            dt = bound
        else:
            dt = fixed
            if dt > bound:
                dt = bound
                result.capped_steps += 1
        remaining = T - state.t
        if dt >= remaining or state.t + dt >= T:
            dt = remaining
        pair = scheme.fluxes(np.asarray(state.c))
        new = step(state, pair, dt)
        leakage += dt * pair.leakage_rate
        if dt == remaining:
            new = State(new.c, T, mesh)
        state = new
        n_steps += 1
        if pending and state.t >= pending[0]:
            flush(state)
    result.final = state
    result.steps = n_steps
    result.leakage = leakage
    if not result.moments.times or result.moments.times[-1] != state.t:
        result.moments.record(state, leakage)
    return result


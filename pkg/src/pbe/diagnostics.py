"""Moments, L1 distances and the moment time series of a run."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels_jit import ordered_sum
from .mesh import Mesh

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def moment(state, j: float = 0.0) -> float:
    """Midpoint moment ``sum_i x_i**j c_i dx_i`` of a state."""
    mesh = state.mesh
    cd = np.asarray(state.c) * mesh.widths
    if j == 0:
        return float(ordered_sum(cd))
    return float(ordered_sum(mesh.centers**j * cd))


def cell_averages(func: Callable, mesh: Mesh, subdivisions: int = 1) -> np.ndarray:
    """Cell averages of ``func`` by Gauss-Legendre quadrature.

    Uses the closed form when ``func`` exposes ``integral(a, b)``.
    """
    integral = getattr(func, "integral", None)
    if integral is not None:
        return integral(mesh.edges[:-1], mesh.edges[1:]) / mesh.widths
    sub = np.linspace(0.0, 1.0, subdivisions + 1)
    a = mesh.edges[:-1, None] + mesh.widths[:, None] * sub[None, :-1]
    w = mesh.widths[:, None] / subdivisions
    pts = (a[:, :, None] + 0.5 * w[:, :, None] * (1.0 + _GL_NODES[None, None, :]))
    vals = np.asarray(func(pts), dtype=float)
    return (0.5 * w[:, :, None] * vals * _GL_WEIGHTS).sum(axis=(1, 2)) / mesh.widths


def restrict(state, coarse: Mesh) -> np.ndarray:
    """Average a state given on a refinement of ``coarse`` onto ``coarse``."""
    factor = state.mesh.refines(coarse)
    if not factor:
        raise ValueError("the fine mesh is not a uniform refinement of the coarse mesh")
    mass = (np.asarray(state.c) * state.mesh.widths).reshape(coarse.n_cells, factor).sum(axis=1)
    return mass / coarse.widths


def l1_distance(a, b) -> float:
    """L1 distance ``sum_i dx_i |a_i - b_i|`` between piecewise-constant densities.

    ``b`` may be a state on the same mesh, a state on a refinement of
    ``a``'s mesh (averaged onto it first), or a callable reference density
    (compared with its cell averages).
    """
    mesh = a.mesh
    ca = np.asarray(a.c)
    if callable(b):
        cb = cell_averages(b, mesh)
    elif b.mesh.same_as(mesh):
        cb = np.asarray(b.c)
    elif b.mesh.refines(mesh):
        cb = restrict(b, mesh)
    else:
        raise ValueError(f"mesh mismatch: {mesh!r} vs {b.mesh!r}")
    return float(ordered_sum(mesh.widths * np.abs(ca - cb)))


def l1_distance_pointwise(a, func: Callable, subdivisions: int = 8) -> float:
    """``int |c^h(x) - func(x)| dx`` for the piecewise-constant reconstruction.

    Unlike :func:`l1_distance` with a callable, this includes the error of
    representing ``func`` by a piecewise constant.
    """
    mesh = a.mesh
    sub = np.linspace(0.0, 1.0, subdivisions + 1)
    left = mesh.edges[:-1, None] + mesh.widths[:, None] * sub[None, :-1]
    w = mesh.widths[:, None] / subdivisions
    pts = left[:, :, None] + 0.5 * w[:, :, None] * (1.0 + _GL_NODES[None, None, :])
    vals = np.asarray(func(pts), dtype=float)
    diff = np.abs(np.asarray(a.c)[:, None, None] - vals)
    return float((0.5 * w[:, :, None] * diff * _GL_WEIGHTS).sum())


@dataclass
class MomentSeries:
    """Moments ``mu_0, mu_1, mu_2`` and cumulative mass leakage per output instant."""

    times: list = field(default_factory=list)
    mu0: list = field(default_factory=list)
    mu1: list = field(default_factory=list)
    mu2: list = field(default_factory=list)
    leakage: list = field(default_factory=list)

    def record(self, state, leakage: float) -> None:
        self.times.append(float(state.t))
        self.mu0.append(moment(state, 0))
        self.mu1.append(moment(state, 1))
        self.mu2.append(moment(state, 2))
        self.leakage.append(float(leakage))

    def ledger_residual(self) -> np.ndarray:
        """Relative defect of ``mu_1(t) + leakage(t) = mu_1(0)``."""
        mu1 = np.asarray(self.mu1)
        return np.abs(mu1 + np.asarray(self.leakage) - mu1[0]) / abs(mu1[0])

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.times, self.mu0, self.mu1, self.mu2, self.leakage])

"""Independent oracles used across the test suite.

Everything here is written from the defining sums and integrals with plain
Python loops or scipy quadrature, sharing no code with the package beyond
the mesh coordinates.
"""
from __future__ import annotations

import numpy as np
import mpmath

from pbe.mesh import Mesh, build_mesh


def scan_cell(edges, x) -> int:
    """Right-closed cell containing ``x`` by linear scan."""
    for i in range(len(edges) - 1):
        if edges[i] < x <= edges[i + 1]:
            return i
    raise ValueError(f"{x} outside ]{edges[0]}, {edges[-1]}]")


def scan_gamma(mesh: Mesh, i: int, j: int):
    """gamma_{i,j} by linear scan, None when the difference is not above x_min."""
    d = mesh.edges[i + 1] - mesh.centers[j]
    if d <= mesh.edges[0]:
        return None
    return scan_cell(mesh.edges, d)


def triple_sum_coag(mesh: Mesh, K: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``C_{i+1/2}`` from its defining double sum over ``j <= i``, ``k >= gamma``."""
    n = mesh.n_cells
    x, dx = mesh.centers, mesh.widths
    out = np.zeros(n + 1)
    for i in range(n):
        total = 0.0
        for j in range(i + 1):
            g = scan_gamma(mesh, i, j)
            start = 0 if g is None else g
            for k in range(start, n):
                total += x[j] * K[j, k] * c[j] * c[k] * dx[j] * dx[k]
        out[i + 1] = total
    return out


def double_sum_frag(mesh: Mesh, S: np.ndarray, B: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``F_{i+1/2}`` from its defining double sum over ``j <= i < k``."""
    n = mesh.n_cells
    x, dx = mesh.centers, mesh.widths
    out = np.zeros(n + 1)
    for i in range(n):
        total = 0.0
        for j in range(i + 1):
            for k in range(i + 1, n):
                total += x[j] * S[k] * B[j, k] * c[k] * dx[k] * dx[j]
        out[i + 1] = total
    return out


def quad_B_average(alpha: float, da, db, pa, pb) -> float:
    """Average of ``(a+2)/v (u/v)**a`` over daughter ``]da, db]`` and parent ``]pa, pb]``, ``u < v``.

    Runs in 40-digit arithmetic so that narrow cells far from the origin
    do not lose the answer to cancellation.
    """
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        da, db, pa, pb = (mpmath.mpf(float(v)) for v in (da, db, pa, pb))
        p = a + 1

        def inner(v):
            top = min(db, v)
            if top <= da:
                return mpmath.mpf(0)
            # int_da^top u**a du in closed form keeps the x**a singularity out of the quadrature
            return (a + 2) / v**p * (top**p - da**p) / p

        pts = [pa, db, pb] if pa < db < pb else [pa, pb]
        val = mpmath.quad(inner, pts)
        return float(val / ((db - da) * (pb - pa)))


def subcell_l1(coarse_c, coarse: Mesh, fine_c, fine: Mesh) -> float:
    """``int |c^h - c^{h/2}|`` summed over the common refinement, cell by cell."""
    total = 0.0
    for f in range(fine.n_cells):
        mid = fine.centers[f]
        k = scan_cell(coarse.edges, mid)
        total += fine.widths[f] * abs(coarse_c[k] - fine_c[f])
    return total


def random_mesh(rng: np.random.Generator, n: int, kind: str) -> Mesh:
    x_min = float(rng.choice([0.0, 1e-3, 0.05]))
    R = float(rng.uniform(2.0, 20.0))
    if kind == "uniform":
        return build_mesh("uniform", x_min, R, n)
    if x_min == 0.0:
        return build_mesh("geometric", 0.0, R, n, ratio=float(rng.uniform(1.05, 1.2)), max_ratio=1e12)
    return build_mesh("geometric", x_min, R, n, max_ratio=1e9)


def random_state(rng: np.random.Generator, n: int, sparsity: float = 0.3) -> np.ndarray:
    c = rng.exponential(1.0, n)
    c[rng.random(n) < sparsity] = 0.0
    return c

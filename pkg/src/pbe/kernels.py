"""Coagulation, selection and breakage kernels and their cell averages.

The breakage family is the power law ``B(x, y) = (a+2)/y * (x/y)**a`` on
``0 < x < y`` with ``a`` in ``(-1, 0]``. Its ``x**a`` factor is singular at
the origin for ``a < 0``; every cell average involving it is computed from
closed-form antiderivatives, so nothing is ever evaluated at ``x = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DiscretizationError, KernelError
from .mesh import Mesh

COAGULATION_FAMILIES = ("none", "constant", "sum", "product", "custom")
DEFAULT_QUADRATURE_ORDER = 5


@dataclass(frozen=True)
class KernelSet:
    """Continuous kernel triple ``(K, S, B)``.

    ``beta`` scales every built-in coagulation family: ``beta``,
    ``beta*(x+y)`` or ``beta*x*y``. ``custom`` must be a vectorized,
    symmetric, nonnegative and locally bounded callable ``K(u, v)``; give
    ``custom_bound`` when its supremum on the domain is known.
    """

    coagulation: str = "sum"
    alpha: float = -0.5
    selection_exponent: float | None = None
    beta: float = 1.0
    fragmentation: bool = True
    custom: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False, repr=False
    )
    custom_bound: float | None = None

    def __post_init__(self):
        if self.coagulation not in COAGULATION_FAMILIES:
            raise KernelError(
                f"unknown coagulation family {self.coagulation!r}; "
                f"expected one of {', '.join(COAGULATION_FAMILIES)}"
            )
        if self.coagulation == "custom" and self.custom is None:
            raise KernelError("coagulation='custom' needs a callable in `custom`")
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or alpha <= -1.0:
            raise KernelError(
                f"alpha = {self.alpha!r} outside admissible (-1, 0]: the daughter count "
                "(alpha+2)/(alpha+1) is unbounded for alpha <= -1"
            )
        if alpha > 0.0:
            raise KernelError(f"alpha = {self.alpha!r} outside admissible (-1, 0]")
        if self.beta < 0.0 or not np.isfinite(self.beta):
            raise KernelError(f"beta must be finite and >= 0, got {self.beta!r}")
        object.__setattr__(self, "alpha", alpha)
        if self.selection_exponent is None:
            object.__setattr__(self, "selection_exponent", 1.0 + alpha)
        elif not np.isfinite(self.selection_exponent):
            raise KernelError("selection_exponent must be finite")

    @property
    def eta(self) -> float:
        """Number of daughters per breakage event, ``(alpha+2)/(alpha+1)``."""
        return (self.alpha + 2.0) / (self.alpha + 1.0)

    @property
    def has_coagulation(self) -> bool:
        return self.coagulation != "none" and not (
            self.coagulation != "custom" and self.beta == 0.0
        )

    def K(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        fam = self.coagulation
        if fam == "none":
            return np.zeros(np.broadcast(u, v).shape)
        if fam == "constant":
            return np.full(np.broadcast(u, v).shape, self.beta)
        if fam == "sum":
            return self.beta * (u + v)
        if fam == "product":
            return self.beta * u * v
        return np.asarray(self.custom(u, v), dtype=float)

    def S(self, x):
        x = np.asarray(x, dtype=float)
        if not self.fragmentation:
            return np.zeros_like(x)
        return x**self.selection_exponent

    def B(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a = self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (a + 2.0) / y * (x / y) ** a
        return np.where((x > 0) & (x < y), val, 0.0)


def make_kernel_set(
    coagulation: str = "sum",
    alpha: float = -0.5,
    selection_exponent: float | None = None,
    beta: float = 1.0,
    fragmentation: bool = True,
    custom: Callable | None = None,
    custom_bound: float | None = None,
) -> KernelSet:
    """Validate parameters and return a :class:`KernelSet`.

    The selection exponent defaults to ``1 + alpha``.
    """
    return KernelSet(
        coagulation=coagulation,
        alpha=alpha,
        selection_exponent=selection_exponent,
        beta=beta,
        fragmentation=fragmentation,
        custom=custom,
        custom_bound=custom_bound,
    )


def power_integral(a, b, p: float):
    """``int_a^b x**p dx`` for arrays of intervals ``0 <= a < b``.

    Uses ``expm1``/``log1p`` so narrow cells far from the origin keep full
    relative precision. ``a = 0`` requires ``p > -1``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast(a, b).shape)
    a, b = np.broadcast_to(a, out.shape), np.broadcast_to(b, out.shape)
    pos = a > 0.0
    q = p + 1.0
    if np.any(~pos):
        if q <= 0.0:
            raise DiscretizationError(f"int_0^b x**{p} dx diverges")
        out[~pos] = b[~pos] ** q / q
    if np.any(pos):
        ap, bp = a[pos], b[pos]
        lr = np.log1p((bp - ap) / ap)
        if q == 0.0:
            out[pos] = lr
        else:
            out[pos] = ap**q * np.expm1(q * lr) / q
    return out


@dataclass(frozen=True, eq=False)
class DiscreteKernels:
    """Cell averages of ``K``, ``B`` and ``S`` on a mesh.

    ``B_avg[j, k]`` averages ``B(u, v)`` over daughter cell ``j`` and parent
    cell ``k``; it is zero for ``j > k``. The diagonal holds the average over
    the admissible triangle ``u < v`` of the square cell.
    """

    K_avg: np.ndarray
    B_avg: np.ndarray
    S_avg: np.ndarray
    sup_K: float
    sup_S: float
    eta: float
    approximate: bool = False

    def __post_init__(self):
        for arr in (self.K_avg, self.B_avg, self.S_avg):
            arr.setflags(write=False)


class SupNorms(NamedTuple):
    sup_K: float
    sup_S: float
    eta: float
    approximate: bool


def sup_norms(ks: KernelSet, x_min: float, R: float, samples: int = 401) -> SupNorms:
    """Suprema of ``K`` on ``[x_min, R]^2`` and ``S`` on ``[x_min, R]``.

    Built-in families are monotone and attain the supremum at a corner.
    A custom kernel without ``custom_bound`` is sampled on a dense grid and
    the result is flagged ``approximate``.
    """
    if not (R > x_min >= 0.0):
        raise ValueError(f"need R > x_min >= 0, got x_min={x_min!r}, R={R!r}")
    approximate = False
    fam = ks.coagulation
    if fam == "none":
        sup_k = 0.0
    elif fam == "constant":
        sup_k = ks.beta
    elif fam == "sum":
        sup_k = 2.0 * ks.beta * R
    elif fam == "product":
        sup_k = ks.beta * R * R
    elif ks.custom_bound is not None:
        sup_k = float(ks.custom_bound)
    else:
        grid = np.linspace(x_min, R, samples)
        if x_min == 0.0:
            grid[0] = R * 1e-12
        vals = ks.K(grid[:, None], grid[None, :])
        sup_k = float(np.max(vals))
        approximate = True
    if not ks.fragmentation:
        sup_s = 0.0
    else:
        p = ks.selection_exponent
        if p >= 0.0:
            sup_s = R**p
        elif x_min > 0.0:
            sup_s = x_min**p
        else:
            sup_s = np.inf
    return SupNorms(float(sup_k), float(sup_s), ks.eta, approximate)


def _coag_average(ks: KernelSet, mesh: Mesh, order: int) -> np.ndarray:
    x = mesh.centers
    fam = ks.coagulation
    n = mesh.n_cells
    if fam == "none":
        return np.zeros((n, n))
    if fam == "constant":
        return np.full((n, n), ks.beta)
    if fam == "sum":
        # average of a linear function is its value at the center
        return ks.beta * (x[:, None] + x[None, :])
    if fam == "product":
        return ks.beta * np.outer(x, x)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * mesh.widths
    pts = x[:, None] + half[:, None] * nodes[None, :]  # (n, q), interior of each cell
    vals = ks.K(pts[:, :, None, None], pts[None, None, :, :])
    avg = 0.25 * np.einsum("iajb,a,b->ij", vals, weights, weights)
    bad = ~np.isfinite(avg)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DiscretizationError(
            f"coagulation kernel is not finite on cell pair ({i}, {j}): "
            f"[{mesh.edges[i]:.6g}, {mesh.edges[i + 1]:.6g}] x [{mesh.edges[j]:.6g}, {mesh.edges[j + 1]:.6g}]"
        )
    # enforce exact symmetry of the averaged matrix
    return 0.5 * (avg + avg.T)


def _triangle_excess(alpha: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(b - a) - a**(alpha+1) * int_a^b v**(-alpha-1) dv`` for ``a > 0``.

    With ``L = log(b/a)`` and ``c = -alpha`` this is
    ``a * (expm1(L) - expm1(c L)/c)``, evaluated by its Taylor series for
    small ``L`` where the two terms cancel.
    """
    c = -alpha
    L = np.log1p((b - a) / a)
    out = np.empty_like(L)
    small = L < 0.5
    if np.any(~small):
        Lb = L[~small]
        second = Lb if c == 0.0 else np.expm1(c * Lb) / c
        out[~small] = np.expm1(Lb) - second
    if np.any(small):
        Ls = L[small]
        term = Ls.copy()
        acc = np.zeros_like(Ls)
        for k in range(2, 30):
            term = term * Ls / k
            acc += (1.0 - c ** (k - 1)) * term
        out[small] = acc
    return a * out


def _breakage_average(alpha: float, mesh: Mesh) -> np.ndarray:
    a, b = mesh.edges[:-1], mesh.edges[1:]
    dx = mesh.widths
    n = mesh.n_cells
    daughter = power_integral(a, b, alpha)  # int u**alpha du per cell
    parent = np.zeros(n)  # int v**(-alpha-1) dv per cell; cell 0 is never a parent off the diagonal
    pos = a > 0.0
    parent[pos] = power_integral(a[pos], b[pos], -alpha - 1.0)
    coef = alpha + 2.0
    avg = np.triu(coef * np.outer(daughter, parent) / np.outer(dx, dx), k=1)
    # diagonal: average over the triangle u < v of the square cell
    excess = dx.copy()
    excess[pos] = _triangle_excess(alpha, a[pos], b[pos])
    avg[np.arange(n), np.arange(n)] = coef / (alpha + 1.0) * excess / (dx * dx)
    return avg


def discretize_kernels(
    ks: KernelSet, mesh: Mesh, quadrature_order: int = DEFAULT_QUADRATURE_ORDER
) -> DiscreteKernels:
    """Cell-averaged kernels ``K_{i,j}``, ``B_{i,j}`` and ``S_i`` on ``mesh``."""
    if int(quadrature_order) != quadrature_order or quadrature_order < 1:
        raise ValueError(f"quadrature_order must be a positive integer, got {quadrature_order!r}")
    norms = sup_norms(ks, mesh.x_min, mesh.R)
    K_avg = _coag_average(ks, mesh, int(quadrature_order))
    if ks.fragmentation:
        S_avg = power_integral(mesh.edges[:-1], mesh.edges[1:], ks.selection_exponent) / mesh.widths
        B_avg = _breakage_average(ks.alpha, mesh)
    else:
        S_avg = np.zeros(mesh.n_cells)
        B_avg = np.zeros((mesh.n_cells, mesh.n_cells))
    if not np.all(np.isfinite(S_avg)):
        raise DiscretizationError("selection function average is not finite")
    return DiscreteKernels(
        K_avg=np.ascontiguousarray(K_avg),
        B_avg=np.ascontiguousarray(B_avg),
        S_avg=S_avg,
        sup_K=norms.sup_K,
        sup_S=norms.sup_S,
        eta=norms.eta,
        approximate=norms.approximate,
    )

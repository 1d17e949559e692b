"""Volume meshes of the truncated domain ]x_min, R].

Cells are right-closed intervals ``]x_{i-1/2}, x_{i+1/2}]``. A point sitting
exactly on an interior edge belongs to the cell on its left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .errors import MeshError, OutOfDomainError

DEFAULT_MAX_RATIO = 4.0
DEFAULT_X_MIN = 1e-3
_UNIFORM_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable 1-D volume mesh.

    Attributes
    ----------
    edges : ndarray, shape (n_cells + 1,)
        Strictly increasing cell edges; ``edges[0] = x_min``, ``edges[-1] = R``.
    kind : str
        ``"uniform"`` or ``"geometric"`` (informational).
    max_ratio : float
        The bound ``L`` on ``h / delta_h`` the mesh was validated against.
    """

    edges: np.ndarray
    kind: str = "uniform"
    max_ratio: float = DEFAULT_MAX_RATIO
    centers: np.ndarray = field(init=False, repr=False)
    widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 3:
            raise MeshError("a mesh needs at least 2 cells")
        if not np.all(np.isfinite(edges)):
            raise MeshError("mesh edges must be finite")
        if edges[0] < 0.0:
            raise MeshError(f"x_min must be >= 0, got {edges[0]!r}")
        widths = np.diff(edges)
        if np.any(widths <= 0.0):
            raise MeshError("mesh edges must be strictly increasing")
        centers = 0.5 * (edges[:-1] + edges[1:])
        ratio = widths.max() / widths.min()
        if ratio > self.max_ratio * (1.0 + 1e-12):
            raise MeshError(
                f"mesh condition violated: h/delta_h = {ratio:.6g} exceeds L = {self.max_ratio:.6g}"
            )
        for arr in (edges, widths, centers):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "centers", centers)

    @property
    def n_cells(self) -> int:
        return self.widths.size

    @property
    def x_min(self) -> float:
        return float(self.edges[0])

    @property
    def R(self) -> float:
        return float(self.edges[-1])

    @property
    def h(self) -> float:
        return float(self.widths.max())

    @property
    def delta_h(self) -> float:
        return float(self.widths.min())

    @cached_property
    def uniform(self) -> bool:
        w = self.widths
        return bool(np.all(np.abs(w - w[0]) <= _UNIFORM_RTOL * w[0]))

    @cached_property
    def gamma_table(self) -> np.ndarray:
        """Table ``G[i, j] = gamma_{i,j}`` for ``j <= i``.

        Entries whose difference ``x_{i+1/2} - x_j`` does not exceed ``x_min``
        are 0: every partner volume then carries the pair across the
        interface, so the birth sum inside cell ``i`` is empty. Entries with
        ``j > i`` are unused and hold ``n_cells``.
        """
        n = self.n_cells
        table = np.full((n, n), n, dtype=np.int64)
        ii, jj = np.tril_indices(n)
        if self._gamma_fast_path:
            table[ii, jj] = ii - jj
        else:
            diff = self.edges[ii + 1] - self.centers[jj]
            g = np.searchsorted(self.edges, diff, side="left") - 1
            table[ii, jj] = np.clip(g, 0, n - 1)
        table.setflags(write=False)
        return table

    @property
    def _gamma_fast_path(self) -> bool:
        # x_{i+1/2} - x_j = x_min + (i - j + 1/2) h lands in cell i - j iff x_min < h/2
        return self.uniform and self.x_min < 0.25 * self.h

    def same_as(self, other: "Mesh") -> bool:
        return self is other or (
            self.edges.shape == other.edges.shape and np.array_equal(self.edges, other.edges)
        )

    def refines(self, coarse: "Mesh") -> int:
        """Return the refinement factor if ``self`` splits every cell of
        ``coarse`` into the same number of sub-cells, else 0."""
        n, m = self.n_cells, coarse.n_cells
        if n % m:
            return 0
        factor = n // m
        tol = 1e-12 * max(abs(coarse.R), 1.0)
        if np.all(np.abs(self.edges[::factor] - coarse.edges) <= tol):
            return factor
        return 0

    def __repr__(self):
        return (
            f"Mesh(kind={self.kind!r}, n_cells={self.n_cells}, x_min={self.x_min:g}, "
            f"R={self.R:g}, h={self.h:.6g}, delta_h={self.delta_h:.6g})"
        )


def build_mesh(
    kind: Literal["uniform", "geometric"],
    x_min: float,
    R: float,
    n_cells: int,
    ratio: float | None = None,
    max_ratio: float = DEFAULT_MAX_RATIO,
) -> Mesh:
    """Build a uniform or geometric mesh of ``]x_min, R]``.

    For ``kind="geometric"``, ``ratio`` is the growth factor of successive
    widths. When omitted and ``x_min > 0`` the log-uniform mesh
    ``x_min * (R/x_min)**(k/n_cells)`` is used.
    """
    if int(n_cells) != n_cells or n_cells < 2:
        raise MeshError(f"n_cells must be an integer >= 2, got {n_cells!r}")
    n_cells = int(n_cells)
    if not (np.isfinite(x_min) and np.isfinite(R)) or x_min < 0.0:
        raise MeshError(f"domain bounds must be finite with x_min >= 0, got ({x_min!r}, {R!r})")
    if R <= x_min:
        raise MeshError(f"R must exceed x_min, got x_min={x_min!r}, R={R!r}")
    if max_ratio < 1.0:
        raise MeshError(f"max_ratio L must be >= 1, got {max_ratio!r}")

    if kind == "uniform":
        edges = np.linspace(x_min, R, n_cells + 1)
        if x_min == 0.0:
            # exact x_{i-1/2} = i h up to one rounding
            edges = np.arange(n_cells + 1) * (R / n_cells)
        edges[-1] = R
    elif kind == "geometric":
        k = np.arange(n_cells + 1)
        if ratio is None:
            if x_min <= 0.0:
                raise MeshError("a geometric mesh with x_min = 0 needs an explicit ratio")
            edges = x_min * (R / x_min) ** (k / n_cells)
        else:
            if not ratio > 1.0:
                raise MeshError(f"geometric ratio must be > 1, got {ratio!r}")
            # widths w0 * ratio**k summing to R - x_min
            growth = np.expm1(k * np.log(ratio)) / np.expm1(np.log(ratio))
            edges = x_min + (R - x_min) * growth / growth[-1]
        edges[0] = x_min
        edges[-1] = R
    else:
        raise MeshError(f"unknown mesh kind {kind!r}; expected 'uniform' or 'geometric'")
    return Mesh(edges, kind=kind, max_ratio=max_ratio)


def gamma_index(mesh: Mesh, i: int, j: int) -> int:
    """Index of the cell containing ``x_{i+1/2} - x_j``.

    Raises
    ------
    OutOfDomainError
        When the difference is not above ``x_min``; the coagulation birth
        sum for this pair is then empty.
    """
    n = mesh.n_cells
    if not (0 <= j <= i < n):
        raise IndexError(f"need 0 <= j <= i < {n}, got i={i}, j={j}")
    if mesh._gamma_fast_path:
        return i - j
    d = mesh.edges[i + 1] - mesh.centers[j]
    if d <= mesh.edges[0]:
        raise OutOfDomainError(
            f"x_{{i+1/2}} - x_j = {d:.6g} is not above x_min = {mesh.x_min:.6g} (i={i}, j={j})"
        )
    return int(np.searchsorted(mesh.edges, d, side="left")) - 1


def cell_index(mesh: Mesh, x):
    """Cell index of each volume in ``x`` (right-closed cells)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > mesh.edges[0])) or np.any(xa > mesh.edges[-1]):
        raise OutOfDomainError(f"volumes must lie in ]{mesh.x_min:g}, {mesh.R:g}]")
    idx = np.searchsorted(mesh.edges, xa, side="left") - 1
    return idx if idx.ndim else int(idx)


def project(mesh: Mesh, x, mode: Literal["mid", "left", "right"] = "mid"):
    """Map a volume to the center, left edge or right edge of its cell."""
    idx = cell_index(mesh, x)
    if mode == "mid":
        out = mesh.centers[idx]
    elif mode == "left":
        out = mesh.edges[idx]
    elif mode == "right":
        out = mesh.edges[np.asarray(idx) + 1]
    else:
        raise ValueError(f"mode must be 'mid', 'left' or 'right', got {mode!r}")
    return out if np.ndim(out) else float(out)

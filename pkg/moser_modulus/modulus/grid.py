"""Pixel grids on the unit square, cellwise-constant densities and polyline families.

Line integrals are exact for cellwise-constant densities: each segment is cut at the
grid lines it crosses and every piece is charged to the cell holding its midpoint.
Pieces outside ``[0, 1]^2`` carry no density.
"""

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from moser_modulus.errors import ValidationError
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)


@dataclass(frozen=True)
class Grid:
    """``N x N`` cells over ``[0, 1]^2``."""

    resolution: int

    def __post_init__(self) -> None:
        if not isinstance(self.resolution, int) or self.resolution < 2:
            raise ValidationError("N", f"grid resolution must be an integer >= 2, "
                                       f"got {self.resolution}")

    @property
    def cell_width(self) -> float:
        return 1.0 / self.resolution

    @property
    def cell_area(self) -> float:
        return 1.0 / self.resolution**2

    @property
    def size(self) -> int:
        return self.resolution**2

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.resolution * factor)

    def cell_boxes(self) -> np.ndarray:
        """``(N*N, 4)`` boxes (minx, miny, maxx, maxy) in flat ``ix * N + iy`` order."""
        n = self.resolution
        ix, iy = (a.ravel() for a in np.meshgrid(np.arange(n), np.arange(n), indexing="ij"))
        return np.stack([ix, iy, ix + 1, iy + 1], axis=1) / n


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nonnegative cellwise-constant density, ``values[ix, iy]``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        n = self.grid.resolution
        if values.shape != (n, n):
            raise ValidationError("rho", f"expected shape {(n, n)}, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("rho", "density values must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "GridDensity":
        return cls(grid, np.full((grid.resolution, grid.resolution), float(value)))

    @classmethod
    def from_flat(cls, grid: Grid, flat: Sequence[float]) -> "GridDensity":
        return cls(grid, np.asarray(flat, dtype=float).reshape(grid.resolution, grid.resolution))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def scaled(self, factor: float) -> "GridDensity":
        return GridDensity(self.grid, self.values * factor)


@dataclass(frozen=True, eq=False)
class CurveFamily:
    """A finite family of polylines with optional per-curve labels.

    Features:
    - Curves stored as ``(P, 2)`` float arrays with at least two points
    - Labels carry provenance (seed, isometry) into reports
    - Sparse curve-by-cell length matrices per grid, cached and built once under a lock
    """

    curves: tuple[np.ndarray, ...]
    labels: tuple[dict[str, Any], ...] = ()
    _incidence: dict[int, sparse.csr_matrix] = field(default_factory=dict, init=False, repr=False)
    _incidence_lock: threading.Lock = field(
        default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self) -> None:
        curves = tuple(np.asarray(c, dtype=float) for c in self.curves)
        for i, c in enumerate(curves):
            if c.ndim != 2 or c.shape[1] != 2 or len(c) < 2:
                raise ValidationError(f"curves[{i}]", "a curve needs at least two 2D points")
            if not np.all(np.isfinite(c)):
                raise ValidationError(f"curves[{i}]", "coordinates must be finite")
        labels = tuple(self.labels) or tuple({} for _ in curves)
        if len(labels) != len(curves):
            raise ValidationError("labels", "one label per curve is required")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, curves: Iterable[Sequence[Sequence[float]]],
           labels: Optional[Iterable[dict[str, Any]]] = None) -> "CurveFamily":
        return cls(tuple(np.asarray(c, dtype=float) for c in curves),
                   tuple(labels) if labels is not None else ())

    def __len__(self) -> int:
        return len(self.curves)

    def __add__(self, other: "CurveFamily") -> "CurveFamily":
        return CurveFamily(self.curves + other.curves, self.labels + other.labels)

    def subset(self, indices: Iterable[int]) -> "CurveFamily":
        picked = list(indices)
        return CurveFamily(tuple(self.curves[i] for i in picked),
                           tuple(self.labels[i] for i in picked))

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([float(np.sum(np.hypot(*np.diff(c, axis=0).T))) for c in self.curves])

    def incidence(self, grid: Grid) -> sparse.csr_matrix:
        """``(curves, N*N)`` matrix of curve length inside each cell."""
        with self._incidence_lock:
            cached = self._incidence.get(grid.resolution)
            if cached is None:
                cached = self._build_incidence(grid)
                self._incidence[grid.resolution] = cached
            return cached

    def _build_incidence(self, grid: Grid) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for i, curve in enumerate(self.curves):
            cells, lengths = cell_lengths(grid, curve)
            rows.append(np.full(len(cells), i))
            cols.append(cells)
            vals.append(lengths)
        matrix = sparse.csr_matrix(
            (np.concatenate(vals) if vals else np.zeros(0),
             (np.concatenate(rows) if rows else np.zeros(0, dtype=int),
              np.concatenate(cols) if cols else np.zeros(0, dtype=int))),
            shape=(len(self), grid.size),
        )
        matrix.sum_duplicates()
        logger.debug("incidence_built", curves=len(self), N=grid.resolution, nnz=matrix.nnz)
        return matrix


def _segment_pieces(grid: Grid, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = grid.resolution
    d = b - a
    length = math.hypot(*d)
    if length == 0.0:
        return np.zeros(0, dtype=int), np.zeros(0)
    cuts = [np.array([0.0, 1.0])]
    for axis in (0, 1):
        if d[axis] != 0.0:
            lo, hi = sorted((a[axis], b[axis]))
            lines = np.arange(math.ceil(lo * n), math.floor(hi * n) + 1) / n
            t = (lines - a[axis]) / d[axis]
            cuts.append(t[(t > 0.0) & (t < 1.0)])
    t = np.unique(np.concatenate(cuts))
    mid = a + np.outer((t[:-1] + t[1:]) / 2, d)
    inside = np.all((mid >= 0.0) & (mid <= 1.0), axis=1)
    ij = np.minimum(np.floor(mid[inside] * n).astype(int), n - 1)
    return ij[:, 0] * n + ij[:, 1], np.diff(t)[inside] * length


def cell_lengths(grid: Grid, curve: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat cell indices and the curve length inside each (duplicates possible)."""
    pieces = [_segment_pieces(grid, a, b) for a, b in zip(curve[:-1], curve[1:])]
    if not pieces:
        return np.zeros(0, dtype=int), np.zeros(0)
    return np.concatenate([p[0] for p in pieces]), np.concatenate([p[1] for p in pieces])


def line_integral(rho: GridDensity, gamma: Sequence[Sequence[float]]) -> float:
    """``∫_gamma rho dH1`` for a polyline."""
    cells, lengths = cell_lengths(rho.grid, np.asarray(gamma, dtype=float))
    return float(np.dot(rho.flat[cells], lengths))


def is_admissible(rho: GridDensity, fam: CurveFamily,
                  slack: float = 0.0) -> tuple[bool, int, float]:
    """Whether every curve has ``∫ rho >= 1 - slack``.

    Returns:
        ``(admissible, index of the worst curve, its integral)``
    """
    if slack < 0:
        raise ValidationError("slack", "must be nonnegative")
    if not len(fam):
        return True, -1, math.inf
    integrals = fam.incidence(rho.grid) @ rho.flat
    worst = int(np.argmin(integrals))
    return bool(integrals[worst] >= 1.0 - slack), worst, float(integrals[worst])


def energy(rho: GridDensity, p: float) -> float:
    """``∫ rho**p dx``."""
    if not p > 1:
        raise ValidationError("p", f"must exceed 1, got {p}")
    return float(np.sum(rho.values**p) * rho.grid.cell_area)

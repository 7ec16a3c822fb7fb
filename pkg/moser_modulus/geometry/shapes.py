"""Convex polygons, unions of axis-aligned squares, and the clipping measures on them.

Areas of ``T ∩ iota(E)`` are computed by splitting ``E`` into disjoint rectangles and
clipping each rotated rectangle against the convex cell, so overlapping squares are
never counted twice. Lengths use the resolved union instead, which keeps a segment
running along a shared rectangle edge from being counted twice.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
import shapely
from scipy.spatial import ConvexHull, QhullError

from moser_modulus.config import Config, Messages
from moser_modulus.errors import ValidationError
from moser_modulus.geometry.isometry import IDENTITY, Isometry, Point
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)

Rect = tuple[float, float, float, float]


def _polygon_signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counterclockwise vertices; flat (zero-area) polygons allowed."""

    vertices: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = tuple(Point(float(x), float(y)) for x, y in self.vertices)
        if not pts or not all(math.isfinite(c) for p in pts for c in p):
            raise ValidationError("vertices", "polygon needs finite vertices")
        array = np.asarray(pts)
        if len(pts) >= 3 and _polygon_signed_area(array) < 0:
            pts = pts[::-1]
        object.__setattr__(self, "vertices", pts)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "ConvexPolygon":
        """Convex hull of arbitrary points, counterclockwise."""
        array = np.asarray(list(points), dtype=float)
        try:
            hull = ConvexHull(array)
        except (QhullError, ValueError):
            # Collinear or too few points: keep the flat polygon
            return cls(tuple(Point(*p) for p in array))
        return cls(tuple(Point(*array[i]) for i in hull.vertices))

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "ConvexPolygon":
        return cls((Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)))

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @cached_property
    def geometry(self) -> shapely.Geometry:
        if len(self.vertices) < 3:
            return shapely.Polygon()
        return shapely.Polygon(self.array)

    @property
    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        return abs(_polygon_signed_area(self.array))

    def transformed(self, iota: Isometry) -> "ConvexPolygon":
        return ConvexPolygon(tuple(Point(*p) for p in iota.apply_many(self.array)))


def clip_area(p: ConvexPolygon, q: ConvexPolygon) -> float:
    """Area of the intersection of two convex polygons."""
    if p.area == 0.0 or q.area == 0.0:
        return 0.0
    return float(shapely.area(shapely.intersection(p.geometry, q.geometry)))


def _clip_box() -> Rect:
    half = Config.CLIP_BOX_HALF
    return (0.5 - half, 0.5 - half, 0.5 + half, 0.5 + half)


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


@dataclass(frozen=True)
class SquareUnion:
    """Finite union of closed axis-aligned squares, overlaps allowed.

    Features:
    - Disjoint rectangle partition (exact area, no double counting)
    - Resolved union geometry for length queries
    - Everything restricted to the 30 x 30 box around the unit square
    """

    squares: tuple[tuple[Point, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        cleaned = []
        for corner, side in self.squares:
            x, y = float(corner[0]), float(corner[1])
            side = float(side)
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(side)):
                raise ValidationError("E", "square coordinates must be finite")
            if side <= 0:
                raise ValidationError("E", f"square side must be positive, got {side}")
            cleaned.append((Point(x, y), side))
        object.__setattr__(self, "squares", tuple(cleaned))

    @classmethod
    def of(cls, *squares: tuple[Sequence[float], float]) -> "SquareUnion":
        return cls(tuple((Point(*corner), side) for corner, side in squares))

    @classmethod
    def unit(cls) -> "SquareUnion":
        return cls.of(((0.0, 0.0), 1.0))

    def add(self, corner: Sequence[float], side: float) -> "SquareUnion":
        return SquareUnion((*self.squares, (Point(*corner), float(side))))

    @property
    def is_empty(self) -> bool:
        return not self.rectangles

    @cached_property
    def clipped_squares(self) -> tuple[Rect, ...]:
        bx0, by0, bx1, by1 = _clip_box()
        kept: list[Rect] = []
        dropped = 0
        for (x, y), side in self.squares:
            rect = (max(x, bx0), max(y, by0), min(x + side, bx1), min(y + side, by1))
            if rect[0] < rect[2] and rect[1] < rect[3]:
                kept.append(rect)
            else:
                dropped += 1
        if dropped:
            logger.warning("squares_outside_clip_box", dropped=dropped, kept=len(kept))
        return tuple(kept)

    @cached_property
    def rectangles(self) -> tuple[Rect, ...]:
        """Disjoint axis-aligned rectangles whose union is the (clipped) square union."""
        squares = self.clipped_squares
        if not squares:
            return ()
        xs = sorted({c for r in squares for c in (r[0], r[2])})
        out: list[Rect] = []
        for x0, x1 in zip(xs, xs[1:]):
            spans = [(r[1], r[3]) for r in squares if r[0] <= x0 and r[2] >= x1]
            for y0, y1 in _merge_intervals(spans):
                out.append((x0, y0, x1, y1))
        return tuple(out)

    @cached_property
    def rectangle_array(self) -> np.ndarray:
        """``(R, 4, 2)`` counterclockwise corner array of the disjoint rectangles."""
        if not self.rectangles:
            return np.zeros((0, 4, 2))
        r = np.asarray(self.rectangles)
        return np.stack([
            np.stack([r[:, 0], r[:, 1]], axis=-1),
            np.stack([r[:, 2], r[:, 1]], axis=-1),
            np.stack([r[:, 2], r[:, 3]], axis=-1),
            np.stack([r[:, 0], r[:, 3]], axis=-1),
        ], axis=1)

    @cached_property
    def union(self) -> shapely.Geometry:
        if not self.rectangles:
            return shapely.Polygon()
        return shapely.union_all(shapely.box(*np.asarray(self.rectangles).T))

    @cached_property
    def area(self) -> float:
        return float(sum((r[2] - r[0]) * (r[3] - r[1]) for r in self.rectangles))

    @cached_property
    def bounds(self) -> Optional[Rect]:
        if not self.rectangles:
            return None
        r = np.asarray(self.rectangles)
        return (float(r[:, 0].min()), float(r[:, 1].min()),
                float(r[:, 2].max()), float(r[:, 3].max()))

    @cached_property
    def diameter(self) -> float:
        if not self.rectangles:
            return 0.0
        corners = self.rectangle_array.reshape(-1, 2)
        diffs = corners[:, None, :] - corners[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(axis=-1)).max())

    @property
    def anchor(self) -> Point:
        """A point of E: the centre of its first rectangle."""
        if not self.rectangles:
            raise ValidationError("E", "empty set has no anchor point")
        x0, y0, x1, y1 = self.rectangles[0]
        return Point((x0 + x1) / 2, (y0 + y1) / 2)

    def transformed_union(self, iota: Isometry) -> shapely.Geometry:
        if iota == IDENTITY:
            return self.union
        return shapely.transform(self.union, iota.apply_many)

    def transformed_rectangles(self, iota: Isometry) -> np.ndarray:
        """Rotated rectangle polygons ``iota(R)`` as a shapely array."""
        if not self.rectangles:
            return np.empty(0, dtype=object)
        return shapely.polygons(iota.apply_many(self.rectangle_array))

    def warn_if_large(self) -> None:
        if self.diameter > 2.0:
            logger.warning("large_test_set", message=Messages.LARGE_DIAMETER.format(
                diam=self.diameter))

    def to_spec(self) -> list[list[float]]:
        """JSON-friendly ``[[x, y, side], ...]`` listing."""
        return [[c.x, c.y, s] for c, s in self.squares]

    @classmethod
    def from_spec(cls, spec: Iterable[Sequence[float]]) -> "SquareUnion":
        squares = []
        for i, entry in enumerate(spec):
            if len(entry) != 3:
                raise ValidationError(f"E[{i}]", "expected [x, y, side]")
            squares.append((Point(float(entry[0]), float(entry[1])), float(entry[2])))
        return cls(tuple(squares))


def region_area(T: ConvexPolygon, E: SquareUnion, iota: Isometry = IDENTITY) -> float:
    """Area of ``T ∩ iota(E)``, summed over the disjoint rectangle partition of ``E``."""
    if E.is_empty or T.area == 0.0:
        return 0.0
    pieces = shapely.intersection(T.geometry, E.transformed_rectangles(iota))
    return float(shapely.area(pieces).sum())


def segment_length_in(seg: tuple[Point, Point], E: SquareUnion,
                      iota: Isometry = IDENTITY) -> float:
    """Length of the part of a segment lying in ``iota(E)``."""
    a, b = seg
    if E.is_empty or (a[0] == b[0] and a[1] == b[1]):
        return 0.0
    line = shapely.LineString([a, b])
    return float(shapely.length(shapely.intersection(line, E.transformed_union(iota))))


def dyadic_cover(E: SquareUnion, level: int) -> SquareUnion:
    """Closed dyadic squares of side ``2**-level`` meeting the interior of ``E``."""
    if level < 0:
        raise ValidationError("level", "dyadic level must be nonnegative")
    scale = 2 ** level
    side = 1.0 / scale
    tiles: set[tuple[int, int]] = set()
    for x0, y0, x1, y1 in E.clipped_squares:
        i_range = range(math.floor(x0 * scale), math.ceil(x1 * scale))
        j_range = range(math.floor(y0 * scale), math.ceil(y1 * scale))
        tiles.update((i, j) for i in i_range for j in j_range)
    ordered = sorted(tiles)
    logger.debug("dyadic_cover_built", level=level, tiles=len(ordered))
    return SquareUnion(tuple((Point(i * side, j * side), side) for i, j in ordered))

"""Float cell layers with a spatial index, and sup-over-net searches on them.

A layer is any finite family of cells (generation parallelograms, quadtree squares)
or segments (graph polylines). Measures of ``iota(E)`` inside a layer reduce to
pairwise clipping between a batch of transformed shapes and the indexed cells.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import shapely

from moser_modulus.geometry import IDENTITY, Isometry, IsometryKind, IsometryNet, Point, SquareUnion
from moser_modulus.logging_config import get_logger
from moser_modulus.wormgraphs import Generation, QuadtreeSet

# Set up structured logger for this module
logger = get_logger(__name__)

ORTHOGONAL_BATCH = 32


class Measure(Enum):
    """What a layer integrates: cell areas or segment lengths."""

    AREA = "area"
    LENGTH = "length"


@dataclass(frozen=True, eq=False)
class CellLayer:
    """Indexed float cells of one scale.

    Features:
    - Polygon cells (area layers) or segments (length layers)
    - STRtree over the cells for pairwise clipping
    - Consecutive-chunk bounding boxes for pruning net searches
    """

    vertices: np.ndarray
    total: float
    cell_width: float
    thickness: float
    directions: np.ndarray
    measure: Measure = Measure.AREA

    @classmethod
    def from_generation(cls, g: Generation) -> "CellLayer":
        slopes = np.array([float(c.slope) for c in g.cells])
        return cls(g.vertex_array, float(g.total_area), float(g.width), float(g.height),
                   np.arctan(slopes))

    @classmethod
    def from_quadtree(cls, qt: QuadtreeSet, level: int) -> "CellLayer":
        side = qt.side(level)
        count = len(qt.squares(level))
        return cls(qt.vertex_array(level), qt.area(level), side, side, np.zeros(count))

    @classmethod
    def from_polyline(cls, points: Sequence[Point]) -> "CellLayer":
        pts = np.asarray(points, dtype=float)
        segments = np.stack([pts[:-1], pts[1:]], axis=1)
        d = segments[:, 1] - segments[:, 0]
        return cls(segments, 1.0, 1.0 / len(segments), 0.0, np.arctan2(d[:, 1], d[:, 0]),
                   Measure.LENGTH)

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def geometries(self) -> np.ndarray:
        if self.measure is Measure.LENGTH:
            return shapely.linestrings(self.vertices)
        return shapely.polygons(self.vertices)

    @cached_property
    def tree(self) -> shapely.STRtree:
        return shapely.STRtree(self.geometries)

    @cached_property
    def centers(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    def chunk_boxes(self, size: int) -> np.ndarray:
        """``(B, 4)`` bounding boxes (minx, miny, maxx, maxy) of consecutive cell groups."""
        size = max(1, size)
        count = math.ceil(len(self) / size)
        pad = count * size - len(self)
        lo = self.vertices.min(axis=1)
        hi = self.vertices.max(axis=1)
        if pad:
            lo = np.concatenate([lo, np.repeat(lo[-1:], pad, axis=0)])
            hi = np.concatenate([hi, np.repeat(hi[-1:], pad, axis=0)])
        lo = lo.reshape(count, size, 2).min(axis=1)
        hi = hi.reshape(count, size, 2).max(axis=1)
        return np.concatenate([lo, hi], axis=1)

    def overlap(self, shapes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Every intersecting (shape, cell) pair with the measure of their intersection."""
        if len(shapes) == 0 or len(self) == 0:
            empty = np.zeros(0, dtype=np.intp)
            return empty, empty, np.zeros(0)
        shape_idx, cell_idx = self.tree.query(shapes, predicate="intersects")
        if len(shape_idx) == 0:
            return shape_idx, cell_idx, np.zeros(0)
        pieces = shapely.intersection(self.geometries[cell_idx], shapes[shape_idx])
        if self.measure is Measure.LENGTH:
            values = shapely.length(pieces)
        else:
            values = shapely.area(pieces)
        return shape_idx, cell_idx, np.asarray(values, dtype=float)

    def normalized(self, raw: np.ndarray) -> np.ndarray:
        """Raw sums to the layer's scale: densities for areas, lengths unchanged."""
        if self.measure is Measure.LENGTH:
            return raw
        return np.clip(raw / self.total, 0.0, 1.0)


def member_shapes(E: SquareUnion, layer: CellLayer, matrices: np.ndarray,
                  shifts: np.ndarray) -> tuple[np.ndarray, int]:
    """Images of ``E`` under ``x -> O_m x - shift_m`` for every member m.

    Area layers get the disjoint rectangles of ``E`` (``R`` shapes per member); length
    layers get the resolved union (one shape per member).
    """
    count = len(matrices)
    if layer.measure is Measure.AREA:
        rects = E.rectangle_array
        coords = np.einsum("rkj,mij->mrki", rects, matrices) - shifts[:, None, None, :]
        return shapely.polygons(coords.reshape(-1, 4, 2)), len(rects)
    union = E.union
    per = int(shapely.get_num_coordinates(union))

    def move(points: np.ndarray) -> np.ndarray:
        pts = points.reshape(count, per, 2)
        return (np.einsum("mij,mcj->mci", matrices, pts) - shifts[:, None, :]).reshape(-1, 2)

    return shapely.transform(np.full(count, union, dtype=object), move), 1


def measure_under(layer: CellLayer, E: SquareUnion, iotas: Sequence[Isometry]) -> np.ndarray:
    """Normalized measure of ``iota(E)`` inside the layer, per isometry."""
    if E.is_empty or not iotas:
        return np.zeros(len(iotas))
    matrices = np.stack([i.matrix for i in iotas])
    shifts = np.stack([i.shift for i in iotas])
    shapes, per = member_shapes(E, layer, matrices, shifts)
    shape_idx, _, values = layer.overlap(shapes)
    raw = np.bincount(shape_idx // per, weights=values, minlength=len(iotas))
    return layer.normalized(raw)


def per_cell_measure(layer: CellLayer, E: SquareUnion, iota: Isometry = IDENTITY) -> np.ndarray:
    """Raw measure of ``iota(E)`` inside each cell."""
    if E.is_empty:
        return np.zeros(len(layer))
    shapes, _ = member_shapes(E, layer, iota.matrix[None], iota.shift[None])
    _, cell_idx, values = layer.overlap(shapes)
    return np.bincount(cell_idx, weights=values, minlength=len(layer))


def _candidate_translations(net: IsometryNet, matrix: np.ndarray, e_corners: np.ndarray,
                            boxes: np.ndarray) -> np.ndarray:
    """Lattice translations ``v`` for which ``O(E - v)`` can meet some chunk box."""
    s = net.spacing
    image = e_corners @ matrix.T
    (ax0, ay0), (ax1, ay1) = image.min(axis=0), image.max(axis=0)
    # shifts w = O v with bbox(O E) - w overlapping a chunk box
    wx0, wx1 = ax0 - boxes[:, 2], ax1 - boxes[:, 0]
    wy0, wy1 = ay0 - boxes[:, 3], ay1 - boxes[:, 1]
    cx = np.stack([wx0, wx1, wx1, wx0], axis=1)
    cy = np.stack([wy0, wy0, wy1, wy1], axis=1)
    vx = matrix[0, 0] * cx + matrix[1, 0] * cy
    vy = matrix[0, 1] * cx + matrix[1, 1] * cy
    i0, i1 = np.ceil(vx.min(axis=1) / s), np.floor(vx.max(axis=1) / s)
    j0, j1 = np.ceil(vy.min(axis=1) / s), np.floor(vy.max(axis=1) / s)
    span_i = (i1 - i0 + 1).astype(np.int64)
    span_j = (j1 - j0 + 1).astype(np.int64)
    mi, mj = int(span_i.max(initial=0)), int(span_j.max(initial=0))
    if mi <= 0 or mj <= 0:
        return np.zeros((0, 2))
    di, dj = (a.ravel() for a in np.meshgrid(np.arange(mi), np.arange(mj), indexing="ij"))
    ok = (di[None, :] < span_i[:, None]) & (dj[None, :] < span_j[:, None])
    ii = (i0[:, None] + di[None, :])[ok]
    jj = (j0[:, None] + dj[None, :])[ok]
    lattice = np.unique(np.stack([ii, jj], axis=1).astype(np.int64), axis=0)
    v = lattice * s
    return v[net.contains(v)]


def iter_candidates(layer: CellLayer, E: SquareUnion,
                    net: IsometryNet) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Batches ``(orthogonal indices, translations)`` of net members that can matter.

    Members whose image of ``E`` misses every chunk box have measure zero and are
    skipped; the maximum over the net is unchanged.
    """
    size = max(1, math.ceil(len(layer) * net.delta / 2))
    boxes = layer.chunk_boxes(size)
    corners = E.rectangle_array.reshape(-1, 2)
    o_batch: list[np.ndarray] = []
    v_batch: list[np.ndarray] = []
    for o, matrix in enumerate(net.matrices):
        v = _candidate_translations(net, matrix, corners, boxes)
        if len(v):
            o_batch.append(np.full(len(v), o))
            v_batch.append(v)
        if len(o_batch) >= ORTHOGONAL_BATCH:
            yield np.concatenate(o_batch), np.concatenate(v_batch)
            o_batch, v_batch = [], []
    if o_batch:
        yield np.concatenate(o_batch), np.concatenate(v_batch)


def net_search(layer: CellLayer, E: SquareUnion, net: IsometryNet) -> tuple[float, Isometry, int]:
    """Maximum normalized measure of ``iota(E)`` over the net.

    Returns:
        ``(value, argmax member, members evaluated)``; ``(0, identity, 0)`` when no
        member reaches the layer
    """
    best_value, best = 0.0, IDENTITY
    evaluated = 0
    if E.is_empty:
        return best_value, best, evaluated
    for o_idx, v in iter_candidates(layer, E, net):
        matrices = net.matrices[o_idx]
        shifts = np.einsum("mij,mj->mi", matrices, v)
        shapes, per = member_shapes(E, layer, matrices, shifts)
        shape_idx, _, values = layer.overlap(shapes)
        raw = np.bincount(shape_idx // per, weights=values, minlength=len(o_idx))
        scores = layer.normalized(raw)
        evaluated += len(o_idx)
        top = int(np.argmax(scores))
        if scores[top] > best_value:
            best_value = float(scores[top])
            kind, angle = net.orthogonals[int(o_idx[top])]
            best = Isometry(kind, angle, Point(float(v[top, 0]), float(v[top, 1])))
    logger.debug("net_search_done", delta=net.delta, evaluated=evaluated, value=best_value)
    return best_value, best, evaluated


def orthogonal_for_direction(kind: IsometryKind, source: float, target: float) -> float:
    """Angle of the orthogonal map of ``kind`` sending direction ``source`` to ``target``."""
    if kind is IsometryKind.ROTATION:
        return (target - source) % (2 * math.pi)
    return (target + source) % (2 * math.pi)


__all__ = [
    "CellLayer",
    "Measure",
    "measure_under",
    "member_shapes",
    "net_search",
    "orthogonal_for_direction",
    "per_cell_measure",
]

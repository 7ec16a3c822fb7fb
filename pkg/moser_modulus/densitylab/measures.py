"""Densities, intersection lengths and string statistics of one sampled branch."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import shapely

from moser_modulus.config import Messages
from moser_modulus.densitylab.layers import (
    CellLayer,
    measure_under,
    net_search,
    per_cell_measure,
)
from moser_modulus.errors import PreconditionError, ValidationError
from moser_modulus.geometry import (
    IDENTITY,
    Isometry,
    IsometryKind,
    Point,
    SquareUnion,
    build_net,
)
from moser_modulus.logging_config import get_logger
from moser_modulus.wormgraphs import Generation, MkSequence, OmegaSample, graph_polyline

# Set up structured logger for this module
logger = get_logger(__name__)

LayerLike = Generation | CellLayer


def as_layer(g: LayerLike) -> CellLayer:
    """Index a generation, or pass an existing layer through."""
    if isinstance(g, CellLayer):
        return g
    return CellLayer.from_generation(g)


def density(g: LayerLike, E: SquareUnion, iota: Isometry = IDENTITY) -> float:
    """``|G ∩ iota(E)| / |G|`` for the union G of the layer's cells, clamped to [0, 1]."""
    return float(measure_under(as_layer(g), E, [iota])[0])


class TrivialBound(NamedTuple):
    sharp: float
    loose: float


def trivial_density_bound(seq: MkSequence, k: int, epsilon: float) -> TrivialBound:
    """``n_k * epsilon`` and the looser ``10000 k**2 2**k epsilon``."""
    if not 0 <= k <= seq.max_depth:
        raise ValidationError("k", f"must lie in [0, {seq.max_depth}], got {k}")
    return TrivialBound(seq.n[k] * epsilon, 10000.0 * k * k * 2.0**k * epsilon)


def sup_density_net(g: LayerLike, E: SquareUnion, delta: float) -> tuple[float, Isometry]:
    """Largest density of ``iota(E)`` over the delta-net centred at a point of E.

    Args:
        g: Generation or prepared layer
        E: Nonempty test set
        delta: Net resolution in (0, 1]

    Returns:
        ``(value, argmax isometry)``
    """
    if E.is_empty:
        raise ValidationError("E", "net search needs a nonempty set")
    E.warn_if_large()
    net = build_net(delta, E.anchor)
    value, best, evaluated = net_search(as_layer(g), E, net)
    logger.debug("sup_density_net", delta=delta, members=len(net), evaluated=evaluated,
                 value=value)
    return value, best


def _polyline_geometry(w: OmegaSample, k: int) -> shapely.LineString:
    return shapely.LineString(graph_polyline(w, k))


def intersection_length(w: OmegaSample, k: int, E: SquareUnion,
                        iota: Isometry = IDENTITY) -> float:
    """Length of the depth-k graph polyline inside ``iota(E)``.

    The polyline stays within ``1/n_k`` of the limit graph, so the bias is at most its
    length near the boundary of ``iota(E)``.
    """
    line = _polyline_geometry(w, k)
    if E.is_empty:
        return 0.0
    return float(shapely.length(shapely.intersection(line, E.transformed_union(iota))))


def sup_intersection_net(w: OmegaSample, k: int, E: SquareUnion,
                         delta: float) -> tuple[float, Isometry]:
    """Largest polyline length inside ``iota(E)`` over the delta-net centred in E."""
    if E.is_empty:
        return 0.0, IDENTITY
    layer = CellLayer.from_polyline(graph_polyline(w, k))
    value, best, _ = net_search(layer, E, build_net(delta, E.anchor))
    return value, best


@dataclass(frozen=True)
class DyadicPartition:
    """Unit squares meeting E, classed by the mass of E they hold.

    Class j collects squares with ``epsilon 2**(-j-1) < |E ∩ Q| <= epsilon 2**-j``;
    squares touching E in measure zero form ``null_squares``.
    """

    epsilon: float
    classes: dict[int, list[tuple[int, int]]]
    masses: dict[tuple[int, int], float]
    null_squares: list[tuple[int, int]] = field(default_factory=list)

    def counts(self) -> dict[int, int]:
        return {j: len(qs) for j, qs in sorted(self.classes.items())}

    @property
    def bound_holds(self) -> bool:
        return all(len(qs) < 2 ** (j + 1) for j, qs in self.classes.items())


def _mass_class(mass: float, epsilon: float) -> int:
    j = max(0, math.floor(-math.log2(mass / epsilon)))
    while j > 0 and mass > epsilon * 2.0**-j:
        j -= 1
    while mass <= epsilon * 2.0 ** (-j - 1):
        j += 1
    return j


def dyadic_partition(E: SquareUnion, epsilon: float) -> DyadicPartition:
    """Split the unit dyadic squares meeting E into mass classes.

    Raises:
        PreconditionError: If ``|E| >= epsilon``
    """
    if E.area >= epsilon:
        raise PreconditionError(f"|E| = {E.area:.6g} must be below epsilon = {epsilon:.6g}")
    masses: dict[tuple[int, int], float] = {}
    for x0, y0, x1, y1 in E.rectangles:
        for i in range(math.ceil(x0) - 1, math.floor(x1) + 1):
            for j in range(math.ceil(y0) - 1, math.floor(y1) + 1):
                dx = min(x1, i + 1) - max(x0, i)
                dy = min(y1, j + 1) - max(y0, j)
                if dx >= 0 and dy >= 0:
                    masses[(i, j)] = masses.get((i, j), 0.0) + dx * dy
    classes: dict[int, list[tuple[int, int]]] = {}
    null_squares = []
    for square, mass in sorted(masses.items()):
        if mass <= 0.0:
            null_squares.append(square)
            continue
        classes.setdefault(_mass_class(mass, epsilon), []).append(square)
    partition = DyadicPartition(epsilon, classes, masses, null_squares)
    if not partition.bound_holds:
        raise PreconditionError(f"class sizes {partition.counts()} break the 2^(j+1) bound")
    return partition


@dataclass(frozen=True, eq=False)
class StringStats:
    """Per-string areas and densities of ``iota(E)`` in generation ``k - 1``.

    ``bound`` is the a.s. upper bound of X_S built from the measured constant ``c_b``;
    ``exact_bound`` is ``min(1, |E ∩ S| m_k / |S|)``.
    """

    k: int
    areas: np.ndarray
    intersections: np.ndarray
    densities: np.ndarray
    bound: np.ndarray
    exact_bound: np.ndarray
    c_b: float

    @property
    def count(self) -> int:
        return len(self.areas)

    @property
    def bound_square_sum(self) -> float:
        """``sum (b_S - a_S)**2`` with ``a_S = 0``."""
        return float(np.sum(self.bound**2))

    @property
    def mean_density(self) -> float:
        return float(np.mean(self.densities))


def _string_sums(g: Generation, per_cell: np.ndarray) -> np.ndarray:
    owner = np.asarray(g.string_of)
    mask = owner >= 0
    return np.bincount(owner[mask], weights=per_cell[mask], minlength=len(g.strings))


def _check_parent(g: Generation, seq: MkSequence) -> int:
    k = g.gen + 1
    if k > seq.max_depth:
        raise ValidationError("k", f"generation {g.gen} has no children within depth "
                                   f"{seq.max_depth}")
    if not g.strings:
        raise ValidationError("g", "generation has no strings")
    return k


def string_stats(g: Generation, E: SquareUnion, seq: MkSequence,
                 iota: Isometry = IDENTITY) -> StringStats:
    """String statistics of the parent generation ``g`` (generation ``k - 1``)."""
    k = _check_parent(g, seq)
    layer = CellLayer.from_generation(g)
    cell_area = float(g.width * g.height)
    areas = np.array([(b - a) * cell_area for a, b in g.strings])
    inter = _string_sums(g, per_cell_measure(layer, E, iota))
    densities = np.clip(inter / areas, 0.0, 1.0)
    m = seq.m[k]
    card = len(g.strings)
    scale = k * k * 2.0**k * card
    c_b = float(np.max(m / areas) / scale)
    bound = np.minimum(1.0, c_b * inter * scale)
    exact = np.minimum(1.0, inter * m / areas)
    return StringStats(k, areas, inter, densities, bound, exact, c_b)


def string_pile_table(g: Generation, E: SquareUnion, seq: MkSequence,
                      iota: Isometry = IDENTITY) -> np.ndarray:
    """``(strings, m_k)`` table of X_S when pile j is chosen in string S.

    Each X_S is uniform over its row, so the row mean is d_S.
    """
    k = _check_parent(g, seq)
    m = seq.m[k]
    owner = np.asarray(g.string_of)
    normal = np.flatnonzero(owner >= 0)
    w = float(g.width)
    h = float(g.height) / m
    x0 = np.array([float(g.cells[i].x0) for i in normal])
    y0 = np.array([float(g.cells[i].y0) for i in normal])
    rise = np.array([float(g.cells[i].slope) for i in normal]) * w
    base = y0[:, None] + h * np.arange(m)[None, :]
    xs = np.broadcast_to(np.stack([x0, x0 + w, x0 + w, x0], axis=1)[:, None, :],
                         (len(normal), m, 4))
    ys = np.stack([base, base + rise[:, None], base + rise[:, None] + h, base + h], axis=2)
    piles = CellLayer(np.stack([xs, ys], axis=-1).reshape(-1, 4, 2), 1.0, w, h,
                      np.zeros(len(normal) * m))
    per_pile = per_cell_measure(piles, E, iota).reshape(len(normal), m)
    table = np.zeros((len(g.strings), m))
    np.add.at(table, owner[normal], per_pile)
    pile_area = np.array([(b - a) * w * h for a, b in g.strings])
    return np.clip(table / pile_area[:, None], 0.0, 1.0)


def string_density_draws(g: Generation, E: SquareUnion, seq: MkSequence, draws: int,
                         rng: np.random.Generator, iota: Isometry = IDENTITY) -> np.ndarray:
    """X_S over ``draws`` independent redraws of the children of ``g``.

    With ``g`` fixed a redraw is one uniform pile index per string, so each draw reads
    its values off ``string_pile_table``.

    Returns:
        ``(draws, strings)`` array
    """
    if draws < 1:
        raise ValidationError("draws", "must be positive")
    table = string_pile_table(g, E, seq, iota)
    strings, m = table.shape
    picks = rng.integers(0, m, size=(draws, strings))
    return table[np.arange(strings)[None, :], picks]


@dataclass(frozen=True)
class ShiftReport:
    """Transfer from graph length in E to density of a small translate of E."""

    k: int
    length: float
    cells_meeting: int
    max_density: float
    best_direction: float
    cell_coverage: float
    directions: int

    @property
    def ratio(self) -> float:
        """Measured constant ``max_density / length``."""
        return self.max_density / self.length if self.length > 0 else math.inf

    @property
    def length_per_cells(self) -> float:
        """``length / (2**-k * cells_meeting)``; bounded when the transfer applies."""
        return self.length * 2.0**self.k / self.cells_meeting if self.cells_meeting else 0.0


def shift_transfer_check(w: OmegaSample, k: int, E: SquareUnion,
                         directions: int = 100) -> ShiftReport:
    """Compare the graph length in E with densities of ``E + 2**-k e_j`` in ``G_k``.

    ``cell_coverage`` is the smallest, over cells T meeting E, of the best direction's
    ``|T ∩ (E + 2**-k e_j)| / |T|``.
    """
    if not 0 <= k <= w.depth:
        raise ValidationError("k", f"must lie in [0, {w.depth}], got {k}")
    if directions < 1:
        raise ValidationError("directions", "must be positive")
    if E.is_empty:
        return ShiftReport(k, 0.0, 0, 0.0, 0.0, 0.0, directions)
    side = min(min(x1 - x0, y1 - y0) for x0, y0, x1, y1 in E.clipped_squares)
    if 2.0**-k >= side:
        logger.warning("shift_step_too_large", k=k, step=2.0**-k, side=side)

    g = w.gens[k]
    layer = CellLayer.from_generation(g)
    length = intersection_length(w, w.depth, E)
    meeting = np.unique(layer.tree.query(E.union, predicate="intersects"))

    angles = 2 * math.pi * np.arange(directions) / directions
    step = 2.0**-k
    shifts = [
        Isometry(IsometryKind.ROTATION, 0.0, Point(-step * math.cos(a), -step * math.sin(a)))
        for a in angles
    ]
    densities = measure_under(layer, E, shifts)
    best = int(np.argmax(densities))

    coverage = 0.0
    if len(meeting):
        cell_area = float(g.width * g.height)
        per_direction = np.stack([per_cell_measure(layer, E, s)[meeting] for s in shifts])
        coverage = float(np.min(per_direction.max(axis=0)) / cell_area)

    report = ShiftReport(k, length, int(len(meeting)), float(densities[best]),
                         float(angles[best]), coverage, directions)
    logger.info("shift_transfer_checked", k=k, length=length, cells=report.cells_meeting,
                max_density=report.max_density)
    return report


def describe_delta(requested: float, used: float) -> str | None:
    """Note for reports when a net resolution was clamped."""
    if math.isclose(requested, used):
        return None
    return Messages.DELTA_CLAMPED.format(requested=requested, used=used)

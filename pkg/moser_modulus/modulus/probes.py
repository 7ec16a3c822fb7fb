"""Curve families for the modulus experiments and the probes built on them.

The Moser probe measures the p-modulus of families of sampled worm graphs; the
corollary bound turns a cover meeting every curve in length delta into an
admissible density and compares its energy with the solved modulus.
"""

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
import shapely

from moser_modulus.config import Messages
from moser_modulus.densitylab.experiments import trial_seed
from moser_modulus.errors import CoveragePreconditionError, ValidationError
from moser_modulus.geometry import Isometry, IsometryKind, Point, SquareUnion
from moser_modulus.geometry.isometry import orthogonal_matrix
from moser_modulus.logging_config import get_logger
from moser_modulus.modulus.grid import CurveFamily, Grid, GridDensity, energy, is_admissible
from moser_modulus.modulus.solver import ModulusResult, solve_modulus
from moser_modulus.wormgraphs import graph_polyline, sample_omega

# Set up structured logger for this module
logger = get_logger(__name__)

SQUARE_CENTER = np.array([0.5, 0.5])
RANDOM_SHIFT = 0.1
DEFAULT_GRID = 128


class IsoMode(Enum):
    IDENTITY = "identity"
    RANDOM = "random"
    NET = "net"


def rectangle_modulus(w: float, h: float, p: float, scale: float = 1.0) -> float:
    """Continuum modulus ``h * w**(1-p)`` of the crossing family, after scaling by ``scale``."""
    return h * w ** (1.0 - p) * scale ** (2.0 - p)


def spanning_family(w: float, h: float, N: int) -> CurveFamily:
    """Horizontal lines through the cell centres of a ``w x h`` rectangle scaled into the square.

    The rectangle is scaled by ``1/max(w, h)`` and placed at the origin.
    """
    if w <= 0 or h <= 0:
        raise ValidationError("rectangle", "sides must be positive")
    scale = 1.0 / max(w, h)
    width, height = w * scale, h * scale
    rows = [i for i in range(N) if (i + 0.5) / N < height]
    curves = [[(0.0, (i + 0.5) / N), (width, (i + 0.5) / N)] for i in rows]
    return CurveFamily.of(curves, [{"row": i, "scale": scale} for i in rows])


def point_family(center: Sequence[float], count: int, rng: np.random.Generator,
                 arm: tuple[float, float] = (0.2, 0.4)) -> CurveFamily:
    """Bent two-segment polylines all passing through ``center``."""
    if count < 1:
        raise ValidationError("count", "must be positive")
    c = np.asarray(center, dtype=float)
    curves = []
    for _ in range(count):
        first = rng.uniform(0.0, 2 * math.pi)
        second = first + math.pi + rng.uniform(-math.pi / 4, math.pi / 4)
        a, b = rng.uniform(*arm, size=2)
        curves.append([c + a * np.array([math.cos(first), math.sin(first)]), c,
                       c + b * np.array([math.cos(second), math.sin(second)])])
    return CurveFamily.of(curves, [{"through": c.tolist()} for _ in curves])


@dataclass(frozen=True)
class TrendReport:
    """Solved values of one family on successively finer grids."""

    resolutions: tuple[int, ...]
    values: tuple[float, ...]
    dual_bounds: tuple[float, ...]

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.values, self.values[1:]))


def modulus_trend(fam: CurveFamily, p: float, resolutions: Sequence[int],
                  tol: Optional[float] = None) -> TrendReport:
    results = [solve_modulus(fam, Grid(n), p, tol) for n in resolutions]
    report = TrendReport(tuple(resolutions), tuple(r.value for r in results),
                         tuple(r.dual_bound for r in results))
    logger.info("modulus_trend", p=p, resolutions=list(resolutions), values=list(report.values))
    return report


def _about_center(kind: IsometryKind, angle: float, shift: np.ndarray) -> Isometry:
    """``x -> O(x - c) + c + shift`` for the centre c of the unit square."""
    o = orthogonal_matrix(kind, angle)
    v = SQUARE_CENTER - o.T @ (SQUARE_CENTER + shift)
    return Isometry(kind, angle, Point(float(v[0]), float(v[1])))


def square_symmetries() -> list[Isometry]:
    """The 8 isometries mapping the unit square onto itself."""
    return [_about_center(kind, k * math.pi / 2, np.zeros(2))
            for kind in (IsometryKind.ROTATION, IsometryKind.REFLECTION) for k in range(4)]


def _label(iota: Isometry, seed: int) -> dict[str, Any]:
    return {"seed": seed, "kind": iota.kind.value, "angle": iota.angle,
            "translation": list(iota.translation)}


def graph_family(graph_count: int, depth: int, seed: int,
                 iso_mode: IsoMode = IsoMode.IDENTITY,
                 executor: Optional[Executor] = None) -> CurveFamily:
    """Polylines of ``graph_count`` sampled graphs placed according to ``iso_mode``.

    Graph i uses ``trial_seed(seed, i)``, so the first graphs of a larger family are
    the graphs of a smaller one.
    """
    if graph_count < 1:
        raise ValidationError("graphs", "graph_count must be positive")

    def one_graph(i: int) -> tuple[list[np.ndarray], list[dict[str, Any]]]:
        s = trial_seed(seed, i)
        points = np.asarray(graph_polyline(sample_omega(depth, s), depth), dtype=float)
        if iso_mode is IsoMode.IDENTITY:
            isometries = [_about_center(IsometryKind.ROTATION, 0.0, np.zeros(2))]
        elif iso_mode is IsoMode.RANDOM:
            rng = np.random.default_rng(np.random.SeedSequence(s))
            isometries = [_about_center(IsometryKind.ROTATION, float(rng.uniform(0, 2 * math.pi)),
                                        rng.uniform(-RANDOM_SHIFT, RANDOM_SHIFT, size=2))]
        else:
            isometries = square_symmetries()
        return ([iota.apply_many(points) for iota in isometries],
                [_label(iota, s) for iota in isometries])

    indices = range(graph_count)
    parts = list(executor.map(one_graph, indices)) if executor else [one_graph(i) for i in indices]
    curves = [c for cs, _ in parts for c in cs]
    labels = [lab for _, ls in parts for lab in ls]
    return CurveFamily(tuple(curves), tuple(labels))


@dataclass
class ProbeReport:
    """Modulus of a family of sampled graphs, with its refinement check."""

    p: float
    graph_count: int
    depth: int
    iso_mode: IsoMode
    result: ModulusResult
    refined: Optional[ModulusResult] = None
    notes: list[str] = field(default_factory=list)

    @property
    def refinement_ratio(self) -> Optional[float]:
        if self.refined is None or self.result.value == 0:
            return None
        return self.refined.value / self.result.value

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "graphs": self.graph_count,
            "depth": self.depth,
            "iso_mode": self.iso_mode.value,
            "N": self.result.grid.resolution,
            "value": self.result.value,
            "dual_bound": self.result.dual_bound,
            "refined_N": self.refined.grid.resolution if self.refined else None,
            "refined_value": self.refined.value if self.refined else None,
            "refinement_ratio": self.refinement_ratio,
            "notes": self.notes,
        }


def moser_probe(p: float, graph_count: int, depth: int, grid: Grid, seed: int,
                iso_mode: IsoMode | str = IsoMode.IDENTITY, tol: Optional[float] = None,
                refine: bool = True, executor: Optional[Executor] = None) -> ProbeReport:
    """Solve the p-modulus of sampled worm graphs at N and, optionally, 2N.

    Args:
        p: Exponent; values ``p <= 3`` run but are flagged
        graph_count: Number of sampled graphs
        depth: Construction depth of every graph
        grid: Base grid; the refinement uses twice its resolution
        seed: Base seed of the graph samples
        iso_mode: identity, random (rotation about the centre plus a small shift) or
            net (the 8 symmetries of the square)
        tol: Solver gap tolerance
        refine: Also solve on the refined grid
        executor: Optional pool for sampling the graphs
    """
    mode = IsoMode(iso_mode)
    notes = []
    if p <= 3:
        notes.append(Messages.OUTSIDE_THEOREM_RANGE.format(p=p))
    if mode is IsoMode.NET:
        notes.append(Messages.EXPLORATORY_NET)
    fam = graph_family(graph_count, depth, seed, mode, executor)
    result = solve_modulus(fam, grid, p, tol)
    refined = solve_modulus(fam, grid.refined(2), p, tol) if refine else None
    report = ProbeReport(p, graph_count, depth, mode, result, refined, notes)
    logger.info("moser_probe_done", p=p, graphs=graph_count, depth=depth, mode=mode.value,
                value=result.value, refined=refined.value if refined else None)
    return report


@dataclass(frozen=True)
class CorollaryReport:
    """The arithmetic of turning a cover into an admissible density."""

    delta: float
    p: float
    cover_area: float
    support_area: float
    energy: float
    admissible: bool
    worst_curve: int
    worst_integral: float
    modulus: Optional[float] = None

    @property
    def identity_holds(self) -> bool:
        """``support_area == delta**p * energy``."""
        return math.isclose(self.support_area, self.delta**self.p * self.energy,
                            rel_tol=1e-9, abs_tol=1e-15)

    @property
    def lower_bound(self) -> Optional[float]:
        """``mod_p * delta**p / 2``, the guaranteed size of the set behind the cover."""
        return None if self.modulus is None else self.modulus * self.delta**self.p / 2

    @property
    def bound_holds(self) -> Optional[bool]:
        if self.modulus is None:
            return None
        return self.support_area >= self.modulus * self.delta**self.p * (1 - 1e-6)


def corollary_bound(delta: float, p: float, cover: SquareUnion, fam: CurveFamily,
                    grid: Optional[Grid] = None, solve: bool = False,
                    tol: Optional[float] = None) -> CorollaryReport:
    """Check coverage, build ``rho = indicator(cover) / delta`` and report its energy.

    Raises:
        ValidationError: If delta is outside (0, 1] or p <= 1
        CoveragePreconditionError: For the first curve meeting the cover in length
            below delta
    """
    if not 0 < delta <= 1:
        raise ValidationError("delta", f"must lie in (0, 1], got {delta}")
    if not p > 1:
        raise ValidationError("p", f"must exceed 1, got {p}")
    grid = grid or Grid(DEFAULT_GRID)
    union = cover.union
    for i, curve in enumerate(fam.curves):
        covered = float(shapely.length(shapely.intersection(shapely.LineString(curve), union)))
        if covered < delta * (1 - 1e-9):
            raise CoveragePreconditionError(i, covered, delta)

    boxes = shapely.box(*grid.cell_boxes().T)
    support = shapely.area(shapely.intersection(boxes, union)) > 1e-15 * grid.cell_area
    rho = GridDensity.from_flat(grid, support / delta)
    admissible, worst, integral = is_admissible(rho, fam, slack=1e-9)
    modulus = solve_modulus(fam, grid, p, tol).value if solve else None
    report = CorollaryReport(delta, p, cover.area, float(support.sum()) * grid.cell_area,
                             energy(rho, p), admissible, worst, integral, modulus)
    logger.info("corollary_bound", delta=delta, p=p, cover_area=report.cover_area,
                energy=report.energy, admissible=admissible)
    return report

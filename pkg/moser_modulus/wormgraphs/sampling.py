"""Sampling branches of the construction and evaluating the resulting graphs."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from moser_modulus.config import Config
from moser_modulus.errors import PreconditionError, ValidationError
from moser_modulus.geometry.isometry import Point
from moser_modulus.logging_config import get_logger
from moser_modulus.wormgraphs.cells import Generation, root
from moser_modulus.wormgraphs.construction import PileChooser, SeededPiles, child
from moser_modulus.wormgraphs.sequence import MkSequence, build_sequence

# Set up structured logger for this module
logger = get_logger(__name__)

Real = Fraction | float | int


@dataclass(frozen=True)
class OmegaSample:
    """Generations 0..K of one random branch, with the seed that produced it."""

    seq: MkSequence
    gens: tuple[Generation, ...]
    seed: int

    @property
    def depth(self) -> int:
        return len(self.gens) - 1

    @property
    def choices(self) -> tuple[tuple[int, ...], ...]:
        """Pile index per string, for each step k -> k+1."""
        return tuple(g.choices for g in self.gens[1:])


def sample_omega(K: int, seed: int, chooser: Optional[PileChooser] = None) -> OmegaSample:
    """Iterate ``child`` from the root up to depth K.

    Args:
        K: Depth, 0 <= K <= Config.MAX_DEPTH
        seed: 64-bit seed; with the default chooser it determines the sample bit for bit
        chooser: Optional pile source replacing the seeded one (test stubs)

    Returns:
        The sample with ``K + 1`` generations
    """
    if not isinstance(K, int) or not 0 <= K <= Config.MAX_DEPTH:
        raise ValidationError("depth", f"K must lie in [0, {Config.MAX_DEPTH}], got {K}")
    seq = build_sequence(K) if K >= 1 else MkSequence.trivial()
    piles = chooser if chooser is not None else SeededPiles(seed)
    gens = [root()]
    for _ in range(K):
        gens.append(child(gens[-1], seq, piles))
    logger.debug("omega_sampled", depth=K, seed=seed)
    return OmegaSample(seq, tuple(gens), seed)


def first_difference(a: OmegaSample, b: OmegaSample) -> Optional[int]:
    """First generation at which two samples differ, or None."""
    for k, (ga, gb) in enumerate(zip(a.gens, b.gens)):
        if ga.cells != gb.cells:
            return k
    return None


def _cell_index(x: Fraction, k: int) -> int:
    scaled = x * 2 ** k
    index = scaled.numerator // scaled.denominator
    if scaled.denominator == 1 and index > 0:
        index -= 1
    return min(index, 2 ** k - 1)


def eval_f(w: OmegaSample, x: Real) -> Fraction:
    """Fiber midpoint of the depth-K cell over ``x`` (left cell on shared sides)."""
    if w.depth < 1:
        raise PreconditionError("eval_f needs a sample of depth at least 1")
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise ValidationError("x", f"x must lie in [0, 1], got {x}")
    cell = w.gens[-1].cells[_cell_index(x, w.depth)]
    return cell.fiber_midpoint(x)


def eval_f_many(w: OmegaSample, xs: np.ndarray) -> np.ndarray:
    """Float version of ``eval_f`` over an array of abscissae."""
    if w.depth < 1:
        raise PreconditionError("eval_f needs a sample of depth at least 1")
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < 0) | (xs > 1)):
        raise ValidationError("x", "all abscissae must lie in [0, 1]")
    g = w.gens[-1]
    count = len(g.cells)
    scaled = xs * count
    index = np.floor(scaled).astype(int)
    index = np.where((scaled == index) & (index > 0), index - 1, index)
    index = np.minimum(index, count - 1)
    x0 = np.array([float(c.x0) for c in g.cells])
    y0 = np.array([float(c.y0) for c in g.cells])
    slope = np.array([float(c.slope) for c in g.cells])
    return y0[index] + slope[index] * (xs - x0[index]) + float(g.height) / 2


def graph_polyline(w: OmegaSample, k: int) -> list[Point]:
    """Fiber midpoints over the ``2^k + 1`` cell boundaries of generation k."""
    if not 0 <= k <= w.depth:
        raise ValidationError("k", f"k must lie in [0, {w.depth}], got {k}")
    cells = w.gens[k].cells
    points = [Point(float(c.x0), float(c.fiber_midpoint(c.x0))) for c in cells]
    last = cells[-1]
    points.append(Point(float(last.x1), float(last.fiber_midpoint(last.x1))))
    return points


def slope_sup(w: OmegaSample) -> Fraction:
    """Largest ``|slope|`` over every cell of every generation."""
    return max(abs(c.slope) for g in w.gens for c in g.cells)

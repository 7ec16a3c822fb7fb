"""One subdivision step of the random parallelogram construction."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Protocol, Sequence

import numpy as np

from moser_modulus.errors import DepthExhaustedError, StreamExhaustedError, ValidationError
from moser_modulus.logging_config import generations_built, get_logger
from moser_modulus.wormgraphs.cells import CellFlag, Generation, Parallelogram, designation
from moser_modulus.wormgraphs.sequence import MkSequence

# Set up structured logger for this module
logger = get_logger(__name__)


class PileChooser(Protocol):
    """Source of pile indices ``j in {1..m}``, one per (generation, string)."""

    def choose(self, k: int, string_index: int, m: int) -> int: ...


@dataclass(frozen=True)
class SeededPiles:
    """Uniform choices from an independent substream per (seed, k, string index)."""

    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed", f"seed must be a 64-bit nonnegative integer, got {self.seed}")

    def choose(self, k: int, string_index: int, m: int) -> int:
        stream = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(k, string_index)))
        return int(stream.integers(1, m + 1))


@dataclass(frozen=True)
class ConstantPiles:
    """Always the same pile (clipped to the available range)."""

    j: int = 1

    def choose(self, k: int, string_index: int, m: int) -> int:
        return max(1, min(self.j, m))


@dataclass(frozen=True)
class AlternatingExtremes:
    """Top pile on even strings, bottom pile on odd ones: steepest connectors."""

    def choose(self, k: int, string_index: int, m: int) -> int:
        return m if string_index % 2 == 0 else 1


@dataclass
class ScriptedPiles:
    """Replays a fixed list of choices; running out is an error."""

    script: Sequence[int]
    _cursor: Iterator[int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._cursor = iter(self.script)

    def choose(self, k: int, string_index: int, m: int) -> int:
        try:
            j = next(self._cursor)
        except StopIteration:
            raise StreamExhaustedError(
                f"scripted piles exhausted at generation {k}, string {string_index}") from None
        if not 1 <= j <= m:
            raise ValidationError("piles", f"scripted pile {j} outside 1..{m}")
        return j


def _split(x0: Fraction, width: Fraction, y0: Fraction, slope: Fraction, height: Fraction,
           gen: int, index: int) -> tuple[Parallelogram, Parallelogram]:
    half = width / 2
    left = Parallelogram(gen, index, x0, half, y0, slope, height)
    right = Parallelogram(gen, index + 1, x0 + half, half, y0 + slope * half, slope, height)
    return left, right


def child(g: Generation, seq: MkSequence, rng: PileChooser) -> Generation:
    """Build generation k+1 inside generation k.

    Each string draws one pile index; its cells keep that pile and halve it. Each
    exceptional cell gets the connector joining the chosen piles of its neighbours,
    which fixes its slope. The new cells are then relabelled into strings.

    Raises:
        DepthExhaustedError: If ``g.gen`` already equals ``seq.max_depth``
        StreamExhaustedError: If a scripted chooser runs out
    """
    k = g.gen
    if k >= seq.max_depth:
        raise DepthExhaustedError(f"generation {k} is the last one for depth {seq.max_depth}")
    m = seq.m[k + 1]
    pile_height = Fraction(1, seq.n[k + 1])
    choices = tuple(rng.choose(k, s, m) for s in range(len(g.strings)))

    new_cells: list[Parallelogram] = []
    for i, cell in enumerate(g.cells):
        if cell.flag is CellFlag.NORMAL:
            j = choices[g.string_of[i]]
            y0 = cell.y0 + (j - 1) * pile_height
            slope = cell.slope
        else:
            j_left = choices[g.string_of[i - 1]]
            j_right = choices[g.string_of[i + 1]]
            y0 = cell.y0 + (j_left - 1) * pile_height
            y_right = cell.y1 + (j_right - 1) * pile_height
            slope = (y_right - y0) / cell.width
        new_cells.extend(_split(cell.x0, cell.width, y0, slope, pile_height, k + 1, 2 * i))

    strings, exceptional, deficit = designation(k + 1)
    marked = set(exceptional)
    cells = tuple(
        Parallelogram(c.gen, c.index, c.x0, c.width, c.y0, c.slope, c.height,
                      CellFlag.EXCEPTIONAL if c.index in marked else CellFlag.NORMAL)
        for c in new_cells
    )
    generations_built.inc()
    logger.debug("generation_built", gen=k + 1, cells=len(cells), strings=len(strings),
                 exceptional=len(exceptional))
    return Generation(k + 1, cells, strings, exceptional, choices, deficit)

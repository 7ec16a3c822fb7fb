"""Exact parallelogram cells and the normal/exceptional layout of a generation."""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np

Interval = tuple[int, int]


class CellFlag(Enum):
    """Role of a cell for the next subdivision."""

    NORMAL = "normal"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True, slots=True)
class Parallelogram:
    """Cell with vertical sides: bottom edge ``y = y0 + slope * (x - x0)`` over
    ``[x0, x0 + width]``, top edge ``height`` above it."""

    gen: int
    index: int
    x0: Fraction
    width: Fraction
    y0: Fraction
    slope: Fraction
    height: Fraction
    flag: CellFlag = CellFlag.NORMAL

    @property
    def x1(self) -> Fraction:
        return self.x0 + self.width

    @property
    def y1(self) -> Fraction:
        """Bottom height at the right side."""
        return self.y0 + self.slope * self.width

    @property
    def area(self) -> Fraction:
        return self.width * self.height

    def bottom_at(self, x: Fraction) -> Fraction:
        return self.y0 + self.slope * (x - self.x0)

    def vertices(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Counterclockwise: bottom-left, bottom-right, top-right, top-left."""
        return ((self.x0, self.y0), (self.x1, self.y1),
                (self.x1, self.y1 + self.height), (self.x0, self.y0 + self.height))

    def contains_point(self, x: Fraction, y: Fraction) -> bool:
        if not self.x0 <= x <= self.x1:
            return False
        bottom = self.bottom_at(x)
        return bottom <= y <= bottom + self.height

    def contains(self, other: "Parallelogram") -> bool:
        """Exact containment; both cells are convex so vertices suffice."""
        return all(self.contains_point(x, y) for x, y in other.vertices())

    def fiber_midpoint(self, x: Fraction) -> Fraction:
        return self.bottom_at(x) + self.height / 2


def nearest_string_length(k: int) -> int:
    """``max(1, round(2^(k/2)))`` computed in integers (halves round up)."""
    cells = 2 ** k
    r = math.isqrt(cells)
    if (2 * r + 1) ** 2 <= 4 * cells:
        r += 1
    return max(1, r)


def designation(k: int) -> tuple[tuple[Interval, ...], tuple[int, ...], int]:
    """Layout of the ``2^k`` cells of generation k into strings and exceptional cells.

    All strings but the last have ``s = nearest_string_length(k)`` cells and are each
    followed by one exceptional cell; the last string takes the remainder so the
    final cell is normal.

    Returns:
        ``(strings, exceptional, deficit)`` with strings as half-open index ranges and
        ``deficit`` the last string's length minus ``s``
    """
    cells = 2 ** k
    s = nearest_string_length(k)
    breaks = min((2 * cells - s + 1) // (2 * s + 2), (cells - 1) // (s + 1))
    strings: list[Interval] = []
    exceptional: list[int] = []
    start = 0
    for _ in range(breaks):
        strings.append((start, start + s))
        exceptional.append(start + s)
        start += s + 1
    strings.append((start, cells))
    return tuple(strings), tuple(exceptional), (cells - start) - s


@dataclass(frozen=True)
class Generation:
    """The ordered cells of generation k with their string/exceptional partition.

    Features:
    - Exact rational geometry of every cell
    - Strings as half-open index ranges, exceptional cells as indices
    - Pile choices that produced this generation from its parent
    - Float vertex arrays for the measurement layers
    """

    gen: int
    cells: tuple[Parallelogram, ...]
    strings: tuple[Interval, ...]
    exceptional: tuple[int, ...]
    choices: tuple[int, ...] = ()
    deficit: int = 0
    string_of: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        owner = [-1] * len(self.cells)
        for s, (a, b) in enumerate(self.strings):
            for i in range(a, b):
                owner[i] = s
        object.__setattr__(self, "string_of", tuple(owner))

    @property
    def total_area(self) -> Fraction:
        return sum((c.area for c in self.cells), Fraction(0))

    @property
    def width(self) -> Fraction:
        return self.cells[0].width

    @property
    def height(self) -> Fraction:
        return self.cells[0].height

    def string_lengths(self) -> list[int]:
        return [b - a for a, b in self.strings]

    @cached_property
    def vertex_array(self) -> np.ndarray:
        """``(2^k, 4, 2)`` float vertices, counterclockwise."""
        x0 = np.array([float(c.x0) for c in self.cells])
        w = float(self.width)
        h = float(self.height)
        y0 = np.array([float(c.y0) for c in self.cells])
        y1 = np.array([float(c.y1) for c in self.cells])
        xs = np.stack([x0, x0 + w, x0 + w, x0], axis=1)
        ys = np.stack([y0, y1, y1 + h, y0 + h], axis=1)
        return np.stack([xs, ys], axis=-1)


def root() -> Generation:
    """Generation 0: the unit square, one normal string."""
    cell = Parallelogram(0, 0, Fraction(0), Fraction(1), Fraction(0), Fraction(0),
                         Fraction(1), CellFlag.NORMAL)
    return Generation(0, (cell,), ((0, 1),), ())

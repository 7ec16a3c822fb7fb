"""Exact audit of the structural properties of a generation."""

from fractions import Fraction
from typing import Optional

from moser_modulus.wormgraphs.cells import CellFlag, Generation
from moser_modulus.wormgraphs.sequence import MkSequence

SLOPE_BOUND = Fraction(1, 3)


def audit_generation(g: Generation, seq: MkSequence,
                     parent: Optional[Generation] = None) -> list[str]:
    """List every violated property of ``g``; an empty list means the generation is sound.

    Checks containment in the unit square, vertical sides, cell sizes and areas,
    shared sides between neighbours, the slope bound, the boundary rule, the spacing of
    exceptional cells, and (given ``parent``) nesting and the connector slope rule.
    """
    k = g.gen
    width, height = Fraction(1, 2 ** k), Fraction(1, seq.n[k])
    problems: list[str] = []
    if len(g.cells) != 2 ** k:
        problems.append(f"generation {k} has {len(g.cells)} cells, expected {2 ** k}")
    for i, cell in enumerate(g.cells):
        if cell.width != width or cell.height != height:
            problems.append(f"cell {i}: size {cell.width} x {cell.height}")
        if cell.x0 != i * width:
            problems.append(f"cell {i}: starts at x = {cell.x0}")
        if not all(0 <= x <= 1 and 0 <= y <= 1 for x, y in cell.vertices()):
            problems.append(f"cell {i}: leaves the unit square")
        if abs(cell.slope) >= SLOPE_BOUND:
            problems.append(f"cell {i}: slope {cell.slope} >= 1/3")
    for i, (left, right) in enumerate(zip(g.cells, g.cells[1:])):
        if left.x1 != right.x0 or left.y1 != right.y0 or left.height != right.height:
            problems.append(f"cells {i} and {i + 1} do not share a vertical side")
    if g.total_area != height:
        problems.append(f"total area {g.total_area} != 1/n_{k}")
    if g.cells[0].flag is not CellFlag.NORMAL or g.cells[-1].flag is not CellFlag.NORMAL:
        problems.append("first or last cell is exceptional")
    flagged = {i for i, c in enumerate(g.cells) if c.flag is CellFlag.EXCEPTIONAL}
    if flagged != set(g.exceptional):
        problems.append("cell flags disagree with the exceptional list")
    if k >= 4:
        lo, hi = Fraction(2 ** k, 2 ** 4), Fraction(2 ** k) * 16
        # bounds 2^(k/2 -+ 2) compared through squares
        if not lo <= Fraction(len(g.exceptional)) ** 2 <= hi:
            problems.append(f"{len(g.exceptional)} exceptional cells outside 2^(k/2 -+ 2)")
        for a, b in g.strings:
            if not lo <= Fraction(b - a) ** 2 <= hi:
                problems.append(f"string [{a}, {b}) length outside 2^(k/2 -+ 2)")
    if parent is not None:
        problems.extend(_audit_nesting(g, parent, seq))
    return problems


def _audit_nesting(g: Generation, parent: Generation, seq: MkSequence) -> list[str]:
    problems = []
    k = parent.gen
    scale = seq.n[k + 1] * parent.width
    m = seq.m[k + 1]
    for i, outer in enumerate(parent.cells):
        for inner in g.cells[2 * i:2 * i + 2]:
            if not outer.contains(inner):
                problems.append(f"child {inner.index} is not inside parent {i}")
            step = (inner.slope - outer.slope) * scale
            if outer.flag is CellFlag.NORMAL and step != 0:
                problems.append(f"child {inner.index} of normal cell {i} changed slope")
            if step.denominator != 1 or abs(step) > m - 1:
                problems.append(f"child {inner.index}: slope step {step} is not an integer in "
                                f"[-(m-1), m-1]")
    return problems

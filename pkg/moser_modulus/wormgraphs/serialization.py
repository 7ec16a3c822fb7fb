"""JSON and SVG emission for samples, generations and quadtree sets."""

from fractions import Fraction
from pathlib import Path
from typing import Any

import svgwrite

from moser_modulus.errors import ArtifactIOError
from moser_modulus.logging_config import get_logger
from moser_modulus.wormgraphs.cells import CellFlag, Generation, Parallelogram
from moser_modulus.wormgraphs.quadtree import QuadtreeSet
from moser_modulus.wormgraphs.sampling import OmegaSample
from moser_modulus.wormgraphs.sequence import MkSequence

# Set up structured logger for this module
logger = get_logger(__name__)

SCHEMA = "moser-modulus/omega/1"
NORMAL_FILL = "#4a78b5"
EXCEPTIONAL_FILL = "#d1495b"


def _q(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _unq(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den or 1))


def generation_to_json(g: Generation) -> dict[str, Any]:
    return {
        "gen": g.gen,
        "choices": list(g.choices),
        "strings": [list(s) for s in g.strings],
        "exceptional": list(g.exceptional),
        "deficit": g.deficit,
        "cells": [
            {"x0": _q(c.x0), "width": _q(c.width), "y0": _q(c.y0), "slope": _q(c.slope),
             "height": _q(c.height), "flag": c.flag.value}
            for c in g.cells
        ],
    }


def generation_from_json(data: dict[str, Any]) -> Generation:
    k = int(data["gen"])
    cells = tuple(
        Parallelogram(k, i, _unq(c["x0"]), _unq(c["width"]), _unq(c["y0"]), _unq(c["slope"]),
                      _unq(c["height"]), CellFlag(c["flag"]))
        for i, c in enumerate(data["cells"])
    )
    return Generation(k, cells, tuple((a, b) for a, b in data["strings"]),
                      tuple(data["exceptional"]), tuple(data["choices"]), int(data["deficit"]))


def omega_to_json(w: OmegaSample) -> dict[str, Any]:
    """Document with every rational written as a ``"num/den"`` string."""
    return {
        "schema": SCHEMA,
        "seed": w.seed,
        "max_depth": w.seq.max_depth,
        "m": list(w.seq.m),
        "n": list(w.seq.n),
        "generations": [generation_to_json(g) for g in w.gens],
    }


def omega_from_json(data: dict[str, Any]) -> OmegaSample:
    try:
        if data.get("schema") != SCHEMA:
            raise ArtifactIOError(f"unknown sample schema {data.get('schema')!r}")
        seq = MkSequence(int(data["max_depth"]), tuple(data["m"]), tuple(data["n"]))
        gens = tuple(generation_from_json(g) for g in data["generations"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"malformed sample document: {e}") from e
    return OmegaSample(seq, gens, int(data["seed"]))


def _drawing(path: Path, size_px: int) -> svgwrite.Drawing:
    dwg = svgwrite.Drawing(str(path), profile="tiny", size=(f"{size_px}px", f"{size_px}px"))
    # y axis flipped so the unit square reads bottom-up
    dwg.attribs["viewBox"] = "-0.02 -1.02 1.04 1.04"
    return dwg


def _flip(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    return [(x, -y) for x, y in points]


def generation_svg(g: Generation, path: Path, size_px: int = 800,
                   stretch: float = 1.0) -> Path:
    """Draw one generation: normal cells blue, exceptional cells red.

    ``stretch`` scales cell heights about their fiber midpoints so thin generations stay
    visible; it is 1 for a faithful drawing.
    """
    dwg = _drawing(path, size_px)
    dwg.add(dwg.polygon(points=_flip([(0, 0), (1, 0), (1, 1), (0, 1)]), fill="none",
                        stroke="#111", stroke_width=0.002))
    groups = {flag: dwg.g(id=flag.value, fill=fill, stroke="none", opacity=0.85)
              for flag, fill in ((CellFlag.NORMAL, NORMAL_FILL),
                                 (CellFlag.EXCEPTIONAL, EXCEPTIONAL_FILL))}
    for cell, quad in zip(g.cells, g.vertex_array):
        if stretch != 1.0:
            mid = (quad[0] + quad[3]) / 2, (quad[1] + quad[2]) / 2
            quad = quad.copy()
            quad[[0, 3]] = mid[0] + (quad[[0, 3]] - mid[0]) * stretch
            quad[[1, 2]] = mid[1] + (quad[[1, 2]] - mid[1]) * stretch
        groups[cell.flag].add(dwg.polygon(points=_flip([(float(x), float(y)) for x, y in quad])))
    for group in groups.values():
        dwg.add(group)
    return _save(dwg, path)


def quadtree_svg(qt: QuadtreeSet, path: Path, level: int | None = None,
                 size_px: int = 800) -> Path:
    level = qt.depth if level is None else level
    dwg = _drawing(path, size_px)
    group = dwg.g(id=f"level-{level}", fill=NORMAL_FILL, stroke="none")
    for quad in qt.vertex_array(level):
        group.add(dwg.polygon(points=_flip([(float(x), float(y)) for x, y in quad])))
    dwg.add(group)
    return _save(dwg, path)


def _save(dwg: svgwrite.Drawing, path: Path) -> Path:
    try:
        dwg.save(pretty=False)
    except OSError as e:
        logger.exception("svg_write_failed", path=str(path))
        raise ArtifactIOError(f"cannot write {path}: {e}") from e
    return path

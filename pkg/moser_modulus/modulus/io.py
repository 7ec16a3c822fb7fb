"""Instance and result files, the solver trace, and density heatmaps."""

import csv
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np
import svgwrite

from moser_modulus.errors import ArtifactIOError
from moser_modulus.logging_config import get_logger
from moser_modulus.modulus.grid import CurveFamily, Grid, GridDensity
from moser_modulus.modulus.solver import ModulusResult

# Set up structured logger for this module
logger = get_logger(__name__)

INSTANCE_SCHEMA = "moser-modulus/instance/1"
RESULT_SCHEMA = "moser-modulus/result/1"
LOW_COLOR = np.array([247, 251, 255])
HIGH_COLOR = np.array([8, 48, 107])
CURVE_COLOR = "#d1495b"


def instance_to_json(fam: CurveFamily, grid: Grid, p: float) -> dict[str, Any]:
    return {
        "schema": INSTANCE_SCHEMA,
        "N": grid.resolution,
        "p": p,
        "curves": [c.tolist() for c in fam.curves],
        "labels": list(fam.labels),
    }


def instance_from_json(data: dict[str, Any]) -> tuple[CurveFamily, Grid, float]:
    """Parse an instance document into ``(family, grid, p)``.

    Raises:
        ArtifactIOError: On a wrong schema or missing keys
    """
    try:
        if data.get("schema", INSTANCE_SCHEMA) != INSTANCE_SCHEMA:
            raise ArtifactIOError(f"unknown instance schema {data.get('schema')!r}")
        fam = CurveFamily.of(data["curves"], data.get("labels") or None)
        return fam, Grid(int(data["N"])), float(data["p"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"malformed instance document: {e}") from e


def read_json(path: Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactIOError(f"cannot read {path}: {e}") from e


def write_json(path: Path, data: dict[str, Any]) -> Path:
    try:
        Path(path).write_text(json.dumps(data, indent=2, default=float))
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}") from e
    return Path(path)


def read_instance(path: Path) -> tuple[CurveFamily, Grid, float]:
    return instance_from_json(read_json(path))


def write_instance(path: Path, fam: CurveFamily, grid: Grid, p: float) -> Path:
    return write_json(path, instance_to_json(fam, grid, p))


def result_to_json(result: ModulusResult) -> dict[str, Any]:
    return {
        "schema": RESULT_SCHEMA,
        "N": result.grid.resolution,
        "p": result.p,
        "threshold": result.threshold,
        "value": result.value,
        "dual_bound": result.dual_bound,
        "tolerance": result.tolerance,
        "iterations": result.iterations,
        "rounds": result.rounds,
        "active": list(result.active),
        "density": result.density.flat.tolist(),
    }


def result_from_json(data: dict[str, Any]) -> ModulusResult:
    try:
        if data.get("schema") != RESULT_SCHEMA:
            raise ArtifactIOError(f"unknown result schema {data.get('schema')!r}")
        grid = Grid(int(data["N"]))
        return ModulusResult(
            value=float(data["value"]),
            density=GridDensity.from_flat(grid, data["density"]),
            dual_bound=float(data["dual_bound"]),
            iterations=int(data["iterations"]),
            tolerance=float(data["tolerance"]),
            p=float(data["p"]),
            threshold=float(data.get("threshold", 1.0)),
            rounds=int(data.get("rounds", 0)),
            active=tuple(data.get("active", ())),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"malformed result document: {e}") from e


def write_result(path: Path, result: ModulusResult) -> Path:
    return write_json(path, result_to_json(result))


def write_trace_csv(path: Path, result: ModulusResult) -> Path:
    """One line per constraint-generation round."""
    columns = ["round", "active", "iterations", "value", "dual_bound", "gap", "violated"]
    try:
        with Path(path).open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=columns)
            writer.writeheader()
            writer.writerows(result.trace)
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}") from e
    return Path(path)


def _color(t: float) -> str:
    r, g, b = (LOW_COLOR + (HIGH_COLOR - LOW_COLOR) * t).round().astype(int)
    return f"rgb({r},{g},{b})"


def heatmap_svg(rho: GridDensity, path: Path, fam: Optional[CurveFamily] = None,
                size_px: int = 800) -> Path:
    """Cells shaded by ``rho / max(rho)`` with the curves drawn on top."""
    n = rho.grid.resolution
    dwg = svgwrite.Drawing(str(path), profile="tiny", size=(f"{size_px}px", f"{size_px}px"))
    # y axis flipped so the unit square reads bottom-up
    dwg.attribs["viewBox"] = "-0.02 -1.02 1.04 1.04"
    top = float(rho.values.max()) or 1.0
    cells = dwg.g(id="density", stroke="none")
    width = 1.0 / n
    for ix, iy in zip(*np.nonzero(rho.values)):
        cells.add(dwg.rect(insert=(ix * width, -(iy + 1) * width), size=(width, width),
                           fill=_color(rho.values[ix, iy] / top)))
    dwg.add(cells)
    if fam is not None:
        lines = dwg.g(id="curves", fill="none", stroke=CURVE_COLOR, stroke_width=0.002)
        for curve in fam.curves:
            lines.add(dwg.polyline(points=[(float(x), -float(y)) for x, y in curve]))
        dwg.add(lines)
    try:
        dwg.save(pretty=False)
    except OSError as e:
        logger.exception("svg_write_failed", path=str(path))
        raise ArtifactIOError(f"cannot write {path}: {e}") from e
    return Path(path)

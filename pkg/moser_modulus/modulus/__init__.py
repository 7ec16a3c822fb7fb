"""Discrete p-modulus of polyline families and the probes built on it."""

from moser_modulus.modulus.grid import (
    CurveFamily,
    Grid,
    GridDensity,
    cell_lengths,
    energy,
    is_admissible,
    line_integral,
)
from moser_modulus.modulus.levels import LevelSets, WitnessReport, level_sets, witness_check
from moser_modulus.modulus.probes import (
    CorollaryReport,
    IsoMode,
    ProbeReport,
    TrendReport,
    corollary_bound,
    graph_family,
    modulus_trend,
    moser_probe,
    point_family,
    rectangle_modulus,
    spanning_family,
    square_symmetries,
)
from moser_modulus.modulus.solver import ModulusResult, single_curve_modulus, solve_modulus

__all__ = [
    "CorollaryReport",
    "CurveFamily",
    "Grid",
    "GridDensity",
    "IsoMode",
    "LevelSets",
    "ModulusResult",
    "ProbeReport",
    "TrendReport",
    "WitnessReport",
    "cell_lengths",
    "corollary_bound",
    "energy",
    "graph_family",
    "is_admissible",
    "level_sets",
    "line_integral",
    "modulus_trend",
    "moser_probe",
    "point_family",
    "rectangle_modulus",
    "single_curve_modulus",
    "solve_modulus",
    "spanning_family",
    "square_symmetries",
    "witness_check",
]

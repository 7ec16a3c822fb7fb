"""Random 1-Lipschitz graphs from nested parallelogram generations."""

from moser_modulus.wormgraphs.audit import audit_generation
from moser_modulus.wormgraphs.cells import CellFlag, Generation, Parallelogram, designation, root
from moser_modulus.wormgraphs.construction import (
    AlternatingExtremes,
    ConstantPiles,
    PileChooser,
    ScriptedPiles,
    SeededPiles,
    child,
)
from moser_modulus.wormgraphs.quadtree import (
    ADProfile,
    QuadtreeSet,
    ad_regularity_profile,
    quadtree_sample,
)
from moser_modulus.wormgraphs.sampling import (
    OmegaSample,
    eval_f,
    eval_f_many,
    first_difference,
    graph_polyline,
    sample_omega,
    slope_sup,
)
from moser_modulus.wormgraphs.sequence import MkSequence, build_sequence

__all__ = [
    "ADProfile",
    "AlternatingExtremes",
    "CellFlag",
    "ConstantPiles",
    "Generation",
    "MkSequence",
    "OmegaSample",
    "Parallelogram",
    "PileChooser",
    "QuadtreeSet",
    "ScriptedPiles",
    "SeededPiles",
    "ad_regularity_profile",
    "audit_generation",
    "build_sequence",
    "child",
    "designation",
    "eval_f",
    "eval_f_many",
    "first_difference",
    "graph_polyline",
    "quadtree_sample",
    "root",
    "sample_omega",
    "slope_sup",
]

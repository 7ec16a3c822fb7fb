"""Planar primitives: isometries, polygon clipping, square unions and isometry nets."""

from moser_modulus.geometry.isometry import (
    IDENTITY,
    Isometry,
    IsometryKind,
    Point,
    iso_apply,
    iso_distance,
    random_isometry,
)
from moser_modulus.geometry.net import IsometryNet, build_net
from moser_modulus.geometry.shapes import (
    ConvexPolygon,
    SquareUnion,
    clip_area,
    dyadic_cover,
    region_area,
    segment_length_in,
)

__all__ = [
    "IDENTITY",
    "ConvexPolygon",
    "Isometry",
    "IsometryKind",
    "IsometryNet",
    "Point",
    "SquareUnion",
    "build_net",
    "clip_area",
    "dyadic_cover",
    "iso_apply",
    "iso_distance",
    "random_isometry",
    "region_area",
    "segment_length_in",
]

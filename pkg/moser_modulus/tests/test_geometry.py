"""Tests for the isometry, polygon clipping and isometry net critical functionality."""
import math

import numpy as np
import pytest

from moser_modulus.errors import ValidationError
from moser_modulus.geometry import (
    IDENTITY,
    ConvexPolygon,
    Isometry,
    IsometryKind,
    Point,
    SquareUnion,
    build_net,
    clip_area,
    dyadic_cover,
    iso_apply,
    iso_distance,
    random_isometry,
    region_area,
    segment_length_in,
)


@pytest.fixture
def overlapping():
    """Two unit squares overlapping in a half-unit strip."""
    return SquareUnion.of(((0.0, 0.0), 1.0), ((0.5, 0.0), 1.0))


def test_rotation_moves_axis():
    """Test critical path: Rotation by a quarter turn sends (1, 0) to (0, 1)."""
    # Arrange
    iota = Isometry(IsometryKind.ROTATION, math.pi / 2)

    # Act
    image = iso_apply(iota, Point(1.0, 0.0))

    # Assert
    assert image.x == pytest.approx(0.0, abs=1e-12)
    assert image.y == pytest.approx(1.0)


def test_isometry_subtracts_translation_first():
    """Test critical path: iota(x) = O(x - v)."""
    # Arrange
    iota = Isometry(IsometryKind.ROTATION, math.pi, Point(1.0, 2.0))

    # Act
    image = iso_apply(iota, Point(1.0, 2.0))

    # Assert
    assert image.x == pytest.approx(0.0, abs=1e-12)
    assert image.y == pytest.approx(0.0, abs=1e-12)


def test_reflection_has_negative_determinant():
    """Test critical path: Reflection linear parts reverse orientation."""
    iota = Isometry(IsometryKind.REFLECTION, 0.7)
    assert np.linalg.det(iota.matrix) == pytest.approx(-1.0)
    assert iso_apply(iota, Point(1.0, 0.0)).x == pytest.approx(math.cos(0.7))


def test_angle_normalized_into_range():
    """Test critical path: Angles are reduced modulo 2*pi."""
    iota = Isometry(IsometryKind.ROTATION, -math.pi / 2)
    assert iota.angle == pytest.approx(3 * math.pi / 2)


def test_non_finite_isometry_rejected():
    """Test error handling: NaN angles are invalid."""
    with pytest.raises(ValidationError):
        Isometry(IsometryKind.ROTATION, float("nan"))


def test_inverse_undoes_isometry(rng):
    """Test critical path: inverse_apply recovers the original point."""
    # Arrange
    iota = random_isometry(rng)
    p = Point(0.3, -1.2)

    # Act
    back = iota.inverse_apply(iso_apply(iota, p))

    # Assert
    assert back.x == pytest.approx(p.x)
    assert back.y == pytest.approx(p.y)


def test_then_translate_adds_offset(rng):
    """Test critical path: then_translate composes a translation after the isometry."""
    iota = random_isometry(rng)
    offset = np.array([0.25, -0.5])
    points = rng.normal(size=(5, 2))
    shifted = iota.then_translate(offset)
    np.testing.assert_allclose(shifted.apply_many(points), iota.apply_many(points) + offset)


def test_distance_of_pure_translations():
    """Test critical path: Distance between translations is the offset length."""
    a = Isometry(translation=Point(0.0, 0.0))
    b = Isometry(translation=Point(3.0, 4.0))
    assert iso_distance(a, b) == pytest.approx(5.0)


@pytest.mark.parametrize("angle, expected", [
    (math.pi, 2.0),
    (math.pi / 2, math.sqrt(2.0)),
    (math.pi / 3, 1.0),
])
def test_distance_of_rotations(angle, expected):
    """Test critical path: Rotation by t is 2 sin(t/2) away from the identity."""
    iota = Isometry(IsometryKind.ROTATION, angle)
    assert iso_distance(IDENTITY, iota) == pytest.approx(expected)


def test_distance_is_symmetric(rng):
    """Test critical path: Operator distance does not depend on argument order."""
    a, b = random_isometry(rng), random_isometry(rng)
    assert iso_distance(a, b) == pytest.approx(iso_distance(b, a))


def test_random_isometry_respects_options(rng):
    """Test critical path: Rotations only when reflections are excluded."""
    draws = [random_isometry(rng, radius=2.0, include_reflections=False) for _ in range(50)]
    assert all(d.kind is IsometryKind.ROTATION for d in draws)
    assert all(math.hypot(*d.translation) <= 2.0 for d in draws)


def test_polygon_orientation_fixed():
    """Test critical path: Clockwise input is reoriented and area is positive."""
    poly = ConvexPolygon((Point(0, 0), Point(0, 1), Point(1, 1), Point(1, 0)))
    assert poly.area == pytest.approx(1.0)


def test_collinear_points_form_flat_polygon():
    """Test edge case: Collinear hulls have zero area."""
    poly = ConvexPolygon.from_points([(0, 0), (1, 1), (2, 2)])
    assert poly.area == 0.0


def test_clip_area_of_offset_squares():
    """Test critical path: Intersection area of convex polygons."""
    a = ConvexPolygon.rectangle(0, 0, 1, 1)
    b = ConvexPolygon.rectangle(0.5, 0, 1.5, 1)
    assert clip_area(a, b) == pytest.approx(0.5)


def test_square_union_area_counts_overlap_once(overlapping):
    """Test critical path: Overlapping squares are partitioned without double counting."""
    # Act
    rects = overlapping.rectangles

    # Assert
    assert overlapping.area == pytest.approx(1.5)
    assert sum((r[2] - r[0]) * (r[3] - r[1]) for r in rects) == pytest.approx(1.5)


def test_square_union_metadata():
    """Test critical path: Diameter, bounds and anchor of the unit square."""
    unit = SquareUnion.unit()
    assert unit.diameter == pytest.approx(math.sqrt(2.0))
    assert unit.bounds == (0.0, 0.0, 1.0, 1.0)
    assert unit.anchor == Point(0.5, 0.5)


def test_square_union_rejects_bad_side():
    """Test error handling: Nonpositive sides are invalid."""
    with pytest.raises(ValidationError):
        SquareUnion.of(((0.0, 0.0), 0.0))


def test_square_union_spec_errors():
    """Test error handling: Spec entries need three numbers."""
    with pytest.raises(ValidationError):
        SquareUnion.from_spec([[0.0, 0.0]])


def test_empty_union_has_no_anchor():
    """Test edge case: The empty set has zero area and no anchor."""
    empty = SquareUnion()
    assert empty.is_empty
    assert empty.area == 0.0
    with pytest.raises(ValidationError):
        _ = empty.anchor


def test_region_area_of_overlapping_union(overlapping):
    """Test critical path: Area of T ∩ iota(E) with overlapping squares."""
    T = ConvexPolygon.rectangle(0, 0, 1, 1)
    assert region_area(T, overlapping) == pytest.approx(1.0)


def test_region_area_after_translation():
    """Test critical path: Translating E out of T leaves no overlap."""
    T = ConvexPolygon.rectangle(0, 0, 1, 1)
    iota = Isometry(translation=Point(5.0, 0.0))
    assert region_area(T, SquareUnion.unit(), iota) == 0.0


def test_region_area_invariant_under_rotation_about_center():
    """Test critical path: A centred square rotated by a quarter turn covers the same area."""
    E = SquareUnion.of(((0.25, 0.25), 0.5))
    T = ConvexPolygon.rectangle(0, 0, 1, 1)
    # Rotation by pi/2 about (0.5, 0.5) followed by translating back
    iota = Isometry(IsometryKind.ROTATION, math.pi / 2).then_translate(np.array([1.0, 0.0]))
    assert region_area(T, E, iota) == pytest.approx(0.25)


def test_segment_length_crossing_square():
    """Test critical path: A vertical segment crosses the unit square in length 1."""
    seg = (Point(0.5, -1.0), Point(0.5, 3.0))
    assert segment_length_in(seg, SquareUnion.unit()) == pytest.approx(1.0)


def test_segment_along_shared_edge_counted_once(overlapping):
    """Test edge case: A segment on a shared boundary is not double counted."""
    seg = (Point(-1.0, 0.0), Point(3.0, 0.0))
    assert segment_length_in(seg, overlapping) == pytest.approx(1.5)


def test_dyadic_cover_tiles():
    """Test critical path: Dyadic squares meeting a shifted unit square."""
    # Arrange
    E = SquareUnion.of(((0.25, 0.25), 1.0))

    # Act
    cover = dyadic_cover(E, 1)

    # Assert
    assert len(cover.squares) == 9
    assert cover.area == pytest.approx(2.25)


def test_dyadic_cover_rejects_negative_level():
    """Test error handling: Negative dyadic levels are invalid."""
    with pytest.raises(ValidationError):
        dyadic_cover(SquareUnion.unit(), -1)


@pytest.mark.parametrize("delta", [0.0, 1.5, -0.1])
def test_net_rejects_bad_delta(delta):
    """Test error handling: Net resolution must lie in (0, 1]."""
    with pytest.raises(ValidationError):
        build_net(delta)


def test_net_size_and_members():
    """Test critical path: Net size is orthogonal parts times translations."""
    # Act
    net = build_net(0.5)

    # Assert
    assert net.angle_count == math.ceil(2 * math.pi / 0.5)
    assert len(net.orthogonals) == 2 * net.angle_count
    assert len(net) == len(net.orthogonals) * len(net.translations)
    assert net.member(0).kind is IsometryKind.ROTATION
    assert net.member(0).angle == 0.0


def test_net_covers_ball(rng):
    """Test critical path: Every isometry near the centre has a member within 1.5 delta."""
    # Arrange
    net = build_net(0.5)

    # Act
    distances = [net.nearest(random_isometry(rng))[1] for _ in range(40)]

    # Assert
    assert max(distances) <= 1.5 * 0.5 + 1e-9


def test_net_nearest_far_away_fails():
    """Test error handling: Translations outside the ball have no nearby member."""
    net = build_net(0.5)
    with pytest.raises(ValidationError):
        net.nearest(Isometry(translation=Point(1000.0, 0.0)))

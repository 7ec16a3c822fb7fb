"""Rigid motions of the plane in the form x -> O(x - v)."""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from moser_modulus.errors import ValidationError

TWO_PI = 2.0 * math.pi


class Point(NamedTuple):
    """A point of the plane."""

    x: float
    y: float


class IsometryKind(Enum):
    """Orientation class of the orthogonal part."""

    ROTATION = "rotation"
    REFLECTION = "reflection"


def orthogonal_matrix(kind: IsometryKind, angle: float) -> np.ndarray:
    """Linear part for a kind and angle.

    Rotations are ``[[c, -s], [s, c]]``; reflections are the rotation composed with
    the reflection in the x-axis, ``[[c, s], [s, -c]]``. Both send (1, 0) to
    (cos angle, sin angle).
    """
    c, s = math.cos(angle), math.sin(angle)
    if kind is IsometryKind.ROTATION:
        return np.array([[c, -s], [s, c]])
    return np.array([[c, s], [s, -c]])


@dataclass(frozen=True)
class Isometry:
    """Planar rigid motion ``iota(x) = O(x - v)``.

    Features:
    - Rotation or reflection linear part parametrized by an angle in [0, 2*pi)
    - Vectorized application and inversion over coordinate arrays
    - Shift vector ``O v`` cached for batched transforms
    """

    kind: IsometryKind = IsometryKind.ROTATION
    angle: float = 0.0
    translation: Point = Point(0.0, 0.0)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.angle) and all(map(math.isfinite, self.translation))):
            raise ValidationError("isometry", "angle and translation must be finite")
        object.__setattr__(self, "angle", self.angle % TWO_PI)
        object.__setattr__(self, "translation", Point(*map(float, self.translation)))

    @cached_property
    def matrix(self) -> np.ndarray:
        return orthogonal_matrix(self.kind, self.angle)

    @cached_property
    def shift(self) -> np.ndarray:
        """The constant part ``O v`` so that ``iota(x) = O x - O v``."""
        return self.matrix @ np.asarray(self.translation)

    def apply_many(self, points: np.ndarray) -> np.ndarray:
        """Apply the isometry to an ``(..., 2)`` coordinate array."""
        return np.asarray(points, dtype=float) @ self.matrix.T - self.shift

    def invert_many(self, points: np.ndarray) -> np.ndarray:
        """Apply the inverse ``y -> O^T y + v`` to an ``(..., 2)`` coordinate array."""
        return np.asarray(points, dtype=float) @ self.matrix + np.asarray(self.translation)

    def inverse_apply(self, p: Point) -> Point:
        x, y = self.invert_many(np.asarray(p, dtype=float))
        return Point(float(x), float(y))

    def then_translate(self, offset: np.ndarray) -> "Isometry":
        """The isometry ``x -> iota(x) + offset``."""
        v = np.asarray(self.translation) - self.matrix.T @ np.asarray(offset, dtype=float)
        return Isometry(self.kind, self.angle, Point(float(v[0]), float(v[1])))


IDENTITY = Isometry()


def iso_apply(iota: Isometry, p: Point) -> Point:
    """Return ``O(p - v)``."""
    x, y = iota.apply_many(np.asarray(p, dtype=float))
    return Point(float(x), float(y))


def _disk_max_squared(a: np.ndarray, b: np.ndarray) -> float:
    """Maximum of ``|A u + b|^2`` over the closed unit disk.

    The function is convex, so the maximum sits on the circle. Writing
    ``M = A^T A`` and ``g = A^T b``, stationary angles on the circle are the arguments
    of the roots of a quartic in ``z = exp(i t)``.
    """
    m = a.T @ a
    g = a.T @ b
    p, q, r = m[0, 0], m[0, 1], m[1, 1]
    g1, g2 = g

    def value(t: np.ndarray) -> np.ndarray:
        u = np.stack([np.cos(t), np.sin(t)], axis=-1)
        return np.sum((u @ a.T + b) ** 2, axis=-1)

    candidates = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
    coeffs = np.array([
        1j * (p - r) / 2 + q,
        1j * g1 + g2,
        0.0,
        -1j * g1 + g2,
        -1j * (p - r) / 2 + q,
    ])
    if np.any(np.abs(coeffs) > 1e-15):
        roots = np.roots(coeffs)
        candidates.extend(np.angle(roots).tolist())
    return float(np.max(value(np.asarray(candidates))))


def iso_distance(iota1: Isometry, iota2: Isometry) -> float:
    """Operator distance ``sup_{|x| <= 1} |iota1(x) - iota2(x)|`` in closed form."""
    a = iota1.matrix - iota2.matrix
    b = iota2.shift - iota1.shift
    if not np.any(np.abs(a) > 1e-15):
        return float(np.hypot(*b))
    return math.sqrt(max(_disk_max_squared(a, b), 0.0))


def random_isometry(rng: np.random.Generator, center: Point = Point(0.0, 0.0),
                    radius: float = 10.0, include_reflections: bool = True,
                    kind: Optional[IsometryKind] = None) -> Isometry:
    """Draw an isometry with uniform angle and translation uniform in ``B(center, radius)``."""
    if kind is None:
        kind = (IsometryKind.REFLECTION
                if include_reflections and rng.random() < 0.5 else IsometryKind.ROTATION)
    angle = float(rng.uniform(0.0, TWO_PI))
    rho = radius * math.sqrt(float(rng.random()))
    phi = float(rng.uniform(0.0, TWO_PI))
    return Isometry(kind, angle,
                    Point(center.x + rho * math.cos(phi), center.y + rho * math.sin(phi)))

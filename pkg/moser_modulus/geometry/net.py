"""Finite delta-nets of rigid motions around a point.

Translations are the points of the square lattice of spacing ``delta * sqrt(2)``
(anchored at the origin) inside a ball around ``center``; orthogonal parts are the
rotations by multiples of ``delta`` together with the same angles composed with a
reflection. Every isometry whose translation lies in ``B(center, NET_RADIUS)`` has a
member within operator distance ``1.5 * delta``.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from moser_modulus.config import Config
from moser_modulus.errors import ValidationError
from moser_modulus.geometry.isometry import (
    TWO_PI,
    Isometry,
    IsometryKind,
    Point,
    iso_distance,
    orthogonal_matrix,
)
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)

# Recorded ceiling for len(net) * delta**3, valid for delta <= 1 and |center| <= 2
C_NET = 8000.0

KINDS = (IsometryKind.ROTATION, IsometryKind.REFLECTION)


@dataclass(frozen=True)
class IsometryNet:
    """Lazily enumerated delta-net of isometries.

    Features:
    - Member count proportional to ``delta**-3``
    - Index arithmetic for lattice translations (no member materialization)
    - Nearest-member lookup with its operator distance
    """

    delta: float
    center: Point
    radius: float

    @property
    def spacing(self) -> float:
        return self.delta * math.sqrt(2.0)

    @cached_property
    def angle_count(self) -> int:
        return math.ceil(TWO_PI / self.delta)

    @cached_property
    def orthogonals(self) -> tuple[tuple[IsometryKind, float], ...]:
        return tuple((kind, k * self.delta) for kind in KINDS for k in range(self.angle_count))

    @cached_property
    def matrices(self) -> np.ndarray:
        """``(O, 2, 2)`` linear parts in the order of ``orthogonals``."""
        return np.stack([orthogonal_matrix(kind, angle) for kind, angle in self.orthogonals])

    @cached_property
    def translations(self) -> np.ndarray:
        """``(T, 2)`` lattice translations inside ``B(center, radius)``."""
        s = self.spacing
        cx, cy = self.center
        i = np.arange(math.floor((cx - self.radius) / s), math.ceil((cx + self.radius) / s) + 1)
        j = np.arange(math.floor((cy - self.radius) / s), math.ceil((cy + self.radius) / s) + 1)
        grid = np.stack(np.meshgrid(i, j, indexing="ij"), axis=-1).reshape(-1, 2) * s
        return grid[self.contains(grid)]

    def contains(self, translations: np.ndarray) -> np.ndarray:
        """Mask of translations inside the net's ball."""
        d = np.asarray(translations) - np.asarray(self.center)
        return np.einsum("...i,...i->...", d, d) <= self.radius ** 2 + 1e-12

    def __len__(self) -> int:
        return len(self.orthogonals) * len(self.translations)

    @property
    def constant(self) -> float:
        """Measured ``len(net) * delta**3``."""
        return len(self) * self.delta ** 3

    def member(self, index: int) -> Isometry:
        o, t = divmod(index, len(self.translations))
        kind, angle = self.orthogonals[o]
        x, y = self.translations[t]
        return Isometry(kind, angle, Point(float(x), float(y)))

    def __iter__(self) -> Iterator[Isometry]:
        for index in range(len(self)):
            yield self.member(index)

    @property
    def members(self) -> Iterator[Isometry]:
        return iter(self)

    def nearest(self, iota: Isometry) -> tuple[Isometry, float]:
        """Closest member to ``iota`` among the neighbouring angles and lattice points."""
        s = self.spacing
        step = iota.angle / self.delta
        best: tuple[Isometry, float] | None = None
        for k in {math.floor(step) % self.angle_count, math.ceil(step) % self.angle_count}:
            angle = k * self.delta
            target = orthogonal_matrix(iota.kind, angle).T @ iota.shift
            base = np.round(target / s).astype(int)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    v = (base + (di, dj)) * s
                    if not self.contains(v):
                        continue
                    candidate = Isometry(iota.kind, angle, Point(float(v[0]), float(v[1])))
                    dist = iso_distance(iota, candidate)
                    if best is None or dist < best[1]:
                        best = (candidate, dist)
        if best is None:
            raise ValidationError("iota", "translation far outside the net's ball")
        return best


def build_net(delta: float, center: Point = Point(0.0, 0.0)) -> IsometryNet:
    """Build the delta-net of isometries centred at ``center``.

    Args:
        delta: Net resolution in (0, 1]
        center: The point z the translations are centred on

    Returns:
        The net; its translation ball is ``B(center, R + delta * (1 + (|center| + R)/2))``
        with ``R = Config.NET_RADIUS``, which makes the covering radius hold for every
        translation in ``B(center, R)``

    Raises:
        ValidationError: If delta is outside (0, 1]
    """
    if not (isinstance(delta, (int, float)) and 0 < delta <= 1):
        raise ValidationError("delta", f"net resolution must lie in (0, 1], got {delta}")
    center = Point(float(center[0]), float(center[1]))
    base = Config.NET_RADIUS
    radius = base + delta * (1.0 + (math.hypot(*center) + base) / 2.0)
    net = IsometryNet(float(delta), center, radius)
    logger.debug("isometry_net_built", delta=delta, radius=radius,
                 orthogonals=len(net.orthogonals))
    return net

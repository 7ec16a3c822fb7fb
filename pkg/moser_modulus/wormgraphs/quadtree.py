"""Random "two of four" quadtree sets and their regularity profile."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from moser_modulus.config import Config
from moser_modulus.errors import ValidationError
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)

CHILD_OFFSETS = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
CHILD_PAIRS = np.array(list(combinations(range(4), 2)))  # the 6 admissible pairs


@dataclass(frozen=True, eq=False)
class QuadtreeSet:
    """Retained dyadic squares per level; level d holds ``2^d`` squares of side ``2^-d``."""

    depth: int
    kept: tuple[np.ndarray, ...]
    seed: int

    def side(self, level: int) -> float:
        return 2.0 ** -level

    def area(self, level: int) -> float:
        return len(self.kept[level]) * self.side(level) ** 2

    def squares(self, level: int) -> np.ndarray:
        """``(count, 2)`` integer lower-left indices of the retained squares."""
        return self.kept[level]

    def vertex_array(self, level: int) -> np.ndarray:
        """``(count, 4, 2)`` counterclockwise corners of the retained squares."""
        side = self.side(level)
        lower = self.kept[level].astype(float) * side
        offsets = np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]])
        return lower[:, None, :] + offsets[None, :, :]


def quadtree_sample(depth: int, seed: int) -> QuadtreeSet:
    """Keep two of the four children of every retained square, uniformly over the 6 pairs."""
    if not isinstance(depth, int) or not 0 <= depth <= Config.QUADTREE_MAX_DEPTH:
        raise ValidationError(
            "depth", f"quadtree depth must lie in [0, {Config.QUADTREE_MAX_DEPTH}], got {depth}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    levels = [np.zeros((1, 2), dtype=np.int64)]
    for _ in range(depth):
        parents = levels[-1]
        pairs = CHILD_PAIRS[rng.integers(0, len(CHILD_PAIRS), size=len(parents))]
        children = 2 * parents[:, None, :] + CHILD_OFFSETS[pairs]
        level = children.reshape(-1, 2)
        levels.append(level[np.lexsort((level[:, 1], level[:, 0]))])
    logger.debug("quadtree_sampled", depth=depth, seed=seed, leaves=len(levels[-1]))
    return QuadtreeSet(depth, tuple(levels), seed)


@dataclass(frozen=True, eq=False)
class ADProfile:
    """Counts of retained squares meeting random discs centred on the set."""

    radii: np.ndarray
    levels: np.ndarray
    counts: np.ndarray
    ratios: np.ndarray
    band: float

    @property
    def within_band(self) -> float:
        """Fraction of discs whose ratio lies in ``[1/band, band]``."""
        ok = (self.ratios >= 1.0 / self.band) & (self.ratios <= self.band)
        return float(ok.mean()) if len(ok) else 1.0

    def summary(self) -> dict[str, float]:
        return {"discs": float(len(self.ratios)), "ratio_min": float(self.ratios.min()),
                "ratio_max": float(self.ratios.max()), "within_band": self.within_band}


def ad_regularity_profile(qt: QuadtreeSet, discs: int, rng: np.random.Generator,
                          band: float = 16.0) -> ADProfile:
    """Sample discs ``B(c, r)`` with ``c`` on the set and ``2^-depth <= r <= 1``.

    For each disc, counts the retained squares of level ``ceil(log2(1/r))`` meeting it
    and divides by ``r * 2^level``.
    """
    leaves = qt.squares(qt.depth)
    side = qt.side(qt.depth)
    picks = leaves[rng.integers(0, len(leaves), size=discs)]
    centers = (picks + rng.random((discs, 2))) * side
    radii = 2.0 ** -rng.uniform(0.0, qt.depth, size=discs)
    levels = np.minimum(np.ceil(-np.log2(radii)).astype(int), qt.depth)
    counts = np.empty(discs, dtype=int)
    for d, (center, r, level) in enumerate(zip(centers, radii, levels)):
        lower = qt.squares(level) * qt.side(level)
        nearest = np.clip(center, lower, lower + qt.side(level))
        counts[d] = int((np.hypot(*(nearest - center).T) <= r).sum())
    ratios = counts / (radii * 2.0 ** levels)
    logger.debug("ad_profile_measured", discs=discs, ratio_max=float(ratios.max()))
    return ADProfile(radii, levels, counts, ratios, band)


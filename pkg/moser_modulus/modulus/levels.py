"""Dyadic level sets of a density and the long-piece witness along a curve."""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from moser_modulus.config import Messages
from moser_modulus.logging_config import get_logger
from moser_modulus.modulus.grid import GridDensity, cell_lengths

# Set up structured logger for this module
logger = get_logger(__name__)

SUMMABLE_SCALE = 6.0 / math.pi**2


@dataclass(frozen=True, eq=False)
class LevelSets:
    """Class index per cell: 0 where ``rho < 1/2``, j where ``2**(j-2) <= rho < 2**(j-1)``."""

    classes: np.ndarray

    @property
    def j_max(self) -> int:
        return int(self.classes.max()) if self.classes.size else 0

    def mask(self, j: int) -> np.ndarray:
        return self.classes == j

    def counts(self) -> dict[int, int]:
        values, counts = np.unique(self.classes, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def ceiling(self) -> np.ndarray:
        """Cellwise upper bound ``2**(j-1)`` on E_j (``1/2`` on E_0)."""
        return np.where(self.classes == 0, 0.5, np.exp2(self.classes - 1.0))


def level_sets(rho: GridDensity) -> LevelSets:
    """Partition the grid cells by the dyadic size of rho."""
    _, exponent = np.frexp(rho.values)
    classes = np.where(rho.values < 0.5, 0, exponent + 1)
    return LevelSets(classes.astype(int))


@dataclass(frozen=True)
class WitnessReport:
    """Per-class curve lengths and the class that carries a long piece of the curve."""

    integral: float
    lengths: dict[int, float]
    chain_bound: float
    ok: bool
    j_star: Optional[int]
    value: float
    summable_j: Optional[int]
    summable_ok: bool
    notes: list[str] = field(default_factory=list)

    @property
    def chain_holds(self) -> bool:
        """``integral <= l_0/2 + sum_{j>=1} 2**(j-1) l_j``, up to rounding."""
        return self.integral <= self.chain_bound * (1 + 1e-12) + 1e-12


def witness_check(rho: GridDensity, gamma: Sequence[Sequence[float]]) -> WitnessReport:
    """Find ``j >= 1`` with ``H1(gamma ∩ E_j) >= 2**-j``.

    When no level meets that, the summable criterion ``2**j l_j >= 6/(pi**2 j**2)`` is
    checked instead; it always holds for admissible rho once ``l_0 <= 1``.

    Returns:
        WitnessReport; ``ok`` is False with a note when the integral is below 1
    """
    curve = np.asarray(gamma, dtype=float)
    cells, pieces = cell_lengths(rho.grid, curve)
    integral = float(np.dot(rho.flat[cells], pieces))
    classes = level_sets(rho).classes.ravel()[cells]
    lengths: dict[int, float] = {}
    for j, piece in zip(classes.tolist(), pieces.tolist()):
        lengths[j] = lengths.get(j, 0.0) + piece
    chain = lengths.get(0, 0.0) / 2 + sum(2.0 ** (j - 1) * l for j, l in lengths.items() if j)

    notes: list[str] = []
    if integral < 1.0:
        notes.append(Messages.INTEGRAL_BELOW_ONE.format(value=integral))
        return WitnessReport(integral, lengths, chain, False, None, 0.0, None, False, notes)

    weighted = {j: 2.0**j * l for j, l in lengths.items() if j >= 1}
    strict = [j for j, w in weighted.items() if w >= 1.0]
    j_star = max(strict, key=lambda j: weighted[j]) if strict else None
    summable = [j for j, w in weighted.items() if w >= SUMMABLE_SCALE / j**2]
    summable_j = max(summable, key=lambda j: weighted[j] * j * j) if summable else None
    if j_star is None:
        notes.append(Messages.WITNESS_STRICT_MISSED)
        logger.info("witness_strict_missed", integral=integral, summable_j=summable_j)
    return WitnessReport(
        integral, lengths, chain, j_star is not None, j_star,
        weighted[j_star] if j_star is not None else 0.0,
        summable_j, summable_j is not None, notes,
    )

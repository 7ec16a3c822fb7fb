"""Hoeffding's inequality for bounded independent variables, with an empirical check."""

import math
from typing import NamedTuple, Sequence

import numpy as np

from moser_modulus.errors import ValidationError


def hoeffding_bound(t: float, ranges: Sequence[tuple[float, float]]) -> float:
    """``P(mean - E[mean] >= t) <= exp(-2 n**2 t**2 / sum (b_i - a_i)**2)``.

    Args:
        t: Deviation, strictly positive
        ranges: ``(a_i, b_i)`` with ``a_i <= b_i`` for each variable

    Returns:
        The bound in (0, 1]; 1 when every range is degenerate

    Raises:
        ValidationError: On an empty range list, ``t <= 0`` or ``b_i < a_i``
    """
    if not ranges:
        raise ValidationError("ranges", "at least one variable is required")
    if not t > 0:
        raise ValidationError("t", f"must be positive, got {t}")
    widths = np.array([b - a for a, b in ranges], dtype=float)
    if np.any(widths < 0):
        raise ValidationError("ranges", "every range needs a <= b")
    spread = float(np.sum(widths**2))
    if spread == 0.0:
        return 1.0
    n = len(ranges)
    return math.exp(-2.0 * n * n * t * t / spread)


class HoeffdingRow(NamedTuple):
    n: int
    t: float
    bound: float


def hoeffding_table(n_values: Sequence[int], t_values: Sequence[float]) -> list[HoeffdingRow]:
    """Bounds for ``n`` variables in [0, 1] at each deviation ``t``."""
    return [
        HoeffdingRow(n, t, hoeffding_bound(t, [(0.0, 1.0)] * n))
        for n in n_values
        for t in t_values
    ]


class ValidationRow(NamedTuple):
    t: float
    empirical: float
    bound: float
    holds: bool


def hoeffding_validation(n: int, batches: int, t_values: Sequence[float],
                         rng: np.random.Generator) -> list[ValidationRow]:
    """Empirical upper tail of the mean of ``n`` uniform [0, 1] variables against the bound."""
    if n < 1 or batches < 1:
        raise ValidationError("batches", "n and batches must be positive")
    deviations = rng.random((batches, n)).mean(axis=1) - 0.5
    rows = []
    for t in t_values:
        empirical = float(np.mean(deviations >= t))
        bound = hoeffding_bound(t, [(0.0, 1.0)] * n)
        rows.append(ValidationRow(t, empirical, bound, empirical <= bound))
    return rows

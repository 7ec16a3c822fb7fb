"""Density-lemma parameters: epsilon, kappa, the starting depth k_eps and the r_k schedule."""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from moser_modulus.config import Messages
from moser_modulus.errors import ValidationError
from moser_modulus.logging_config import get_logger
from moser_modulus.wormgraphs import MkSequence

# Set up structured logger for this module
logger = get_logger(__name__)

LAMBDA = 0.5
KAPPA_MAX = Fraction(1, 3)


@dataclass(frozen=True)
class DensityParams:
    """Parameters of the density and intersection tail experiments.

    Features:
    - ``k_eps`` from the ceiling rule, exact for dyadic epsilon
    - Thresholds ``epsilon**(1/3 - kappa)`` and ``epsilon**(1/2 - kappa)``
    """

    epsilon: float
    kappa: Fraction
    k_eps: int
    lam: float = LAMBDA
    dyadic_exact: bool = True

    @property
    def exponent(self) -> float:
        return float(Fraction(1, 3) - self.kappa)

    @property
    def threshold(self) -> float:
        """Exceedance level ``epsilon**(1/3 - kappa)``."""
        return self.epsilon ** self.exponent

    @property
    def ad_threshold(self) -> float:
        """Exceedance level for quadtree sets, ``epsilon**(1/2 - kappa)``."""
        return self.epsilon ** float(Fraction(1, 2) - self.kappa)

    def to_dict(self) -> dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "kappa": float(self.kappa),
            "k_eps": self.k_eps,
            "lambda": self.lam,
            "dyadic_exact": self.dyadic_exact,
        }


def _dyadic_exponent(epsilon: float) -> int | None:
    """``a`` with ``epsilon == 2**-a`` exactly, else None."""
    mantissa, exponent = math.frexp(epsilon)
    if mantissa != 0.5:
        return None
    return 1 - exponent


def make_params(epsilon: float, kappa: float | Fraction) -> DensityParams:
    """Validate (epsilon, kappa) and compute ``k_eps = ceil((2+kappa)/3 * log2(1/epsilon))``.

    Args:
        epsilon: Area scale in (0, 1)
        kappa: Exponent slack in (0, 1/3]

    Returns:
        DensityParams, with ``dyadic_exact`` False when the product is not an integer

    Raises:
        ValidationError: If either value is out of its domain
    """
    if not (isinstance(epsilon, (int, float)) and 0 < epsilon < 1):
        raise ValidationError("epsilon", f"must lie in (0, 1), got {epsilon}")
    kappa_q = Fraction(kappa).limit_denominator(10**6)
    if not 0 < kappa_q <= KAPPA_MAX:
        raise ValidationError("kappa", f"must lie in (0, 1/3], got {kappa}")

    factor = (2 + kappa_q) / 3
    a = _dyadic_exponent(float(epsilon))
    if a is not None:
        exact = factor * a
        k_eps = math.ceil(exact)
        dyadic_exact = exact.denominator == 1
        value = float(exact)
    else:
        value = float(factor) * -math.log2(epsilon)
        k_eps = math.ceil(value - 1e-9)
        dyadic_exact = False
    if not dyadic_exact:
        logger.warning("k_eps_rounded", message=Messages.DYADIC_INEXACT.format(value=value),
                       k_eps=k_eps)
    return DensityParams(float(epsilon), kappa_q, max(k_eps, 1), LAMBDA, dyadic_exact)


@dataclass(frozen=True)
class RSchedule:
    """Increasing radii ``r_k`` for ``k_eps <= k <= k_max``."""

    params: DensityParams
    values: tuple[float, ...]

    @property
    def k_max(self) -> int:
        return self.params.k_eps + len(self.values) - 1

    def r(self, k: int) -> float:
        if not self.params.k_eps <= k <= self.k_max:
            raise ValidationError("k", f"outside [{self.params.k_eps}, {self.k_max}]")
        return self.values[k - self.params.k_eps]

    @property
    def sup(self) -> float:
        return self.values[-1]


def r_schedule(params: DensityParams, k_max: int) -> RSchedule:
    """``r_k = epsilon**(1/3-kappa)/2 * sum_{m=1}^{k-k_eps+1} 1/m**2``.

    Raises:
        ValidationError: If ``k_max < k_eps``
    """
    if k_max < params.k_eps:
        raise ValidationError("k_max", f"must be at least k_eps = {params.k_eps}")
    m = np.arange(1, k_max - params.k_eps + 2, dtype=float)
    values = params.threshold / 2.0 * np.cumsum(1.0 / m**2)
    return RSchedule(params, tuple(float(v) for v in values))


class KEpsRow(NamedTuple):
    """One depth of the small-k condition check."""

    k: int
    lhs: float
    rhs: float
    holds: bool
    sharp: float
    sharp_holds: bool


def k_eps_condition(seq: MkSequence, params: DensityParams, K: int) -> list[KEpsRow]:
    """Check ``10000 k**2 2**k epsilon < epsilon**(1/3-kappa)/2`` for ``1 <= k <= K``.

    ``sharp`` is the bound actually available from the sequence, ``n_k * epsilon``.
    Reported, never enforced.
    """
    if not 1 <= K <= seq.max_depth:
        raise ValidationError("K", f"must lie in [1, {seq.max_depth}]")
    rhs = params.threshold / 2.0
    rows = []
    for k in range(1, K + 1):
        lhs = 10000.0 * k * k * 2.0**k * params.epsilon
        sharp = seq.n[k] * params.epsilon
        rows.append(KEpsRow(k, lhs, rhs, lhs < rhs, sharp, sharp < rhs))
    return rows

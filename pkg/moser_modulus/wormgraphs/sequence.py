"""The subdivision sequence (m_k) and its cumulative products n_k."""

from dataclasses import dataclass
from fractions import Fraction

from moser_modulus.config import Config
from moser_modulus.errors import ValidationError
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)

LOWER_FACTOR = 100
UPPER_FACTOR = 10000


@dataclass(frozen=True)
class MkSequence:
    """Pile counts ``m_0..m_K`` and heights ``1/n_k`` with ``n_k = m_0 * ... * m_k``.

    Generation-k cells are cut into ``m[k+1]`` piles, so a generation-k cell has
    height ``1/n[k]``.
    """

    max_depth: int
    m: tuple[int, ...]
    n: tuple[int, ...]

    @classmethod
    def trivial(cls) -> "MkSequence":
        """Depth-0 sequence carrying only the root."""
        return cls(0, (1,), (1,))

    def lipschitz_sum(self, upto: int | None = None) -> Fraction:
        """Exact ``sum_{1 <= k <= upto} 2^k / n_k``."""
        upto = self.max_depth if upto is None else upto
        return sum((Fraction(2 ** k, self.n[k]) for k in range(1, upto + 1)), Fraction(0))

    def violations(self) -> list[str]:
        """Exact check of the growth constraints; empty when the sequence is sound."""
        problems = []
        if self.m[0] != 1:
            problems.append(f"m_0 = {self.m[0]} != 1")
        for k in range(1, self.max_depth + 1):
            if self.m[k] < 1:
                problems.append(f"m_{k} = {self.m[k]} < 1")
            if self.n[k] != self.n[k - 1] * self.m[k]:
                problems.append(f"n_{k} is not n_{k - 1} * m_{k}")
            target = k * k * 2 ** k
            if not LOWER_FACTOR * target <= self.n[k] <= UPPER_FACTOR * target:
                problems.append(f"n_{k} = {self.n[k]} outside [100, 10000] * k^2 * 2^k")
        if self.lipschitz_sum() >= Fraction(1, 3):
            problems.append("sum 2^k / n_k >= 1/3")
        return problems


def build_sequence(K: int) -> MkSequence:
    """Greedy sequence ``m_k = ceil(100 k^2 2^k / n_{k-1})``.

    Args:
        K: Maximum depth, 1 <= K <= Config.MAX_DEPTH

    Returns:
        The sequence with ``100 k^2 2^k <= n_k <= 10000 k^2 2^k`` for every k

    Raises:
        ValidationError: If K is out of range
    """
    if not isinstance(K, int) or not 1 <= K <= Config.MAX_DEPTH:
        raise ValidationError("depth", f"K must lie in [1, {Config.MAX_DEPTH}], got {K}")
    m, n = [1], [1]
    for k in range(1, K + 1):
        target = LOWER_FACTOR * k * k * 2 ** k
        m_k = max(1, -(-target // n[-1]))
        m.append(m_k)
        n.append(n[-1] * m_k)
    seq = MkSequence(K, tuple(m), tuple(n))
    logger.debug("sequence_built", depth=K, n_max=seq.n[-1])
    return seq

"""Discrete p-modulus by constraint generation on the Lagrangian dual.

For multipliers ``lam >= 0`` on the active curves the inner minimization over
densities is separable and closed form::

    sigma = L^T lam,   rho_c = (sigma_c / (p a)) ** (1/(p-1)),
    g(lam) = s * sum(lam) - (1 - 1/p) * sum(sigma_c ** q) * (p a) ** (-1/(p-1))

with ``a`` the cell area and ``q = p/(p-1)``. ``g`` is concave and every value of it
is a lower bound on the modulus. Each round maximizes ``g`` over the active set
with L-BFGS-B, rescales ``rho`` to the nearest feasible density for the full
family, and adds the most violated curves.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import optimize, sparse

from moser_modulus.config import Config
from moser_modulus.errors import ModulusConvergenceError, PreconditionError, ValidationError
from moser_modulus.logging_config import experiment_latency, get_logger, solver_rounds
from moser_modulus.modulus.grid import CurveFamily, Grid, GridDensity, cell_lengths, energy

# Set up structured logger for this module
logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ModulusResult:
    """Primal estimate, dual certificate and the density attaining the estimate.

    ``value`` is the energy of an admissible density, ``dual_bound`` a certified lower
    bound; ``tolerance`` is their relative gap.
    """

    value: float
    density: GridDensity
    dual_bound: float
    iterations: int
    tolerance: float
    p: float
    threshold: float = 1.0
    rounds: int = 0
    active: tuple[int, ...] = ()
    multipliers: Optional[np.ndarray] = None
    trace: list[dict[str, Any]] = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.density.grid

    @property
    def gap(self) -> float:
        return self.value - self.dual_bound


class _Dual:
    """The concave dual restricted to a set of rows of the incidence matrix."""

    def __init__(self, rows: sparse.csr_matrix, p: float, cell_area: float, threshold: float):
        self.rows = rows
        self.rows_t = rows.T.tocsr()
        self.p = p
        self.q = p / (p - 1.0)
        self.pa = p * cell_area
        self.s = threshold
        self.coef = (1.0 - 1.0 / p) * self.pa ** (-1.0 / (p - 1.0))

    def density(self, lam: np.ndarray) -> np.ndarray:
        sigma = np.maximum(self.rows_t @ lam, 0.0)
        return (sigma / self.pa) ** (1.0 / (self.p - 1.0))

    def value(self, lam: np.ndarray) -> float:
        sigma = np.maximum(self.rows_t @ lam, 0.0)
        return float(self.s * lam.sum() - self.coef * np.sum(sigma**self.q))

    def negative(self, lam: np.ndarray) -> tuple[float, np.ndarray]:
        rho = self.density(lam)
        sigma = np.maximum(self.rows_t @ lam, 0.0)
        g = self.s * lam.sum() - self.coef * np.sum(sigma**self.q)
        grad = self.s - self.rows @ rho
        return -float(g), -np.asarray(grad, dtype=float)


def single_curve_modulus(grid: Grid, curve: np.ndarray, p: float,
                         threshold: float = 1.0) -> float:
    """Closed form for one curve: ``s**p * S**(1-p)`` with ``S = sum a (l/a)**q``."""
    cells, lengths = cell_lengths(grid, np.asarray(curve, dtype=float))
    per_cell = np.bincount(cells, weights=lengths, minlength=grid.size)
    a = grid.cell_area
    q = p / (p - 1.0)
    total = float(np.sum(a * (per_cell / a) ** q))
    if total == 0.0:
        raise PreconditionError("curve does not meet the grid")
    return threshold**p * total ** (1.0 - p)


def _check_inputs(fam: CurveFamily, grid: Grid, p: float, tol: float,
                  threshold: float) -> sparse.csr_matrix:
    if not p > 1:
        raise ValidationError("p", f"must exceed 1, got {p}")
    if not tol > 0:
        raise ValidationError("tol", f"must be positive, got {tol}")
    if not threshold > 0:
        raise ValidationError("threshold", f"must be positive, got {threshold}")
    if not len(fam):
        raise ValidationError("family", "curve family is empty")
    if np.any(fam.lengths <= 0):
        raise PreconditionError(f"curve {int(np.argmin(fam.lengths))} has zero length")
    matrix = fam.incidence(grid)
    reach = np.asarray(matrix.sum(axis=1)).ravel()
    if np.any(reach <= 0):
        raise PreconditionError(f"curve {int(np.argmin(reach))} does not meet [0,1]^2")
    return matrix


def solve_modulus(fam: CurveFamily, grid: Grid, p: float, tol: Optional[float] = None,
                  threshold: float = 1.0, max_iter: Optional[int] = None) -> ModulusResult:
    """Estimate ``mod_p`` of the family on the grid with a certified lower bound.

    Args:
        fam: Nonempty family of curves with positive length
        grid: Discretization carrier
        p: Exponent, ``p > 1``
        tol: Relative duality gap to reach; defaults to ``Config.SOLVER_TOL``
        threshold: Required line integral ``s`` (the classical problem uses 1)
        max_iter: Cap on optimizer iterations summed over rounds

    Returns:
        ModulusResult with ``dual_bound <= value`` and ``(value - dual) / value <= tol``

    Raises:
        ValidationError: On bad p, tol, threshold or an empty family
        PreconditionError: If a curve has zero length or misses the grid
        ModulusConvergenceError: If the iteration cap is hit, or the optimizer stalls,
            before the gap closes
    """
    tol = Config.SOLVER_TOL if tol is None else tol
    max_iter = Config.SOLVER_MAX_ITER if max_iter is None else max_iter
    matrix = _check_inputs(fam, grid, p, tol, threshold)
    batch = max(1, Config.GENERATION_BATCH)

    # variables are lam / lam_scale; the objective is divided by a lower bound on the
    # modulus so that relative stopping tests see values of order one
    lam_scale = p * grid.cell_area / float(np.mean(matrix.data))
    order = np.argsort(fam.lengths, kind="stable")
    f_scale = single_curve_modulus(grid, fam.curves[int(order[0])], p, threshold)
    active: list[int] = sorted(order[:batch].tolist())
    u = np.ones(len(active))
    iterations = 0
    rounds = 0
    trace: list[dict[str, Any]] = []
    best: Optional[ModulusResult] = None

    with experiment_latency.time():
        while True:
            rounds += 1
            solver_rounds.inc()
            dual = _Dual(matrix[active], p, grid.cell_area, threshold)

            def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
                f, grad = dual.negative(x * lam_scale)
                return f / f_scale, grad * (lam_scale / f_scale)

            outcome = optimize.minimize(
                objective, u, jac=True, method="L-BFGS-B",
                bounds=[(0.0, None)] * len(active),
                options={"maxiter": max(max_iter - iterations, 1), "ftol": 1e-15,
                         "gtol": 1e-12, "maxcor": 30},
            )
            iterations += max(int(outcome.nit), 1)
            u = np.maximum(outcome.x, 0.0)
            lam = u * lam_scale
            dual_bound = max(dual.value(lam), 0.0)

            rho = dual.density(lam)
            integrals = matrix @ rho
            lowest = float(integrals.min())
            value, gap = math.inf, math.inf
            if lowest > 0:
                feasible = GridDensity.from_flat(grid, rho * (threshold / lowest))
                value = energy(feasible, p)
                gap = (value - dual_bound) / value
                if best is None or gap < best.tolerance:
                    best = ModulusResult(value, feasible, dual_bound, iterations, gap, p,
                                         threshold, rounds, tuple(active), lam.copy())

            # rescaling by 1 - tol/(2p) costs at most about tol/2 of relative energy
            violated = np.flatnonzero(integrals < threshold * (1.0 - tol / (2.0 * p)))
            taken = set(active)
            fresh = [int(i) for i in violated[np.argsort(integrals[violated])]
                     if int(i) not in taken][:batch]
            trace.append({"round": rounds, "active": len(active), "iterations": iterations,
                          "value": value, "dual_bound": dual_bound, "gap": gap,
                          "violated": len(violated)})
            logger.debug("solver_round", round=rounds, active=len(active), value=value,
                         dual_bound=dual_bound, gap=gap, violated=len(violated))

            if gap <= tol and not fresh:
                break
            stalled = not fresh and int(outcome.nit) == 0
            if iterations >= max_iter or stalled:
                logger.error("solver_not_converged", iterations=iterations, rounds=rounds,
                             value=value, dual_bound=dual_bound, stalled=stalled)
                if best is not None:
                    best.trace.extend(trace)
                raise ModulusConvergenceError(
                    best.value if best else math.inf,
                    best.dual_bound if best else dual_bound, iterations, best)
            if fresh:
                active = active + fresh
                u = np.concatenate([u, np.full(len(fresh), 1e-3)])

    assert best is not None
    best.trace.extend(trace)
    logger.info("modulus_solved", curves=len(fam), N=grid.resolution, p=p,
                value=best.value, dual_bound=best.dual_bound, rounds=rounds,
                iterations=iterations)
    return best

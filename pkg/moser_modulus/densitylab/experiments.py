"""Monte Carlo tail experiments: continuity, density tails, intersection tails, quadtree sets.

Every experiment returns a TailReport that pairs the empirical exceedance rate with the
asymptotic bound it is compared against. The comparison is reported, never asserted.
"""

import csv
import json
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, TypeVar

import numpy as np

from moser_modulus.config import Config, Messages
from moser_modulus.densitylab.layers import (
    CellLayer,
    net_search,
    orthogonal_for_direction,
    per_cell_measure,
)
from moser_modulus.densitylab.measures import (
    LayerLike,
    as_layer,
    dyadic_partition,
    sup_density_net,
    sup_intersection_net,
)
from moser_modulus.densitylab.params import DensityParams
from moser_modulus.errors import ArtifactIOError, PreconditionError, ValidationError
from moser_modulus.geometry import (
    Isometry,
    IsometryKind,
    Point,
    SquareUnion,
    build_net,
    iso_distance,
)
from moser_modulus.geometry.isometry import TWO_PI, orthogonal_matrix
from moser_modulus.geometry.net import C_NET
from moser_modulus.logging_config import experiment_latency, get_logger, trials_completed
from moser_modulus.wormgraphs import MkSequence, build_sequence, quadtree_sample, sample_omega

# Set up structured logger for this module
logger = get_logger(__name__)

T = TypeVar("T")

IDENTICAL_PAIR_EVERY = 10
AD_DEFAULT_DELTA = 0.25


@dataclass
class TailReport:
    """Outcome of one tail experiment.

    Features:
    - Exceedance count against a threshold, with the bound it is compared to
    - Measured constants (C_net, C_cont, C_b, ...) kept next to the parameters
    - Per-trial rows for CSV export
    """

    experiment: str
    trials: int
    exceed_count: int
    threshold: float
    reference_bound: Optional[float]
    parameters: dict[str, Any]
    statistics: dict[str, Any] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def empirical_rate(self) -> float:
        return self.exceed_count / self.trials if self.trials else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "trials": self.trials,
            "exceed_count": self.exceed_count,
            "empirical_rate": self.empirical_rate,
            "threshold": self.threshold,
            "reference_bound": self.reference_bound,
            "parameters": self.parameters,
            "statistics": self.statistics,
            "constants": self.constants,
            "notes": self.notes,
        }

    def write_json(self, path: Path) -> Path:
        try:
            path.write_text(json.dumps(self.to_dict(), indent=2, default=float))
        except OSError as e:
            raise ArtifactIOError(f"cannot write {path}: {e}") from e
        return path

    def write_csv(self, path: Path) -> Path:
        """One line per trial; columns are the union of the row keys."""
        columns: list[str] = []
        for row in self.rows:
            columns.extend(key for key in row if key not in columns)
        try:
            with path.open("w", newline="") as handle:
                writer = csv.DictWriter(handle, fieldnames=columns)
                writer.writeheader()
                writer.writerows(self.rows)
        except OSError as e:
            raise ArtifactIOError(f"cannot write {path}: {e}") from e
        return path


def trial_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index``."""
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _run(executor: Optional[Executor], fn: Callable[[int], T], count: int) -> list[T]:
    """Map ``fn`` over trial indices, keeping index order."""
    if executor is None:
        return [fn(i) for i in range(count)]
    return list(executor.map(fn, range(count)))


def _check_trials(trials: int) -> None:
    if not isinstance(trials, int) or trials < 1:
        raise ValidationError("trials", f"must be a positive integer, got {trials}")


def _quantiles(values: Iterable[float]) -> dict[str, float]:
    arr = np.asarray(list(values), dtype=float)
    if not len(arr):
        return {}
    return {
        "max": float(arr.max()),
        "mean": float(arr.mean()),
        "median": float(np.quantile(arr, 0.5)),
        "q90": float(np.quantile(arr, 0.9)),
        "q99": float(np.quantile(arr, 0.99)),
    }


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _random_point(E: SquareUnion, rng: np.random.Generator) -> np.ndarray:
    x0, y0, x1, y1 = E.rectangles[int(rng.integers(len(E.rectangles)))]
    return np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])


def _placing(kind: IsometryKind, angle: float, source: np.ndarray,
             target: np.ndarray) -> Isometry:
    """The isometry with linear part (kind, angle) sending ``source`` to ``target``."""
    v = source - orthogonal_matrix(kind, angle).T @ target
    return Isometry(kind, angle, Point(float(v[0]), float(v[1])))


def _continuity_pair(layer: CellLayer, E: SquareUnion, index: int, rng: np.random.Generator,
                     include_reflections: bool) -> tuple[Isometry, Isometry, bool]:
    kind = (IsometryKind.REFLECTION if include_reflections and rng.random() < 0.5
            else IsometryKind.ROTATION)
    cell = int(rng.integers(len(layer)))
    center = layer.centers[cell]
    if index % 2 == 0:
        # an edge of E laid along the cell, then pushed across it
        x0, y0, x1, _ = E.rectangles[0]
        phi = float(layer.directions[cell])
        angle = orthogonal_for_direction(kind, 0.0, phi)
        iota1 = _placing(kind, angle, np.array([(x0 + x1) / 2, y0]), center)
        size = _log_uniform(rng, layer.thickness / 50, layer.thickness / 2)
        normal = np.array([-math.sin(phi), math.cos(phi)])
        return iota1, iota1.then_translate(size * normal), True
    angle = float(rng.uniform(0.0, TWO_PI))
    iota1 = _placing(kind, angle, _random_point(E, rng), center)
    scale = _log_uniform(rng, layer.thickness / 50, layer.cell_width)
    turn = scale * float(rng.choice([-1.0, 1.0]))
    move = scale * rng.standard_normal(2) / math.sqrt(2)
    iota2 = Isometry(kind, angle + turn, Point(iota1.translation.x + move[0],
                                               iota1.translation.y + move[1]))
    return iota1, iota2, False


def continuity_experiment(g: LayerLike, E: SquareUnion, trials: int, rng: np.random.Generator,
                          include_reflections: Optional[bool] = None,
                          reference: float = 2.0) -> TailReport:
    """Measure ``max_T |T ∩ iota1(E)| - |T ∩ iota2(E)|`` against ``width * ||iota1 - iota2||``.

    Pairs alternate between edge-aligned placements (the extremal case, an edge of E
    along a cell and translated across it) and random nearby pairs; every tenth pair
    repeats the same isometry.

    Returns:
        TailReport whose ``constants["C_cont"]`` is the largest ratio seen
    """
    _check_trials(trials)
    if E.is_empty:
        raise ValidationError("E", "continuity needs a nonempty set")
    layer = as_layer(g)
    if include_reflections is None:
        include_reflections = Config.INCLUDE_REFLECTIONS
    ratios: list[float] = []
    rows: list[dict[str, Any]] = []
    with experiment_latency.time():
        for i in range(trials):
            iota1, iota2, aligned = _continuity_pair(layer, E, i, rng, include_reflections)
            if i % IDENTICAL_PAIR_EVERY == 0:
                iota2 = iota1
            distance = iso_distance(iota1, iota2)
            if distance == 0.0:
                ratio = 0.0
            else:
                delta = per_cell_measure(layer, E, iota1) - per_cell_measure(layer, E, iota2)
                ratio = float(np.max(np.abs(delta))) / (layer.cell_width * distance)
            ratios.append(ratio)
            rows.append({"trial": i, "kind": iota1.kind.value, "aligned": aligned,
                         "distance": distance, "ratio": ratio})
            trials_completed.inc()
    c_cont = max(ratios)
    report = TailReport(
        experiment="continuity",
        trials=trials,
        exceed_count=sum(r > reference for r in ratios),
        threshold=reference,
        reference_bound=None,
        parameters={"cells": len(layer), "cell_width": layer.cell_width,
                    "include_reflections": include_reflections},
        statistics=_quantiles(ratios),
        constants={"C_cont": c_cont},
        rows=rows,
    )
    logger.info("continuity_measured", trials=trials, c_cont=c_cont)
    return report


def proof_delta(params: DensityParams, seq: MkSequence, k: int, c_cont: float) -> float:
    """``epsilon**(1/3-kappa) / (2 C n_k (k - k_eps + 1)**2)``, with the last factor at least 1."""
    offset = max(k - params.k_eps + 1, 1)
    return params.threshold / (2.0 * max(c_cont, 1e-12) * seq.n[k] * offset**2)


def _resolve_delta(requested: Optional[float], proof: float) -> float:
    value = proof if requested is None else requested
    return min(1.0, max(value, Config.MIN_NET_DELTA))


def _check_depth(K: int, limit: int) -> None:
    if not isinstance(K, int) or not 1 <= K <= limit:
        raise ValidationError("K", f"must lie in [1, {limit}], got {K}")


def density_tail_experiment(E: SquareUnion, params: DensityParams, K: int,
                            delta: Optional[float], trials: int, seed: int = 0,
                            executor: Optional[Executor] = None,
                            c_cont: float = 1.0) -> TailReport:
    """Count samples with ``max_{k <= K} sup_iota D_{iota(E)}(G_k) >= epsilon**(1/3-kappa)``.

    Args:
        E: Test set with ``|E| <= epsilon``
        params: epsilon, kappa, k_eps
        K: Truncation depth of the sup over k
        delta: Net resolution; None uses the proof's choice per depth
        trials: Number of sampled graphs
        seed: Base seed; trial i uses ``trial_seed(seed, i)``
        executor: Optional pool the trials are mapped on
        c_cont: Continuity constant entering the proof's resolution

    Raises:
        ValidationError: On bad trials or K
        PreconditionError: If ``|E| > epsilon``
    """
    _check_trials(trials)
    _check_depth(K, Config.MAX_DEPTH)
    if E.area > params.epsilon:
        raise PreconditionError(f"|E| = {E.area:.6g} exceeds epsilon = {params.epsilon:.6g}")
    if E.is_empty:
        raise ValidationError("E", "density tails need a nonempty set")
    seq = build_sequence(K)
    deltas = {k: _resolve_delta(delta, proof_delta(params, seq, k, c_cont))
              for k in range(1, K + 1)}
    threshold = params.threshold

    def one_trial(i: int) -> dict[str, Any]:
        s = trial_seed(seed, i)
        w = sample_omega(K, s)
        values = [sup_density_net(w.gens[k], E, deltas[k])[0] for k in range(1, K + 1)]
        trials_completed.inc()
        best_k = int(np.argmax(values)) + 1
        # sup over k <= k_eps; values[0] is k = 1
        early = max(values[: params.k_eps], default=0.0)
        return {"trial": i, "seed": s, "max_density": max(values), "argmax_k": best_k,
                "max_up_to_k_eps": early}

    with experiment_latency.time():
        rows = _run(executor, one_trial, trials)

    notes = [Messages.TRUNCATED_SUP.format(K=K)]
    if K < params.k_eps:
        notes.append(Messages.BELOW_K_EPS.format(K=K, k_eps=params.k_eps))
    if not params.dyadic_exact:
        notes.append(Messages.DYADIC_INEXACT.format(
            value=float((2 + params.kappa) / 3) * -math.log2(params.epsilon)))
    if delta is not None and deltas[K] != delta:
        notes.append(Messages.DELTA_CLAMPED.format(requested=delta, used=deltas[K]))

    maxima = [r["max_density"] for r in rows]
    early = [r["max_up_to_k_eps"] for r in rows]
    finest = min(deltas.values())
    report = TailReport(
        experiment="density_tail",
        trials=trials,
        exceed_count=sum(v >= threshold for v in maxima),
        threshold=threshold,
        reference_bound=params.epsilon**3,
        parameters={**params.to_dict(), "K": K, "delta": delta, "seed": seed,
                    "E": E.to_spec(), "deltas": {str(k): d for k, d in deltas.items()}},
        statistics={**_quantiles(maxima),
                    "exceed_up_to_k_eps": sum(v >= threshold for v in early),
                    "max_up_to_k_eps": max(early)},
        constants={"C_cont": c_cont, "C_net": len(build_net(finest, E.anchor)) * finest**3,
                   "C_net_ceiling": C_NET},
        notes=notes,
        rows=rows,
    )
    logger.info("density_tail_done", trials=trials, exceed=report.exceed_count,
                rate=report.empirical_rate)
    return report


def intersection_tail_experiment(E: SquareUnion, params: DensityParams, K: int,
                                 delta: Optional[float], trials: int, seed: int = 0,
                                 executor: Optional[Executor] = None) -> TailReport:
    """Count samples with ``sup_iota H1(polyline ∩ iota(E)) > epsilon**(1/3-kappa)``.

    The polyline is the depth-K graph approximation. Reports the class sizes of the
    dyadic partition of E, and the sharper ``epsilon**2`` bound when ``diam(E) <= 2``.

    Raises:
        PreconditionError: If ``|E| >= epsilon``
    """
    _check_trials(trials)
    _check_depth(K, Config.MAX_DEPTH)
    partition = dyadic_partition(E, params.epsilon)
    resolved = _resolve_delta(delta, params.threshold / 4)
    threshold = params.threshold

    def one_trial(i: int) -> dict[str, Any]:
        s = trial_seed(seed, i)
        w = sample_omega(K, s)
        value, best = sup_intersection_net(w, K, E, resolved)
        trials_completed.inc()
        return {"trial": i, "seed": s, "max_length": value, "angle": best.angle,
                "tx": best.translation.x, "ty": best.translation.y}

    with experiment_latency.time():
        rows = _run(executor, one_trial, trials)

    lengths = [r["max_length"] for r in rows]
    statistics: dict[str, Any] = {
        **_quantiles(lengths),
        "dyadic_classes": {str(j): c for j, c in partition.counts().items()},
        "null_squares": len(partition.null_squares),
    }
    if not E.is_empty and E.diameter <= 2.0:
        statistics["small_diameter_bound"] = params.epsilon**2
    notes = [Messages.TRUNCATED_SUP.format(K=K)]
    if delta is not None and resolved != delta:
        notes.append(Messages.DELTA_CLAMPED.format(requested=delta, used=resolved))
    report = TailReport(
        experiment="intersection_tail",
        trials=trials,
        exceed_count=sum(v > threshold for v in lengths),
        threshold=threshold,
        reference_bound=params.epsilon,
        parameters={**params.to_dict(), "K": K, "delta": resolved, "seed": seed,
                    "E": E.to_spec()},
        statistics=statistics,
        constants={"C_net": (len(build_net(resolved, E.anchor)) * resolved**3
                             if not E.is_empty else 0.0)},
        notes=notes,
        rows=rows,
    )
    logger.info("intersection_tail_done", trials=trials, exceed=report.exceed_count,
                rate=report.empirical_rate)
    return report


def ad_density_experiment(E: SquareUnion, params: DensityParams, depth: int,
                          delta: Optional[float], trials: int, seed: int = 0,
                          executor: Optional[Executor] = None) -> TailReport:
    """Density tails inside random quadtree sets, threshold ``epsilon**(1/2-kappa)``.

    Each trial samples a quadtree set and takes the net sup of the density of
    ``iota(E)`` over every level ``1..depth``.
    """
    _check_trials(trials)
    _check_depth(depth, Config.QUADTREE_MAX_DEPTH)
    if E.is_empty:
        raise ValidationError("E", "density tails need a nonempty set")
    if E.area > params.epsilon:
        raise PreconditionError(f"|E| = {E.area:.6g} exceeds epsilon = {params.epsilon:.6g}")
    resolved = _resolve_delta(delta, AD_DEFAULT_DELTA)
    net = build_net(resolved, E.anchor)
    threshold = params.ad_threshold

    def one_trial(i: int) -> dict[str, Any]:
        s = trial_seed(seed, i)
        qt = quadtree_sample(depth, s)
        values = [net_search(CellLayer.from_quadtree(qt, level), E, net)[0]
                  for level in range(1, depth + 1)]
        trials_completed.inc()
        return {"trial": i, "seed": s, "max_density": max(values),
                "argmax_level": int(np.argmax(values)) + 1}

    with experiment_latency.time():
        rows = _run(executor, one_trial, trials)

    maxima = [r["max_density"] for r in rows]
    report = TailReport(
        experiment="ad_density_tail",
        trials=trials,
        exceed_count=sum(v >= threshold for v in maxima),
        threshold=threshold,
        reference_bound=None,
        parameters={**params.to_dict(), "depth": depth, "delta": resolved, "seed": seed,
                    "E": E.to_spec()},
        statistics=_quantiles(maxima),
        constants={"C_net": net.constant},
        notes=[Messages.TRUNCATED_SUP.format(K=depth)],
        rows=rows,
    )
    logger.info("ad_density_tail_done", trials=trials, exceed=report.exceed_count)
    return report

"""Subcommands of the ``moser-modulus`` command line.

Every command validates its configuration first, writes its outputs under
``out_dir``, and finishes with a run manifest listing the digest of each output.
Library errors map to exit codes: 2 for invalid input, 3 for solver
non-convergence, 4 for file I/O.
"""

import argparse
import json
import math
import sys
from concurrent.futures import Executor, ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from moser_modulus import __version__
from moser_modulus.cli.manifest import RunManifest
from moser_modulus.cli.options import COMMANDS, ExperimentConfig
from moser_modulus.config import Messages
from moser_modulus.densitylab import (
    continuity_experiment,
    density_tail_experiment,
    hoeffding_table,
    hoeffding_validation,
    intersection_tail_experiment,
    k_eps_condition,
    make_params,
    r_schedule,
    shift_transfer_check,
    trial_seed,
)
from moser_modulus.errors import (
    ArtifactIOError,
    ConstructionError,
    ModulusConvergenceError,
    PreconditionError,
    ValidationError,
)
from moser_modulus.logging_config import (
    bind_run_context,
    clear_run_context,
    error_counter,
    get_logger,
    start_metrics_server,
)
from moser_modulus.modulus import (
    Grid,
    graph_family,
    modulus_trend,
    moser_probe,
    solve_modulus,
    witness_check,
)
from moser_modulus.modulus.io import (
    heatmap_svg,
    read_instance,
    write_json,
    write_result,
    write_trace_csv,
)
from moser_modulus.wormgraphs import audit_generation, build_sequence, sample_omega
from moser_modulus.wormgraphs.serialization import generation_svg, omega_to_json

# Set up structured logger for this module
logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

CONTINUITY_TRIALS = 50
CONTINUITY_DEPTH = 8
WITNESS_SAMPLES = 5


def _output_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(f"cannot create {out}: {e}") from e
    return out


def _emit(manifest: RunManifest, out: Path, name: str, data: dict[str, Any]) -> Path:
    path = write_json(out / name, data)
    manifest.add_output(path, out)
    return path


def cmd_gen(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Sample ``seeds`` consecutive seeds at ``depth``; write JSON and an SVG per sample."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    seeds = [config.seed + i for i in range(config.seeds)]

    def one(seed: int) -> Any:
        w = sample_omega(config.depth, seed)
        problems = [p for k in range(1, w.depth + 1)
                    for p in audit_generation(w.gens[k], w.seq, w.gens[k - 1])]
        return w, problems

    samples = list(executor.map(one, seeds)) if executor else [one(s) for s in seeds]
    violations = 0
    for seed, (w, problems) in zip(seeds, samples):
        if problems:
            violations += len(problems)
            logger.warning("audit_failed", seed=seed, problems=problems[:5])
        path = out / f"omega_{seed}.json"
        try:
            path.write_text(json.dumps(omega_to_json(w), indent=2))
        except OSError as e:
            raise ArtifactIOError(f"cannot write {path}: {e}") from e
        manifest.add_output(path, out)
        svg = generation_svg(w.gens[-1], out / f"generation_{seed}.svg",
                             stretch=config.svg_stretch)
        manifest.add_output(svg, out)
    manifest.seeds = seeds
    manifest.constants = {"audit_violations": float(violations)}
    print(f"gen: {len(seeds)} samples at depth {config.depth}, "
          f"{violations} audit violations -> {out}")
    return manifest


def _measure_continuity(config: ExperimentConfig, K: int) -> tuple[float, dict[str, Any]]:
    E = config.test_set()
    depth = min(K, CONTINUITY_DEPTH)
    w = sample_omega(depth, trial_seed(config.seed, 2**32))
    report = continuity_experiment(w.gens[depth], E, CONTINUITY_TRIALS,
                                   np.random.default_rng(config.seed))
    return report.constants["C_cont"], report.to_dict()


def cmd_density(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Density tail experiment with a measured continuity constant."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    E = config.test_set()
    params = make_params(config.epsilon, config.kappa)
    K = config.K if config.K is not None else min(params.k_eps + 3, config.depth or 1)
    c_cont, continuity = _measure_continuity(config, K)
    report = density_tail_experiment(E, params, K, config.delta, config.trials, config.seed,
                                     executor, c_cont=c_cont)
    seq = build_sequence(K)
    schedule = r_schedule(params, max(K, params.k_eps))
    _emit(manifest, out, "density_tail.json", report.to_dict())
    manifest.add_output(report.write_csv(out / "density_tail.csv"), out)
    _emit(manifest, out, "continuity.json", continuity)
    _emit(manifest, out, "k_eps_condition.json", {
        "rows": [row._asdict() for row in k_eps_condition(seq, params, K)],
        "r_schedule": list(schedule.values),
    })
    manifest.seeds = [r["seed"] for r in report.rows]
    manifest.constants = {k: float(v) for k, v in report.constants.items()}
    print(f"density: {report.exceed_count}/{report.trials} exceed "
          f"{report.threshold:.4g} (rate {report.empirical_rate:.4g}, "
          f"bound {report.reference_bound:.3g})")
    return manifest


def cmd_intersect(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Intersection tail experiment plus one shift-transfer measurement."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    E = config.test_set()
    params = make_params(config.epsilon, config.kappa)
    K = config.K if config.K is not None else max(config.depth, 1)
    report = intersection_tail_experiment(E, params, K, config.delta, config.trials,
                                          config.seed, executor)
    _emit(manifest, out, "intersection_tail.json", report.to_dict())
    manifest.add_output(report.write_csv(out / "intersection_tail.csv"), out)
    if not E.is_empty:
        side = min(min(x1 - x0, y1 - y0) for x0, y0, x1, y1 in E.clipped_squares)
        k = max(1, min(K, math.floor(-math.log2(side)) + 1))
        shift = shift_transfer_check(sample_omega(K, trial_seed(config.seed, 0)), k, E)
        _emit(manifest, out, "shift_transfer.json",
              {**shift.__dict__, "ratio": shift.ratio, "length_per_cells": shift.length_per_cells})
    manifest.seeds = [r["seed"] for r in report.rows]
    manifest.constants = {k: float(v) for k, v in report.constants.items()}
    print(f"intersect: {report.exceed_count}/{report.trials} exceed "
          f"{report.threshold:.4g} (rate {report.empirical_rate:.4g})")
    return manifest


def cmd_modulus(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Solve the modulus of an instance file; optionally a trend over grid sizes."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    fam, grid, p = read_instance(Path(str(config.instance)))
    result = solve_modulus(fam, grid, p, config.tol)
    manifest.add_output(write_result(out / "result.json", result), out)
    manifest.add_output(write_trace_csv(out / "trace.csv", result), out)
    manifest.add_output(heatmap_svg(result.density, out / "density.svg", fam), out)
    if config.resolutions:
        trend = modulus_trend(fam, p, config.resolutions, config.tol)
        _emit(manifest, out, "trend.json", {
            "resolutions": list(trend.resolutions), "values": list(trend.values),
            "dual_bounds": list(trend.dual_bounds),
            "strictly_decreasing": trend.strictly_decreasing,
        })
    manifest.constants = {"value": result.value, "dual_bound": result.dual_bound}
    print(f"modulus: mod_{p:g} = {result.value:.6g} (dual bound {result.dual_bound:.6g}, "
          f"N = {grid.resolution}, {len(fam)} curves)")
    return manifest


def cmd_probe(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Moser probe with refinement and witness samples."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    report = moser_probe(config.p, config.graphs, config.depth, Grid(config.grid), config.seed,
                         config.iso_mode, config.tol, executor=executor)
    summary = report.to_dict()
    witnesses = []
    fam = graph_family(min(config.graphs, WITNESS_SAMPLES), config.depth, config.seed,
                       report.iso_mode)
    for i, curve in enumerate(fam.curves):
        w = witness_check(report.result.density, curve)
        witnesses.append({"curve": i, "integral": w.integral, "ok": w.ok, "j_star": w.j_star,
                          "value": w.value, "summable_j": w.summable_j, "notes": w.notes})
    summary["witnesses"] = witnesses
    _emit(manifest, out, "probe.json", summary)
    manifest.add_output(write_result(out / "result.json", report.result), out)
    manifest.add_output(heatmap_svg(report.result.density, out / "density.svg"), out)
    manifest.seeds = [trial_seed(config.seed, i) for i in range(config.graphs)]
    manifest.constants = {"value": report.result.value}
    for note in report.notes:
        print(f"note: {note}")
    print(f"probe: mod_{config.p:g} = {report.result.value:.6g} at N = {config.grid}"
          + (f", ratio at 2N {report.refinement_ratio:.4g}" if report.refinement_ratio else ""))
    return manifest


def cmd_hoeffding(config: ExperimentConfig, executor: Optional[Executor] = None) -> RunManifest:
    """Bound table and an empirical check of the bound for each n."""
    out = _output_dir(config)
    manifest = RunManifest(config.command, config.to_dict())
    rng = np.random.default_rng(config.seed)
    table = [row._asdict() for row in hoeffding_table(config.n_values, config.t_values)]
    checks = {str(n): [row._asdict() for row in
                       hoeffding_validation(n, config.batches, config.t_values, rng)]
              for n in config.n_values}
    _emit(manifest, out, "hoeffding.json", {"table": table, "validation": checks})
    manifest.seeds = [config.seed]
    held = all(row["holds"] for rows in checks.values() for row in rows)
    print(f"hoeffding: {len(table)} bounds, empirical tails below bound: {held}")
    return manifest


HANDLERS: dict[str, Callable[[ExperimentConfig, Optional[Executor]], RunManifest]] = {
    "gen": cmd_gen,
    "density": cmd_density,
    "intersect": cmd_intersect,
    "modulus": cmd_modulus,
    "probe": cmd_probe,
    "hoeffding": cmd_hoeffding,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with configuration keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--seeds", type=int, help="number of consecutive seeds (gen)")
    common.add_argument("--depth", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("-K", dest="K", type=int, help="truncation depth of the sup over k")
    common.add_argument("--delta", type=float, help="net resolution")
    common.add_argument("--trials", type=int)
    common.add_argument("--grid", type=int, help="grid resolution N")
    common.add_argument("--p", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--iso-mode", dest="iso_mode", choices=["identity", "random", "net"])
    common.add_argument("--graphs", type=int, help="graph count (probe)")
    common.add_argument("--instance", help="instance JSON (modulus)")
    common.add_argument("--resolutions", type=int, nargs="+", help="grid sizes for a trend")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--threads", type=int)
    common.add_argument("--metrics-port", dest="metrics_port", type=int)

    parser = argparse.ArgumentParser(prog="moser-modulus",
                                     description="Random Lipschitz graphs and curve moduli")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=(HANDLERS[name].__doc__ or "").split("\n")[0])
    return parser


def run(config: ExperimentConfig) -> RunManifest:
    """Execute one validated configuration on a worker pool and write its manifest."""
    start_metrics_server(config.metrics_port)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        manifest = HANDLERS[config.command](config, pool)
    manifest.write(Path(config.out_dir))
    return manifest


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command, and map errors to exit codes."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    bind_run_context(command=command)
    try:
        return _dispatch(command, config_path, args)
    finally:
        clear_run_context()


def _dispatch(command: str, config_path: Optional[str], args: dict[str, Any]) -> int:
    try:
        config = ExperimentConfig.from_sources(command, config_path, args)
        logger.info("command_started", seed=config.seed)
        run(config)
    except (ValidationError, PreconditionError, ConstructionError) as e:
        error_counter.inc()
        logger.exception("command_rejected", error=str(e))
        key = getattr(e, "key", "input")
        reason = getattr(e, "reason", str(e))
        print(Messages.VALIDATION_FAILED.format(key=key, reason=reason), file=sys.stderr)
        return EXIT_VALIDATION
    except ModulusConvergenceError as e:
        error_counter.inc()
        logger.exception("command_not_converged")
        print(Messages.NOT_CONVERGED.format(value=e.value, dual=e.dual_bound), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ArtifactIOError as e:
        error_counter.inc()
        logger.exception("command_io_failed")
        print(Messages.IO_FAILED.format(error=e), file=sys.stderr)
        return EXIT_IO
    except Exception as e:
        error_counter.inc()
        logger.exception("command_failed")
        print(Messages.UNKNOWN_ERROR.format(error=e), file=sys.stderr)
        return EXIT_FAILURE
    logger.info("command_finished")
    return EXIT_OK

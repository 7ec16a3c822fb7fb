"""Run configuration: a JSON file plus command-line overrides, validated up front."""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from moser_modulus.config import Config
from moser_modulus.errors import ArtifactIOError, ValidationError
from moser_modulus.geometry import SquareUnion
from moser_modulus.logging_config import get_logger
from moser_modulus.modulus.probes import IsoMode

# Set up structured logger for this module
logger = get_logger(__name__)

COMMANDS = ("gen", "density", "intersect", "modulus", "probe", "hoeffding")
SEED_LIMIT = 2**64


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob a run can set; flags override the config file.

    Features:
    - Unknown keys rejected with the key named
    - All ranges checked before any computation starts
    - ``to_dict`` echo for the run manifest
    """

    command: str
    seed: int = 0
    seeds: int = 1
    depth: int = Config.DEFAULT_DEPTH
    epsilon: float = 2.0**-12
    kappa: float = 1.0 / 12.0
    K: Optional[int] = None
    delta: Optional[float] = None
    trials: int = 10
    grid: int = 128
    p: float = 4.0
    tol: float = Config.SOLVER_TOL
    iso_mode: str = IsoMode.IDENTITY.value
    graphs: int = 8
    E: Optional[list[list[float]]] = None
    instance: Optional[str] = None
    resolutions: list[int] = field(default_factory=list)
    n_values: list[int] = field(default_factory=lambda: [10, 50, 100])
    t_values: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    batches: int = 100_000
    svg_stretch: float = 1.0
    out_dir: str = Config.OUT_DIR
    threads: int = Config.THREADS
    metrics_port: int = Config.METRICS_PORT

    @classmethod
    def keys(cls) -> set[str]:
        return {f.name for f in fields(cls)}

    @classmethod
    def from_sources(cls, command: str, config_path: Optional[str] = None,
                     overrides: Optional[Mapping[str, Any]] = None) -> "ExperimentConfig":
        """Merge file values and non-None overrides, then validate.

        Raises:
            ArtifactIOError: If the config file cannot be read
            ValidationError: On unknown keys, malformed JSON or out-of-range values
        """
        values: dict[str, Any] = {}
        if config_path:
            try:
                text = Path(config_path).read_text()
            except OSError as e:
                raise ArtifactIOError(f"cannot read config {config_path}: {e}") from e
            try:
                loaded = json.loads(text)
            except json.JSONDecodeError as e:
                raise ValidationError("config", f"not valid JSON: {e}") from e
            if not isinstance(loaded, dict):
                raise ValidationError("config", "top level must be an object")
            values.update(loaded)
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        values["command"] = command
        unknown = sorted(set(values) - cls.keys())
        if unknown:
            raise ValidationError(unknown[0], "unknown configuration key")
        try:
            config = cls(**values)
        except TypeError as e:
            raise ValidationError("config", str(e)) from e
        config.validate()
        logger.debug("experiment_config_loaded", command=command, source=config_path)
        return config

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        config = replace(self, **changes)
        config.validate()
        return config

    def validate(self) -> None:
        """Raise ValidationError naming the first offending key."""
        _check(self.command in COMMANDS, "command", f"must be one of {COMMANDS}")
        _check(_is_int(self.seed) and 0 <= self.seed < SEED_LIMIT, "seed",
               "must be an integer in [0, 2**64)")
        _check(_is_int(self.seeds) and self.seeds >= 1, "seeds", "must be a positive integer")
        _check(_is_int(self.depth) and 0 <= self.depth <= Config.MAX_DEPTH, "depth",
               f"must be an integer in [0, {Config.MAX_DEPTH}]")
        _check(_is_real(self.epsilon) and 0 < self.epsilon < 1, "epsilon", "must lie in (0, 1)")
        _check(_is_real(self.kappa) and 0 < self.kappa <= 1 / 3 + 1e-12, "kappa",
               "must lie in (0, 1/3]")
        if self.K is not None:
            _check(_is_int(self.K) and 1 <= self.K <= Config.MAX_DEPTH, "K",
                   f"must be an integer in [1, {Config.MAX_DEPTH}]")
        if self.delta is not None:
            _check(_is_real(self.delta) and 0 < self.delta <= 1, "delta", "must lie in (0, 1]")
        _check(_is_int(self.trials) and self.trials >= 1, "trials", "must be a positive integer")
        _check(_is_int(self.grid) and self.grid >= 2, "grid", "must be an integer >= 2")
        _check(_is_real(self.p) and self.p > 1, "p", "must exceed 1")
        _check(_is_real(self.tol) and self.tol > 0, "tol", "must be positive")
        _check(self.iso_mode in {m.value for m in IsoMode}, "iso_mode",
               f"must be one of {[m.value for m in IsoMode]}")
        _check(_is_int(self.graphs) and self.graphs >= 1, "graphs", "must be a positive integer")
        _check(all(_is_int(n) and n >= 2 for n in self.resolutions), "resolutions",
               "grid sizes must be integers >= 2")
        _check(all(_is_int(n) and n >= 1 for n in self.n_values), "n_values",
               "must be positive integers")
        _check(all(_is_real(t) and t > 0 for t in self.t_values), "t_values", "must be positive")
        _check(_is_int(self.batches) and self.batches >= 1, "batches", "must be positive")
        _check(_is_real(self.svg_stretch) and self.svg_stretch > 0, "svg_stretch",
               "must be positive")
        _check(_is_int(self.threads) and self.threads >= 1, "threads", "must be positive")
        _check(_is_int(self.metrics_port) and 0 <= self.metrics_port <= 65535, "metrics_port",
               "must lie in [0, 65535]")
        if self.E is not None:
            self.test_set()
        if self.command in ("density", "intersect"):
            self._check_test_set_mass()
        if self.command == "modulus":
            _check(bool(self.instance), "instance", "the modulus command needs an instance file")

    def test_set(self) -> SquareUnion:
        """The configured E, or a centred square of area ``epsilon / 2``."""
        if self.E is None:
            side = math.sqrt(self.epsilon / 2)
            return SquareUnion.of(((0.5 - side / 2, 0.5 - side / 2), side))
        if not isinstance(self.E, list) or not self.E:
            raise ValidationError("E", "expected a nonempty list of [x, y, side]")
        return SquareUnion.from_spec(self.E)

    def _check_test_set_mass(self) -> None:
        # density tails allow |E| = epsilon, dyadic partitions need |E| < epsilon
        E = self.test_set()
        _check(not E.is_empty, "E", "needs positive area")
        fits = E.area <= self.epsilon if self.command == "density" else E.area < self.epsilon
        _check(fits, "E", f"|E| = {E.area:.6g} is too large for epsilon = {self.epsilon:.6g}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _check(ok: bool, key: str, reason: str) -> None:
    if not ok:
        raise ValidationError(key, reason)

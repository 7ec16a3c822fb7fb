"""
Configuration management for moser-modulus
"""
import os
from typing import Callable, Optional, TypeVar

T = TypeVar("T")


def safe_convert(value: Optional[str], convert_fn: Callable[[str], T], default: T) -> T:
    """Safely convert a string value to target type, returning default if conversion fails."""
    if value is None:
        return default
    try:
        return convert_fn(value)
    except (ValueError, TypeError):
        return default


def parse_bool(value: Optional[str], default: bool = True) -> bool:
    """Parse string to boolean, handling common boolean string representations."""
    if value is None:
        return default
    value = value.lower().strip()
    if value in ("true", "1", "yes", "on", "t", "y"):
        return True
    if value in ("false", "0", "no", "off", "f", "n"):
        return False
    return default


class Config:
    """Centralized configuration with environment variable support"""

    # Construction limits
    DEFAULT_DEPTH = safe_convert(os.getenv("MOSER_DEFAULT_DEPTH"), int, 12)
    MAX_DEPTH = safe_convert(os.getenv("MOSER_MAX_DEPTH"), int, 24)
    QUADTREE_MAX_DEPTH = safe_convert(os.getenv("MOSER_QUADTREE_MAX_DEPTH"), int, 16)

    # Geometry
    NET_RADIUS = safe_convert(os.getenv("MOSER_NET_RADIUS"), float, 10.0)
    MIN_NET_DELTA = safe_convert(os.getenv("MOSER_MIN_NET_DELTA"), float, 1.0 / 32.0)
    CLIP_BOX_HALF = safe_convert(os.getenv("MOSER_CLIP_BOX_HALF"), float, 15.0)

    # Solver
    SOLVER_TOL = safe_convert(os.getenv("MOSER_SOLVER_TOL"), float, 1e-3)
    SOLVER_MAX_ITER = safe_convert(os.getenv("MOSER_SOLVER_MAX_ITER"), int, 100_000)
    GENERATION_BATCH = safe_convert(os.getenv("MOSER_GENERATION_BATCH"), int, 16)

    # Runtime
    THREADS = safe_convert(os.getenv("MOSER_THREADS"), int, os.cpu_count() or 1)
    OUT_DIR = os.getenv("MOSER_OUT_DIR", "runs")
    METRICS_PORT = safe_convert(os.getenv("MOSER_METRICS_PORT"), int, 0)
    LOG_LEVEL = os.getenv("MOSER_LOG_LEVEL", "INFO")
    INCLUDE_REFLECTIONS = parse_bool(os.getenv("MOSER_INCLUDE_REFLECTIONS"), True)


# Log configuration loading (avoid circular import by doing this at the end)
def _log_config_loading() -> None:
    """Log configuration values after module is fully loaded"""
    try:
        from moser_modulus.logging_config import get_logger, set_log_level

        set_log_level(Config.LOG_LEVEL)
        logger = get_logger(__name__)
        logger.debug("configuration_loaded",
                     default_depth=Config.DEFAULT_DEPTH,
                     max_depth=Config.MAX_DEPTH,
                     solver_tol=Config.SOLVER_TOL,
                     threads=Config.THREADS)
    except ImportError:
        # Fallback if logging not available during imports
        pass


# Call after class definition to avoid circular imports
_log_config_loading()


class Messages:
    """Report and command-line message templates"""

    OUTSIDE_THEOREM_RANGE = "p = {p} is outside the theorem's range p > 3; value is exploratory"
    EXPLORATORY_NET = "iso_mode = net places each graph under the 8 symmetries of the square; exploratory"
    DELTA_CLAMPED = "net resolution {requested:.3g} clamped to {used:.3g}"
    TRUNCATED_SUP = "sup over k truncated at K = {K}"
    BELOW_K_EPS = "K = {K} < k_eps = {k_eps}: only the trivial-bound range is sampled"
    DYADIC_INEXACT = "(2+kappa)/3 * log2(1/epsilon) = {value:.6g} is not an integer; k_eps rounded up"
    LARGE_DIAMETER = "diam(E) = {diam:.3g} exceeds 2; net search still runs"
    INTEGRAL_BELOW_ONE = "line integral {value:.6g} < 1: density not admissible for this curve"
    WITNESS_STRICT_MISSED = "no j with length >= 2^-j; summable witness used instead"

    # Command-line errors
    VALIDATION_FAILED = "invalid configuration: {key}: {reason}"
    IO_FAILED = "I/O failure: {error}"
    NOT_CONVERGED = "solver did not converge: best value {value:.6g}, dual bound {dual:.6g}"
    UNKNOWN_ERROR = "Something went wrong: {error}"

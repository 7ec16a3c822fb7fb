"""Structured logging and run metrics for moser-modulus.

Log events are JSON lines on stderr; stdout is reserved for command summaries.
"""

import logging
import sys
import time
from typing import Any, Dict

import structlog
from prometheus_client import Counter, Histogram, start_http_server

# Prometheus metrics
generations_built = Counter("generations_built_total", "Parallelogram generations constructed")
trials_completed = Counter("trials_completed_total", "Experiment trials completed")
solver_rounds = Counter("solver_rounds_total", "Constraint-generation rounds run by the solver")
error_counter = Counter("errors_total", "Commands that ended in an error")
experiment_latency = Histogram(
    "experiment_seconds",
    "Wall time of experiments and solves",
    buckets=(0.1, 1.0, 10.0, 60.0, 300.0, 1800.0),
)

logging.basicConfig(format="%(message)s", stream=sys.stderr, level=logging.INFO)

_process_start = time.monotonic()
_metrics_started = False


def add_timestamp(_, __, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Stamp events with UTC wall time and milliseconds since process start."""
    event_dict["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    event_dict["elapsed_ms"] = int((time.monotonic() - _process_start) * 1000)
    return event_dict


def add_module_context(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Record the emitting module by logger name and the log method used."""
    event_dict["module"] = getattr(logger, "name", str(logger))
    event_dict["function"] = method_name
    return event_dict


structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        add_timestamp,
        add_module_context,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer(),
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)


def bind_run_context(**fields: Any) -> None:
    """Attach fields (command, seed, ...) to every event logged by this thread of control."""
    structlog.contextvars.bind_contextvars(**fields)


def clear_run_context() -> None:
    structlog.contextvars.clear_contextvars()


def set_log_level(level: str) -> None:
    """Apply a textual log level (``"DEBUG"``, ``"INFO"``...) to the root logger."""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def start_metrics_server(port: int) -> bool:
    """Expose the Prometheus metrics over HTTP once per process.

    Args:
    ----
        port: TCP port for the exporter; values <= 0 leave it disabled

    Returns:
    -------
        True if the exporter is running after the call

    """
    global _metrics_started
    if port <= 0:
        return _metrics_started
    if not _metrics_started:
        start_http_server(port)
        _metrics_started = True
        get_logger(__name__).info("metrics_server_started", port=port)
    return True


def get_logger(name: str) -> structlog.BoundLogger:
    """Return the structured logger for a module (``get_logger(__name__)``)."""
    return structlog.get_logger(name)

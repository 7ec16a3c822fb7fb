"""Command-line orchestration of the experiments."""

from moser_modulus.cli.commands import build_parser, main, run
from moser_modulus.cli.manifest import RunManifest
from moser_modulus.cli.options import ExperimentConfig

__all__ = ["ExperimentConfig", "RunManifest", "build_parser", "main", "run"]

"""Run manifests: config echo, timing, seeds, measured constants and output digests."""

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from moser_modulus import __version__
from moser_modulus.errors import ArtifactIOError
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    try:
        with Path(path).open("rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 16), b""):
                digest.update(chunk)
    except OSError as e:
        raise ArtifactIOError(f"cannot hash {path}: {e}") from e
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Record of one CLI run, written once next to its outputs."""

    command: str
    config: dict[str, Any]
    version: str = __version__
    started_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    seeds: list[int] = field(default_factory=list)
    constants: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    _clock: float = field(default_factory=time.perf_counter, repr=False)
    _written: bool = field(default=False, repr=False)

    def add_output(self, path: Path, root: Path) -> None:
        self.outputs[str(Path(path).relative_to(root))] = sha256_file(path)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "started_at": self.started_at,
            "wall_seconds": round(time.perf_counter() - self._clock, 3),
            "config": self.config,
            "seeds": self.seeds,
            "constants": self.constants,
            "outputs": dict(sorted(self.outputs.items())),
        }

    def write(self, out_dir: Path) -> Path:
        """Write ``manifest.json``; a second call is an error."""
        if self._written:
            raise ArtifactIOError("manifest already written for this run")
        path = Path(out_dir) / MANIFEST_NAME
        try:
            path.write_text(json.dumps(self.to_dict(), indent=2, default=float))
        except OSError as e:
            raise ArtifactIOError(f"cannot write {path}: {e}") from e
        self._written = True
        logger.info("manifest_written", path=str(path), outputs=len(self.outputs))
        return path

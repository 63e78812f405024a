"""Utility functions for scat-depth."""

import hashlib
import json
import logging
import time
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from scat_depth.types import RunManifest

logger = logging.getLogger(__name__)

RUN_MANIFEST_NAME = "run_manifest.json"


def time_it(func):
    """Decorator to measure function execution time."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.time()
        result = func(*args, **kwargs)
        elapsed = time.time() - start

        if isinstance(result, dict):
            result["wall_clock_sec"] = round(elapsed, 3)
        elif hasattr(result, "wall_clock_sec"):
            result.wall_clock_sec = round(elapsed, 3)

        return result

    return wrapper


def setup_logging(config: Dict[str, Any]) -> None:
    """Configure logging based on config settings.

    Args:
        config: Configuration dictionary with logging.level key.
    """
    level = getattr(logging, config["logging"]["level"])
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        force=True,
    )
    logger.setLevel(level)


def code_hash(package_dir: Optional[Path] = None) -> str:
    """Content hash of every source file in the package, in sorted path order."""
    if package_dir is None:
        package_dir = Path(__file__).parent.parent
    digest = hashlib.sha256()
    for path in sorted(package_dir.rglob("*.py")):
        digest.update(path.relative_to(package_dir).as_posix().encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
    return digest.hexdigest()


def write_run_manifest(
    out_dir: Path,
    command: Sequence[str],
    config: Dict[str, Any],
    seeds: Dict[str, int],
    outputs: List[str],
    wall_clock_sec: float,
) -> Path:
    """Write ``run_manifest.json`` into ``out_dir``, replacing any previous one.

    Args:
        out_dir: Artifact directory of the command.
        command: Full command line.
        config: Resolved configuration the command ran with.
        seeds: Every seed that influenced the outputs.
        outputs: Paths written by the command.
        wall_clock_sec: Elapsed time.

    Returns:
        Path of the manifest file.
    """
    manifest: RunManifest = {
        "command": list(command),
        "config": config,
        "code_hash": code_hash(),
        "seeds": seeds,
        "outputs": outputs,
        "wall_clock_sec": round(wall_clock_sec, 3),
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUN_MANIFEST_NAME
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, default=str)
    logger.debug(f"Wrote run manifest: {path}")
    return path

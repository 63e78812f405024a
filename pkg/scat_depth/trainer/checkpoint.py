"""Checkpoint persistence: a text manifest followed by little-endian float32 blobs."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from scat_depth.errors import CheckpointError, DataError
from scat_depth.geometry import CameraModel
from scat_depth.networks.factory import create_generator
from scat_depth.trainer.config import TrainConfig
from scat_depth.trainer.trainer import SCATTrainer
from scat_depth.utils.config import coerce_value

logger = logging.getLogger(__name__)

FORMAT_VERSION = "scat-ckpt-1"
END_MARKER = "end"
BLOB_DTYPE = np.dtype("<f4")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format_shape(shape: Tuple[int, ...]) -> str:
    return ",".join(str(d) for d in shape) if shape else "scalar"


def _parse_shape(text: str) -> Tuple[int, ...]:
    if text == "scalar":
        return ()
    return tuple(int(d) for d in text.split(","))


def _trainer_blobs(trainer: SCATTrainer) -> List[Tuple[str, np.ndarray]]:
    groups = [
        ("depth.", trainer.depth_net.state_dict()),
        ("pose.", trainer.pose_net.state_dict()),
        ("generator.", trainer.generator.state_dict()),
        ("opt_depth.", trainer.opt_depth.state_dict()),
        ("opt_pose.", trainer.opt_pose.state_dict()),
        ("opt_generator.", trainer.opt_generator.state_dict()),
    ]
    for i, snap in enumerate(trainer.buffer.snapshots):
        groups.append((f"buffer.{i}.", snap.state_dict()))
    return [(f"{prefix}{name}", np.asarray(value)) for prefix, state in groups for name, value in state.items()]


def save_checkpoint(trainer: SCATTrainer, path: Path) -> Path:
    """Write the complete trainer state to ``path``.

    Args:
        trainer: Trainer whose networks, optimizers, buffer and counters are saved.
        path: Destination file; parent directories are created.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = [FORMAT_VERSION]
    for key, value in trainer.config.to_dict().items():
        lines.append(f"config {key} = {_format_value(tuple(value) if isinstance(value, list) else value)}")
    cam = trainer.camera
    lines.append(f"camera {float(cam.fx)!r} {float(cam.fy)!r} {float(cam.cx)!r} {float(cam.cy)!r} {int(cam.width)} {int(cam.height)}")
    lines.append(f"epoch {trainer.epoch}")
    lines.append(f"step {trainer.step_count}")
    lines.append(f"rollbacks {trainer.rollbacks}")
    for i, snap in enumerate(trainer.buffer.snapshots):
        lines.append(f"buffer_tag {i} {snap.version_tag}")
    lines.append(f"rng buffer {json.dumps(trainer.buffer.rng_state(), sort_keys=True)}")

    payload = []
    offset = 0
    for name, value in _trainer_blobs(trainer):
        data = np.ascontiguousarray(value, dtype=BLOB_DTYPE).tobytes()
        lines.append(f"blob {name} {_format_shape(value.shape)} {offset} {len(data)}")
        payload.append(data)
        offset += len(data)
    lines.append(END_MARKER)

    with open(path, "wb") as f:
        f.write(("\n".join(lines) + "\n").encode("utf-8"))
        for data in payload:
            f.write(data)
    logger.info(f"Saved checkpoint: {path} (epoch {trainer.epoch}, step {trainer.step_count}, {offset} blob bytes)")
    return path


class _Manifest:
    def __init__(self) -> None:
        self.config: Dict[str, str] = {}
        self.camera: Optional[CameraModel] = None
        self.counters: Dict[str, int] = {}
        self.buffer_tags: Dict[int, int] = {}
        self.rng_state: Optional[Dict[str, Any]] = None
        self.blobs: Dict[str, Tuple[Tuple[int, ...], int, int]] = {}


def _parse_manifest(path: Path, header: List[str]) -> _Manifest:
    manifest = _Manifest()
    for lineno, line in enumerate(header[1:], start=2):
        kind, _, rest = line.partition(" ")
        try:
            if kind == "config":
                key, sep, value = rest.partition("=")
                if not sep:
                    raise ValueError("expected 'config KEY = VALUE'")
                manifest.config[key.strip()] = value.strip()
            elif kind == "camera":
                fx, fy, cx, cy, w, h = rest.split()
                manifest.camera = CameraModel(float(fx), float(fy), float(cx), float(cy), int(w), int(h))
            elif kind in ("epoch", "step", "rollbacks"):
                manifest.counters[kind] = int(rest)
            elif kind == "buffer_tag":
                index, tag = rest.split()
                manifest.buffer_tags[int(index)] = int(tag)
            elif kind == "rng":
                _, state = rest.split(" ", 1)
                manifest.rng_state = json.loads(state)
            elif kind == "blob":
                name, shape, offset, length = rest.split()
                manifest.blobs[name] = (_parse_shape(shape), int(offset), int(length))
            else:
                raise ValueError(f"unknown record '{kind}'")
        except ValueError as e:
            raise CheckpointError("malformed_manifest", f"{path}:{lineno}: {e}") from e

    if manifest.camera is None or manifest.rng_state is None:
        raise CheckpointError("malformed_manifest", f"{path}: missing camera or rng record")
    return manifest


def _read_blobs(path: Path, manifest: _Manifest, data: bytes) -> Dict[str, np.ndarray]:
    arrays = {}
    for name, (shape, offset, length) in manifest.blobs.items():
        expected = int(np.prod(shape, dtype=np.int64)) * BLOB_DTYPE.itemsize
        if length != expected:
            raise CheckpointError(
                "blob_size_mismatch", f"{path}: blob {name} has length {length}, shape {shape} needs {expected}"
            )
        if offset < 0 or offset + length > len(data):
            raise CheckpointError(
                "truncated_blob", f"{path}: blob {name} ends at byte {offset + length}, payload has {len(data)}"
            )
        arrays[name] = np.frombuffer(data, dtype=BLOB_DTYPE, count=length // BLOB_DTYPE.itemsize, offset=offset).reshape(shape)
    return arrays


def _group(arrays: Mapping[str, np.ndarray], prefix: str) -> Dict[str, np.ndarray]:
    return {name[len(prefix):]: value for name, value in arrays.items() if name.startswith(prefix)}


def _resolve_config(path: Path, stored: Dict[str, str], requested: Optional[TrainConfig]) -> TrainConfig:
    defaults = TrainConfig().to_dict()
    unknown = sorted(set(stored) - set(defaults))
    if unknown:
        raise CheckpointError("malformed_manifest", f"{path}: unknown config keys {unknown}")
    try:
        values = {key: coerce_value(raw, defaults[key]) for key, raw in stored.items()}
        config = TrainConfig.from_mapping(values)
    except (TypeError, ValueError) as e:
        raise CheckpointError("malformed_manifest", f"{path}: invalid config: {e}") from e

    if requested is not None:
        saved = config.to_dict()
        for key, value in requested.to_dict().items():
            if saved[key] != value:
                logger.warning(
                    f"Config conflict for '{key}': requested {value!r}, checkpoint has {saved[key]!r}; "
                    f"using the checkpoint value"
                )
    return config


def load_checkpoint(path: Path, config: Optional[TrainConfig] = None) -> SCATTrainer:
    """Rebuild a trainer from a checkpoint.

    Args:
        path: Checkpoint file written by :func:`save_checkpoint`.
        config: Optional config of the caller; keys that disagree with the
            stored config are logged and the stored values are kept.

    Returns:
        Trainer with the saved parameters, optimizer state, buffer and counters.

    Raises:
        CheckpointError: ``version_mismatch``, ``malformed_manifest``,
            ``blob_size_mismatch`` or ``truncated_blob``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: checkpoint file not found")
    raw = path.read_bytes()
    first_line = raw.split(b"\n", 1)[0].decode("utf-8", errors="replace")
    if first_line != FORMAT_VERSION:
        raise CheckpointError("version_mismatch", f"{path}: expected '{FORMAT_VERSION}', found '{first_line[:40]}'")

    marker = f"\n{END_MARKER}\n".encode("utf-8")
    end = raw.find(marker)
    if end < 0:
        raise CheckpointError("malformed_manifest", f"{path}: manifest has no '{END_MARKER}' line")
    try:
        header = raw[:end].decode("utf-8").split("\n")
    except UnicodeDecodeError as e:
        raise CheckpointError("malformed_manifest", f"{path}: manifest is not UTF-8 text") from e
    manifest = _parse_manifest(path, header)
    arrays = _read_blobs(path, manifest, raw[end + len(marker):])

    resolved = _resolve_config(path, manifest.config, config)
    trainer = SCATTrainer(resolved, manifest.camera)
    try:
        trainer.depth_net.load_state_dict(_group(arrays, "depth."))
        trainer.pose_net.load_state_dict(_group(arrays, "pose."))
        trainer.generator.load_state_dict(_group(arrays, "generator."))
        trainer.opt_depth.load_state_dict(_group(arrays, "opt_depth."))
        trainer.opt_pose.load_state_dict(_group(arrays, "opt_pose."))
        trainer.opt_generator.load_state_dict(_group(arrays, "opt_generator."))
        for index in sorted(manifest.buffer_tags):
            snap = create_generator(resolved, manifest.camera.height, manifest.camera.width)
            snap.freeze()
            snap.load_state_dict(_group(arrays, f"buffer.{index}."))
            snap.version_tag = manifest.buffer_tags[index]
            trainer.buffer.add(snap)
    except (KeyError, ValueError) as e:
        raise CheckpointError("malformed_manifest", f"{path}: parameter blobs do not match the config: {e}") from e

    trainer.buffer.set_rng_state(manifest.rng_state)
    trainer.epoch = manifest.counters.get("epoch", 0)
    trainer.step_count = manifest.counters.get("step", 0)
    trainer.rollbacks = manifest.counters.get("rollbacks", 0)
    logger.info(f"Loaded checkpoint: {path} (epoch {trainer.epoch}, buffer {len(trainer.buffer)})")
    return trainer

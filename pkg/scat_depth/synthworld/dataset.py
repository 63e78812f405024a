"""On-disk synthetic datasets: one directory per scene plus a manifest."""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from scat_depth.errors import DataError
from scat_depth.geometry import CameraModel, PoseSE3
from scat_depth.synthworld.io import read_pfm, read_ppm, read_sidecar, write_pfm, write_ppm, write_sidecar
from scat_depth.synthworld.scene import SceneSample, generate_scene
from scat_depth.types import DatasetManifest, ManifestEntry
from scat_depth.utils.utils import time_it

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
MANIFEST_HEADER = "# scat-synth-1"
FRAME_FILES = ("frame_prev.ppm", "frame_t.ppm", "frame_next.ppm")
DEPTH_FILE = "depth.pfm"
POSES_FILE = "poses.txt"
CAMERA_FILE = "camera.txt"
SCENE_FILES = FRAME_FILES + (DEPTH_FILE, POSES_FILE, CAMERA_FILE)
SPLITS = ("train", "val")


def split_counts(n_scenes: int, split_ratios: Sequence[float]) -> Tuple[int, int]:
    if len(split_ratios) != 2 or any(r < 0 for r in split_ratios) or sum(split_ratios) <= 0:
        raise ValueError(f"split_ratios must be two non-negative weights, got {tuple(split_ratios)}")
    n_train = int(round(n_scenes * split_ratios[0] / sum(split_ratios)))
    return n_train, n_scenes - n_train


def write_scene(scene_dir: Path, sample: SceneSample) -> None:
    scene_dir.mkdir(parents=True, exist_ok=True)
    for name, frame in zip(FRAME_FILES, sample.frames):
        write_ppm(scene_dir / name, frame)
    write_pfm(scene_dir / DEPTH_FILE, sample.gt_depth)
    prev, nxt = sample.gt_poses
    write_sidecar(
        scene_dir / POSES_FILE,
        {
            "seed": [sample.seed],
            "prev_axis_angle": prev.axis_angle.numpy()[0],
            "prev_translation": prev.translation.numpy()[0],
            "next_axis_angle": nxt.axis_angle.numpy()[0],
            "next_translation": nxt.translation.numpy()[0],
        },
    )
    camera = sample.camera
    write_sidecar(
        scene_dir / CAMERA_FILE,
        {
            "intrinsics": [camera.fx, camera.fy, camera.cx, camera.cy],
            "size": [camera.width, camera.height],
        },
    )


def _require(values: dict, key: str, path: Path, length: int) -> np.ndarray:
    if key not in values or values[key].size != length:
        raise DataError(f"{path}: missing or malformed '{key}' (expected {length} values)")
    return values[key]


def read_camera(path: Path) -> CameraModel:
    values = read_sidecar(path)
    fx, fy, cx, cy = _require(values, "intrinsics", path, 4)
    width, height = _require(values, "size", path, 2)
    return CameraModel(fx=float(fx), fy=float(fy), cx=float(cx), cy=float(cy), width=int(width), height=int(height))


def read_scene(scene_dir: Path) -> SceneSample:
    """Load a scene directory written by :func:`write_scene`."""
    missing = [name for name in SCENE_FILES if not (scene_dir / name).exists()]
    if missing:
        raise DataError(f"{scene_dir}: missing scene files {missing}")

    frames = np.stack([read_ppm(scene_dir / name) for name in FRAME_FILES])
    depth = read_pfm(scene_dir / DEPTH_FILE)
    poses_path = scene_dir / POSES_FILE
    values = read_sidecar(poses_path)
    poses = [
        PoseSE3.from_arrays(
            _require(values, f"{slot}_axis_angle", poses_path, 3),
            _require(values, f"{slot}_translation", poses_path, 3),
        )
        for slot in ("prev", "next")
    ]
    seed = int(_require(values, "seed", poses_path, 1)[0])
    camera = read_camera(scene_dir / CAMERA_FILE)
    if frames.shape[2:] != (camera.height, camera.width) or depth.shape != (camera.height, camera.width):
        raise DataError(f"{scene_dir}: image size disagrees with {CAMERA_FILE}")
    return SceneSample(frames=frames, gt_depth=depth, gt_poses=poses, camera=camera, seed=seed)


def _manifest_line(entry: ManifestEntry) -> str:
    return f"{entry['directory']} seed={entry['seed']} files=" + ",".join(entry["files"])


@time_it
def dataset_build(
    n_scenes: int,
    split_ratios: Sequence[float],
    out_dir: Path,
    seed: int = 0,
    camera: Optional[CameraModel] = None,
    show_progress: bool = False,
) -> DatasetManifest:
    """Generate ``n_scenes`` scenes under ``out_dir`` and write the manifest.

    Args:
        n_scenes: Number of scenes; 0 writes a header-only manifest.
        split_ratios: (train, val) weights.
        out_dir: Dataset root.
        seed: Master seed; scene seeds are drawn from it.
        camera: Intrinsics and image size; defaults to 64x192.
        show_progress: Show a tqdm bar.

    Returns:
        DatasetManifest describing every scene directory.
    """
    if n_scenes < 0:
        raise ValueError(f"n_scenes must be >= 0, got {n_scenes}")
    camera = camera or CameraModel.default(64, 192)
    n_train, _ = split_counts(n_scenes, split_ratios)
    out_dir = Path(out_dir)
    if n_scenes == 0:
        logger.warning("Building an empty dataset (0 scenes)")

    scene_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=n_scenes)
    entries: List[ManifestEntry] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for index in tqdm(range(n_scenes), desc="Generating scenes", disable=not show_progress):
            split = SPLITS[0] if index < n_train else SPLITS[1]
            directory = f"{split}/scene_{index:05d}"
            sample = generate_scene(int(scene_seeds[index]), camera)
            write_scene(out_dir / directory, sample)
            entries.append(
                {"directory": directory, "split": split, "seed": int(scene_seeds[index]), "files": list(SCENE_FILES)}
            )
        lines = [MANIFEST_HEADER] + [_manifest_line(e) for e in entries]
        (out_dir / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write dataset to {out_dir}: {e}") from e

    logger.info(f"Built dataset at {out_dir}: {n_train} train, {n_scenes - n_train} val scenes")
    return DatasetManifest(root=str(out_dir), entries=entries)


def read_manifest(root: Path) -> DatasetManifest:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"{root}: no {MANIFEST_NAME}; not a dataset directory")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != MANIFEST_HEADER:
        raise DataError(f"{path}:1: expected header {MANIFEST_HEADER!r}")

    entries: List[ManifestEntry] = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            directory = parts[0]
            fields = dict(part.split("=", 1) for part in parts[1:])
            entries.append(
                {
                    "directory": directory,
                    "split": directory.split("/", 1)[0],
                    "seed": int(fields["seed"]),
                    "files": fields["files"].split(","),
                }
            )
        except (IndexError, KeyError, ValueError) as e:
            raise DataError(f"{path}:{number}: malformed manifest line {line!r}") from e
    return DatasetManifest(root=str(root), entries=entries)


def load_dataset(root: Path, split: str) -> List[SceneSample]:
    """Scenes of ``split`` ("train" or "val") in manifest order."""
    if split not in SPLITS:
        raise ValueError(f"Unknown split: {split}. Available: {list(SPLITS)}")
    manifest = read_manifest(root)
    scenes = [read_scene(Path(root) / e["directory"]) for e in manifest.split(split)]
    logger.info(f"Loaded {len(scenes)} {split} scenes from {root}")
    return scenes

#!/usr/bin/env python3
"""Command-line entry point: data generation, training, evaluation, probes and ablations."""

import argparse
import logging
import shutil
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import yaml

from scat_depth.errors import ConfigError, DataError, SCATError
from scat_depth.evaluation.evaluate import (
    CALIBRATION_HEADER,
    aggregate_rows,
    evaluate_model,
    metrics_rows,
    metrics_table,
    resolve_corruptions,
    severity_ratios,
)
from scat_depth.geometry import CameraModel
from scat_depth.probes import gradient_probe, sensitivity_probe
from scat_depth.renderers.factory import OUTPUT_FORMATS
from scat_depth.surgery.stats import GRAD_STATS_HEADER
from scat_depth.synthworld.corruptions import CORRUPTION_KINDS, CorruptionSpec, corruption_grid
from scat_depth.synthworld.dataset import MANIFEST_NAME, SPLITS, dataset_build, load_dataset
from scat_depth.synthworld.scene import SceneSample, generate_scene
from scat_depth.trainer.ablation import ABLATION_AXES, parse_axes, run_ablation
from scat_depth.trainer.checkpoint import load_checkpoint, save_checkpoint
from scat_depth.trainer.config import TrainConfig
from scat_depth.trainer.trainer import SCATTrainer
from scat_depth.types import TRAIN_LOG_HEADER, ResultTable
from scat_depth.utils.config import default_train_config, load_config, load_run_config
from scat_depth.utils.logs import CsvLog
from scat_depth.utils.utils import setup_logging, write_run_manifest

logger = logging.getLogger(__name__)

CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "model.ckpt"
TRAIN_LOG_NAME = "train_log.csv"
GRAD_STATS_NAME = "grad_stats.csv"
PROBE_SCENES = 4


def _float_list(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _positive_float_list(text: str) -> List[float]:
    values = _float_list(text)
    if any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError(f"expected values > 0, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _split_ratios(text: str) -> List[float]:
    values = _float_list(text)
    if len(values) != len(SPLITS):
        raise argparse.ArgumentTypeError(f"expected {len(SPLITS)} ratios (train,val), got {text!r}")
    return values


def _emit(table: ResultTable, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    text = str(table)
    out.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info(f"Wrote {table.title} ({len(table.rows)} rows) to {out}")
    return out


def _scenes(data: Path, split: str) -> List[SceneSample]:
    scenes = load_dataset(data, split)
    if not scenes:
        raise DataError(f"{data}: no {split} scenes")
    return scenes


def _settings_corruptions(settings: Dict[str, Any], selection: str) -> List[CorruptionSpec]:
    if selection != "all":
        return resolve_corruptions(selection)
    evaluation = settings.get("evaluation") or {}
    try:
        return corruption_grid(
            kinds=tuple(evaluation.get("kinds", CORRUPTION_KINDS)),
            severities=tuple(evaluation.get("severities", (1, 2, 3))),
        )
    except ValueError as e:
        raise ConfigError(f"Invalid evaluation settings: {e}") from e


def _median_scaling(settings: Dict[str, Any]) -> bool:
    return bool((settings.get("evaluation") or {}).get("median_scaling", True))


def _progress(settings: Dict[str, Any]) -> bool:
    return bool((settings.get("output") or {}).get("progress", False))


def _format(args: argparse.Namespace, settings: Dict[str, Any]) -> str:
    return args.format or (settings.get("output") or {}).get("format", "csv")


def _probe_scenes(data: Optional[Path], split: str, camera: CameraModel, seed: int) -> List[SceneSample]:
    if data is not None:
        return _scenes(data, split)
    return [generate_scene(seed + i, camera) for i in range(PROBE_SCENES)]


def cmd_gen_data(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    out: Path = args.out
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise DataError(f"{out} exists and is not empty; pass --force to overwrite")
        for split in SPLITS:
            shutil.rmtree(out / split, ignore_errors=True)
        (out / MANIFEST_NAME).unlink(missing_ok=True)

    data = settings.get("data") or {}
    height = args.height or int(data.get("height", 64))
    width = args.width or int(data.get("width", 192))
    split = args.split or list(data.get("split", (0.8, 0.2)))
    manifest = dataset_build(
        args.scenes, split, out, seed=args.seed, camera=CameraModel.default(height, width),
        show_progress=_progress(settings),
    )
    print(f"Wrote {len(manifest.entries)} scenes to {out} in {manifest.wall_clock_sec}s")
    return [str(out / MANIFEST_NAME)] + [str(out / e["directory"]) for e in manifest.entries]


def cmd_train(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    config = load_run_config(str(args.config), default_train_config(settings))
    scenes = _scenes(args.data, "train")
    out: Path = args.out
    trainer = SCATTrainer(config, scenes[0].camera)
    trainer.attach_logs(CsvLog(TRAIN_LOG_HEADER, out / TRAIN_LOG_NAME), CsvLog(GRAD_STATS_HEADER, out / GRAD_STATS_NAME))

    outputs = [str(out / TRAIN_LOG_NAME), str(out / GRAD_STATS_NAME)]

    def checkpoint_epoch(t: SCATTrainer) -> None:
        outputs.append(str(save_checkpoint(t, out / CHECKPOINT_DIR / f"epoch_{t.epoch:03d}.ckpt")))

    result = trainer.fit(scenes, show_progress=_progress(settings), on_epoch_end=checkpoint_epoch)
    outputs.append(str(save_checkpoint(trainer, out / FINAL_CHECKPOINT)))
    losses = result.losses
    print(
        f"Trained {result.epochs} epochs ({result.steps} steps, {result.rollbacks} rollbacks) "
        f"in {result.wall_clock_sec}s; final L_p {losses[-1] if losses else float('nan'):.5f}"
    )
    return outputs


def cmd_eval(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    corruptions = _settings_corruptions(settings, args.corrupt)
    if args.baseline is not None and not corruptions:
        raise ConfigError("mCE/mRR need corrupted conditions; use --corrupt all or a kind with --baseline")

    scenes = _scenes(args.data, "val")
    median_scaling = _median_scaling(settings)

    def run(path: Path):
        trainer = load_checkpoint(path)
        cfg = trainer.config
        return evaluate_model(
            trainer.depth_net, scenes, corruptions, seed=cfg.seed, batch_size=cfg.batch_size,
            median_scaling=median_scaling, min_depth=cfg.min_depth, max_depth=cfg.max_depth,
            show_progress=_progress(settings),
        )

    results = run(args.checkpoint)
    rows = metrics_rows("model", results)
    if args.baseline is not None:
        baseline = run(args.baseline)
        rows += metrics_rows("baseline", baseline)
        rows += aggregate_rows("model", results, baseline)
    table = metrics_table(rows, output_format=_format(args, settings))
    return [str(_emit(table, args.out))]


def cmd_probe_sensitivity(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    trainer = load_checkpoint(args.checkpoint)
    scenes = _probe_scenes(args.data, "val", trainer.camera, args.seed)
    images = np.stack([s.target for s in scenes])
    table = sensitivity_probe(
        trainer.depth_net, images, sorted(args.kappas), args.trials, seed=args.seed,
        output_format=_format(args, settings),
    )
    return [str(_emit(table, args.out))]


def cmd_probe_gradients(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    if args.steps < 0:
        raise ConfigError(f"--steps must be >= 0, got {args.steps}")
    reference = load_checkpoint(args.checkpoint)
    scenes = _probe_scenes(args.data, "train", reference.camera, reference.config.seed)
    table = gradient_probe(
        lambda: load_checkpoint(args.checkpoint), scenes, args.steps,
        output_format=_format(args, settings), show_progress=_progress(settings),
    )
    return [str(_emit(table, args.out))]


def cmd_ablate(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    config = load_run_config(str(args.config), default_train_config(settings))
    try:
        axes = parse_axes(args.axes)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    train_scenes = _scenes(args.data, "train")
    val_scenes = _scenes(args.data, "val")
    table = run_ablation(
        config, axes, train_scenes, val_scenes, train_scenes[0].camera,
        corruptions=_settings_corruptions(settings, args.corrupt),
        median_scaling=_median_scaling(settings),
        output_format=_format(args, settings),
        show_progress=_progress(settings),
    )
    print(f"Ablation finished in {table.wall_clock_sec}s")
    return [str(_emit(table, args.out / "ablation.csv"))]


def cmd_calibrate(args: argparse.Namespace, settings: Dict[str, Any]) -> List[str]:
    trainer = load_checkpoint(args.checkpoint)
    cfg = trainer.config
    results = evaluate_model(
        trainer.depth_net, _scenes(args.data, "val"), _settings_corruptions(settings, "all"),
        seed=cfg.seed, batch_size=cfg.batch_size, median_scaling=_median_scaling(settings),
        min_depth=cfg.min_depth, max_depth=cfg.max_depth, show_progress=_progress(settings),
    )
    table = ResultTable(
        columns=CALIBRATION_HEADER, rows=severity_ratios(results), title="Corruption Calibration",
        output_format=_format(args, settings),
    )
    return [str(_emit(table, args.out))]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scat-depth", description=__doc__)
    parser.add_argument("--settings", type=Path, default=None, help="Settings YAML (default: bundled config.yml)")
    sub = parser.add_subparsers(dest="command", required=True)
    formats = list(OUTPUT_FORMATS)

    p = sub.add_parser("gen-data", help="Generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scenes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="Overwrite a non-empty output directory")
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--split", type=_split_ratios, default=None, help="train,val ratios, e.g. 0.8,0.2")
    p.set_defaults(handler=cmd_gen_data, artifact=lambda a: a.out)

    p = sub.add_parser("train", help="Train depth and pose networks")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_train, artifact=lambda a: a.out)

    p = sub.add_parser("eval", help="Clean and corrupted depth metrics of a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--corrupt", choices=["all", "none", *CORRUPTION_KINDS], default="all")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--baseline", type=Path, default=None, help="Baseline checkpoint for mCE/mRR")
    p.add_argument("--format", choices=formats, default=None)
    p.set_defaults(handler=cmd_eval, artifact=lambda a: a.out.parent)

    p = sub.add_parser("probe-sensitivity", help="Output deviation under unit perturbations per kappa")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--kappas", type=_positive_float_list, required=True)
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("sensitivity.csv"))
    p.add_argument("--format", choices=formats, default=None)
    p.set_defaults(handler=cmd_probe_sensitivity, artifact=lambda a: a.out.parent)

    p = sub.add_parser("probe-gradients", help="Paired gradient-cosine statistics with and without surgery")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--out", type=Path, default=Path("grad_probe.csv"))
    p.add_argument("--format", choices=formats, default=None)
    p.set_defaults(handler=cmd_probe_gradients, artifact=lambda a: a.out.parent)

    p = sub.add_parser("ablate", help="Train and evaluate every cell of an ablation grid")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--axes", required=True, help=f"Comma-separated subset of {','.join(ABLATION_AXES)}")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--corrupt", choices=["all", "none", *CORRUPTION_KINDS], default="all")
    p.add_argument("--format", choices=formats, default=None)
    p.set_defaults(handler=cmd_ablate, artifact=lambda a: a.out)

    p = sub.add_parser("calibrate-corruptions", help="Severity / clean AbsRel ratios of a frozen checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=formats, default=None)
    p.set_defaults(handler=cmd_calibrate, artifact=lambda a: a.out.parent)

    return parser


def _run_config(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in ("handler", "artifact")}
    resolved["settings"] = settings
    return resolved


def _seeds(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, int]:
    seeds = {"training": int((settings.get("training") or {}).get("seed", TrainConfig().seed))}
    if getattr(args, "seed", None) is not None:
        seeds["command"] = int(args.seed)
    return seeds


def _load_settings(path: Optional[Path]) -> Dict[str, Any]:
    try:
        settings = load_config(str(path) if path else None)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read settings: {e}") from e
    if not isinstance(settings, dict) or "logging" not in settings:
        raise ConfigError(f"Settings file {path or 'config.yml'} needs a logging section")
    return settings


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = _load_settings(args.settings)
        setup_logging(settings)
        handler: Callable[[argparse.Namespace, Dict[str, Any]], List[str]] = args.handler
        start = time.time()
        outputs = handler(args, settings)
        write_run_manifest(
            args.artifact(args),
            ["scat-depth", *(argv if argv is not None else sys.argv[1:])],
            _run_config(args, settings),
            _seeds(args, settings),
            outputs,
            time.time() - start,
        )
    except SCATError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

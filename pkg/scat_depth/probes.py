"""Empirical probes of skip-scaling sensitivity and clean/adversarial gradient conflict."""

import logging
from typing import Any, Callable, Dict, Iterator, List, Sequence

import numpy as np
from tqdm import tqdm

from scat_depth.autograd.tensor import Tensor
from scat_depth.networks.depth import ScalingDepthNet
from scat_depth.surgery.factory import create_combiner
from scat_depth.surgery.stats import GRAD_STATS_HEADER, HISTOGRAM_BINS, stats_row
from scat_depth.synthworld.scene import SceneSample, to_batch
from scat_depth.trainer.trainer import SCATTrainer, Triplet
from scat_depth.types import ResultTable, StepReport
from scat_depth.utils.utils import time_it

logger = logging.getLogger(__name__)

SENSITIVITY_HEADER = ["kappa", "mean_deviation", "std_deviation", "trials"]
GRADIENT_PROBE_HEADER = ["mode"] + GRAD_STATS_HEADER + ["rejected"]
PROBE_MODES = ("cgs", "plain")


def unit_perturbations(shape: Sequence[int], trials: int, seed: int) -> List[np.ndarray]:
    """``trials`` Gaussian perturbations, each rescaled to unit L2 norm per image."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        noise = rng.standard_normal(tuple(shape))
        norms = np.linalg.norm(noise.reshape(noise.shape[0], -1), axis=1).reshape(-1, 1, 1, 1)
        out.append(noise / norms)
    return out


@time_it
def sensitivity_probe(
    depth_net: ScalingDepthNet,
    images: np.ndarray,
    kappas: Sequence[float],
    trials: int,
    seed: int = 0,
    output_format: str = "csv",
) -> ResultTable:
    """Mean and std of ||f(I + d) - f(I)||_2 over unit-norm d, per skip scale.

    The same weights and the same perturbations are used for every kappa.
    The network's own kappa is restored afterwards.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    images = np.asarray(images, dtype=np.float64)
    deltas = unit_perturbations(images.shape, trials, seed)
    original = depth_net.kappa
    rows = []
    try:
        for kappa in kappas:
            depth_net.set_kappa(kappa)
            base = depth_net(Tensor(images)).numpy().astype(np.float64)
            deviations = []
            for delta in deltas:
                moved = depth_net(Tensor(images + delta)).numpy().astype(np.float64)
                diff = (moved - base).reshape(base.shape[0], -1)
                deviations.append(float(np.linalg.norm(diff, axis=1).mean()))
            rows.append(
                {
                    "kappa": float(kappa),
                    "mean_deviation": float(np.mean(deviations)),
                    "std_deviation": float(np.std(deviations)),
                    "trials": trials,
                }
            )
            logger.info(f"kappa={kappa:g}: mean deviation {rows[-1]['mean_deviation']:.6f}")
    finally:
        depth_net.set_kappa(original)
    return ResultTable(columns=SENSITIVITY_HEADER, rows=rows, title="Sensitivity", output_format=output_format)


def probe_batches(scenes: Sequence[SceneSample], batch_size: int, steps: int, seed: int) -> Iterator[Triplet]:
    """``steps`` batches from seeded shuffles of ``scenes``, reshuffling after each pass."""
    if steps and not scenes:
        raise ValueError("Gradient probe needs at least one scene")
    produced = 0
    epoch = 0
    while produced < steps:
        order = np.random.default_rng([seed, epoch]).permutation(len(scenes))
        for start in range(0, len(scenes), batch_size):
            if produced == steps:
                return
            yield to_batch([scenes[int(i)] for i in order[start:start + batch_size]])
            produced += 1
        epoch += 1


def _probe_row(mode: str, report: StepReport) -> Dict[str, Any]:
    if report.rejected:
        values = [report.step, float("nan"), float("nan")] + [0] * HISTOGRAM_BINS
    else:
        values = stats_row(report.stats.effective, report.step)
    return {"mode": mode, **dict(zip(GRAD_STATS_HEADER, values)), "rejected": report.rejected}


@time_it
def gradient_probe(
    make_trainer: Callable[[], SCATTrainer],
    scenes: Sequence[SceneSample],
    steps: int,
    output_format: str = "csv",
    show_progress: bool = False,
) -> ResultTable:
    """Run ``steps`` training steps with and without conflict surgery from identical state.

    ``make_trainer`` must return a fresh trainer in the same state on every
    call. When its history buffer is empty the live generator is snapshotted
    first so every step has adversarial branches. One row per step and mode;
    rolled-back steps keep their row with ``rejected`` set and NaN cosines.
    """
    rows = []
    for mode in PROBE_MODES:
        trainer = make_trainer()
        trainer.combiner = create_combiner(mode)
        if trainer.config.enable_ada and trainer.perturbation.learnable and not len(trainer.buffer):
            trainer.perturbation.snapshot(trainer.epoch)
        batches = probe_batches(scenes, trainer.config.batch_size, steps, trainer.config.seed)
        reports = [
            trainer.train_step(batch)
            for batch in tqdm(batches, total=steps, desc=f"Probe {mode}", disable=not show_progress)
        ]
        rows.extend(_probe_row(mode, report) for report in reports)
        means = [r.stats.effective.mean_cosine for r in reports if not r.rejected]
        if means:
            logger.info(f"{mode}: mean step cosine {float(np.mean(means)):+.4f} over {len(means)} steps")
    return ResultTable(
        columns=GRADIENT_PROBE_HEADER, rows=rows, title="Gradient Cosines", output_format=output_format
    )

"""Clean and corrupted evaluation of a depth network over validation scenes."""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from scat_depth.autograd.tensor import Tensor
from scat_depth.evaluation.metrics import Condition, corruption_aggregate, depth_metrics
from scat_depth.geometry import disp_to_depth
from scat_depth.networks.depth import ScalingDepthNet
from scat_depth.synthworld.corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt, corruption_grid
from scat_depth.synthworld.scene import SceneSample
from scat_depth.types import METRICS_HEADER, MetricsReport, MetricsRow, ResultTable

logger = logging.getLogger(__name__)

CLEAN = "clean"
EvalKey = Union[str, Condition]


def predict_depth(
    depth_net: ScalingDepthNet, images: np.ndarray, min_depth: float = 0.1, max_depth: float = 100.0
) -> np.ndarray:
    """[N,H,W] depth for a [N,3,H,W] batch."""
    disp = depth_net(Tensor(images))
    return disp_to_depth(disp, min_depth, max_depth).values.numpy()[:, 0].astype(np.float64)


def corruption_seed(seed: int, scene_seed: int, spec: CorruptionSpec) -> int:
    """Deterministic noise seed for one (scene, corruption) pair."""
    kind_index = CORRUPTION_KINDS.index(spec.kind)
    return int(np.random.SeedSequence([seed, scene_seed, kind_index, spec.severity]).generate_state(1)[0])


def resolve_corruptions(selection: str) -> List[CorruptionSpec]:
    """``all`` | ``none`` | a single corruption kind, expanded over severities."""
    if selection == "none":
        return []
    if selection == "all":
        return corruption_grid()
    return corruption_grid(kinds=(selection,))


def _evaluate_condition(
    depth_net: ScalingDepthNet,
    scenes: Sequence[SceneSample],
    spec: Optional[CorruptionSpec],
    seed: int,
    batch_size: int,
    median_scaling: bool,
    min_depth: float,
    max_depth: float,
) -> MetricsReport:
    reports = []
    for start in range(0, len(scenes), batch_size):
        chunk = scenes[start:start + batch_size]
        images = np.stack([s.target for s in chunk])
        if spec is not None:
            images = np.stack(
                [corrupt(img, spec, corruption_seed(seed, s.seed, spec), depth=s.gt_depth) for img, s in zip(images, chunk)]
            )
        preds = predict_depth(depth_net, images, min_depth, max_depth)
        for pred, scene in zip(preds, chunk):
            reports.append(
                depth_metrics(
                    pred, scene.gt_depth, median_scaling=median_scaling, min_depth=min_depth, max_depth=max_depth
                )
            )
    return MetricsReport.mean(reports)


def evaluate_model(
    depth_net: ScalingDepthNet,
    scenes: Sequence[SceneSample],
    corruptions: Sequence[CorruptionSpec] = (),
    seed: int = 0,
    batch_size: int = 4,
    median_scaling: bool = True,
    min_depth: float = 0.1,
    max_depth: float = 100.0,
    show_progress: bool = False,
) -> Dict[EvalKey, MetricsReport]:
    """Per-image metrics averaged over ``scenes`` for the clean frames and each corruption.

    Returns:
        ``{"clean": report, (kind, severity): report, ...}`` in evaluation order.
    """
    if not scenes:
        raise ValueError("Evaluation needs at least one scene")
    conditions: List[Optional[CorruptionSpec]] = [None] + list(corruptions)
    results: Dict[EvalKey, MetricsReport] = {}
    for spec in tqdm(conditions, desc="Evaluating", disable=not show_progress):
        key: EvalKey = CLEAN if spec is None else (spec.kind, spec.severity)
        results[key] = _evaluate_condition(
            depth_net, scenes, spec, seed, batch_size, median_scaling, min_depth, max_depth
        )
        logger.debug(f"{key}: abs_rel={results[key].abs_rel:.4f}")
    return results


def corrupted_only(results: Dict[EvalKey, MetricsReport]) -> Dict[Condition, MetricsReport]:
    return {key: report for key, report in results.items() if key != CLEAN}


def metrics_rows(tag: str, results: Dict[EvalKey, MetricsReport]) -> List[MetricsRow]:
    rows: List[MetricsRow] = []
    for key, report in results.items():
        corruption, severity = (CLEAN, 0) if key == CLEAN else key
        rows.append(metrics_row(tag, corruption, severity, report))
    return rows


def metrics_row(tag: str, corruption: str, severity: int, report: MetricsReport) -> MetricsRow:
    return {
        "tag": tag,
        "corruption": corruption,
        "severity": severity,
        "abs_rel": report.abs_rel,
        "sq_rel": report.sq_rel,
        "rmse": report.rmse,
        "rmse_log": report.rmse_log,
        "d1": report.delta1,
        "d2": report.delta2,
        "d3": report.delta3,
    }


def aggregate_rows(
    tag: str, results: Dict[EvalKey, MetricsReport], baseline: Dict[EvalKey, MetricsReport]
) -> List[MetricsRow]:
    """mCE and mRR rows; the percentage sits in the abs_rel column, severity 0."""
    mce, mrr = corruption_aggregate(
        corrupted_only(results), corrupted_only(baseline), results[CLEAN], baseline[CLEAN]
    )
    blank = {"sq_rel": "", "rmse": "", "rmse_log": "", "d1": "", "d2": "", "d3": ""}
    return [
        {"tag": tag, "corruption": "mce", "severity": 0, "abs_rel": mce, **blank},
        {"tag": tag, "corruption": "mrr", "severity": 0, "abs_rel": mrr, **blank},
    ]


def mean_corrupted(results: Dict[EvalKey, MetricsReport]) -> MetricsReport:
    """Average over the corrupted conditions, or the clean report when there are none."""
    corrupted = list(corrupted_only(results).values())
    return MetricsReport.mean(corrupted) if corrupted else results[CLEAN]


def metrics_table(rows: List[MetricsRow], output_format: str = "csv", title: str = "Depth Metrics") -> ResultTable:
    return ResultTable(columns=list(METRICS_HEADER), rows=list(rows), title=title, output_format=output_format)


CALIBRATION_HEADER = ["corruption", "severity", "abs_rel", "clean_abs_rel", "ratio"]


def severity_ratios(results: Dict[EvalKey, MetricsReport]) -> List[Dict[str, Any]]:
    """AbsRel of every corrupted condition relative to the clean AbsRel."""
    clean = results[CLEAN].abs_rel
    if clean <= 0:
        raise ValueError(f"Clean AbsRel must be > 0 to form ratios, got {clean}")
    return [
        {
            "corruption": kind,
            "severity": severity,
            "abs_rel": report.abs_rel,
            "clean_abs_rel": clean,
            "ratio": report.abs_rel / clean,
        }
        for (kind, severity), report in corrupted_only(results).items()
    ]

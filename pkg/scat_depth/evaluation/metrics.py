"""Depth-error metrics and corruption aggregates.

Per condition, DEE = (AbsRel + (1 - delta1)) / 2. For each corruption c:

    CE_c = sum_s DEE_model(c, s) / sum_s DEE_baseline(c, s)
    RR_c = sum_s (1 - DEE_model(c, s)) / (S * (1 - DEE_model(clean)))

mCE and mRR are 100 times the mean over corruptions.
"""

import logging
from collections import defaultdict
from typing import Dict, Hashable, Mapping, Optional, Tuple, Union

import numpy as np

from scat_depth.geometry import DEFAULT_MAX_DEPTH, DEFAULT_MIN_DEPTH, DepthMap
from scat_depth.types import MetricsReport

logger = logging.getLogger(__name__)

DepthLike = Union[DepthMap, np.ndarray]
# (corruption kind, severity)
Condition = Tuple[str, int]


def _as_array(depth: DepthLike) -> np.ndarray:
    if isinstance(depth, DepthMap):
        return np.asarray(depth.values.numpy(), dtype=np.float64)
    return np.asarray(depth, dtype=np.float64)


def depth_metrics(
    pred: DepthLike,
    gt: DepthLike,
    mask: Optional[np.ndarray] = None,
    median_scaling: bool = True,
    min_depth: float = DEFAULT_MIN_DEPTH,
    max_depth: float = DEFAULT_MAX_DEPTH,
) -> MetricsReport:
    """AbsRel, SqRel, RMSE, RMSE log and the three delta accuracies over ``mask``.

    Args:
        pred: Predicted depth.
        gt: Ground-truth depth of the same shape.
        mask: Pixels to score; defaults to every pixel with positive, finite ground truth.
        median_scaling: Rescale pred by median(gt) / median(pred) over the mask first.
        min_depth: Lower clip applied to gt and to the (scaled) prediction.
        max_depth: Upper clip applied to gt and to the (scaled) prediction.

    Returns:
        MetricsReport for this single condition.
    """
    p = _as_array(pred)
    g = _as_array(gt)
    if p.shape != g.shape:
        raise ValueError(f"Prediction shape {p.shape} != ground truth shape {g.shape}")
    valid = np.isfinite(g) & (g > 0)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != g.shape:
            raise ValueError(f"Mask shape {mask.shape} != ground truth shape {g.shape}")
        valid &= mask
    if not valid.any():
        raise ValueError("Depth metrics need a non-empty mask")

    p = p[valid]
    g = np.clip(g[valid], min_depth, max_depth)
    if median_scaling:
        p = p * (np.median(g) / np.median(p))
    p = np.clip(p, min_depth, max_depth)

    ratio = np.maximum(g / p, p / g)
    diff = p - g
    return MetricsReport(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff ** 2 / g)),
        rmse=float(np.sqrt(np.mean(diff ** 2))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2))),
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25 ** 2)),
        delta3=float(np.mean(ratio < 1.25 ** 3)),
    )


def _group_by_kind(reports: Mapping[Condition, MetricsReport]) -> Dict[Hashable, Dict[int, MetricsReport]]:
    grouped: Dict[Hashable, Dict[int, MetricsReport]] = defaultdict(dict)
    for (kind, severity), report in reports.items():
        grouped[kind][severity] = report
    return grouped


def _resilience(kind: Hashable, reports: Dict[int, MetricsReport], clean: MetricsReport) -> float:
    clean_score = 1.0 - clean.dee
    if clean_score == 0:
        logger.warning(f"Clean DEE is exactly 1; resilience of {kind} is undefined")
        return float("nan")
    return sum(1.0 - r.dee for r in reports.values()) / (len(reports) * clean_score)


def corruption_aggregate(
    model_reports: Mapping[Condition, MetricsReport],
    baseline_reports: Mapping[Condition, MetricsReport],
    clean_report_model: MetricsReport,
    clean_report_baseline: MetricsReport,
) -> Tuple[float, float]:
    """(mCE %, mRR %) of a model against a baseline over the same corruption grid.

    Resilience is relative to ``clean_report_model``; ``clean_report_baseline``
    does not enter either aggregate. A clean DEE of exactly 1 gives an mRR of NaN.
    """
    if set(model_reports) != set(baseline_reports):
        raise ValueError(
            f"Model and baseline cover different conditions: "
            f"{sorted(set(model_reports) ^ set(baseline_reports))}"
        )
    if not model_reports:
        raise ValueError("corruption_aggregate needs at least one corrupted condition")

    model = _group_by_kind(model_reports)
    baseline = _group_by_kind(baseline_reports)

    errors = []
    resiliences = []
    for kind in sorted(model):
        base_dee = sum(r.dee for r in baseline[kind].values())
        if base_dee == 0:
            raise ValueError(f"Degenerate baseline: zero DEE summed over {kind}")
        errors.append(sum(r.dee for r in model[kind].values()) / base_dee)
        resiliences.append(_resilience(kind, model[kind], clean_report_model))

    mce = 100.0 * float(np.mean(errors))
    mrr = 100.0 * float(np.mean(resiliences))
    logger.debug(f"mCE={mce:.2f} mRR={mrr:.2f}")
    return mce, mrr

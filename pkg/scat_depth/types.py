from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, TypedDict

OutputFormat = Literal["csv", "markdown", "json"]
PerturbationKind = Literal["generator", "gaussian", "corruption"]
OptimizerName = Literal["sgd", "adam"]

TRAIN_LOG_HEADER = ["step", "L_p", "L_AD", "mean_cos", "frac_neg", "grad_norm_theta", "grad_norm_phi"]
METRICS_HEADER = ["tag", "corruption", "severity", "abs_rel", "sq_rel", "rmse", "rmse_log", "d1", "d2", "d3"]


class ManifestEntry(TypedDict):
    directory: str
    split: str
    seed: int
    files: List[str]


@dataclass
class DatasetManifest:
    """Scene directories written by a dataset build."""

    root: str
    entries: List[ManifestEntry]
    wall_clock_sec: float = 0.0

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e["split"] == name]


@dataclass
class MetricsReport:
    """Depth-error metrics of one evaluation condition."""

    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float
    count: int = 1

    @property
    def dee(self) -> float:
        """Depth estimation error: mean of AbsRel and (1 - delta1)."""
        return (self.abs_rel + (1.0 - self.delta1)) / 2.0

    def values(self) -> List[float]:
        return [self.abs_rel, self.sq_rel, self.rmse, self.rmse_log, self.delta1, self.delta2, self.delta3]

    @classmethod
    def mean(cls, reports: List["MetricsReport"]) -> "MetricsReport":
        if not reports:
            raise ValueError("Cannot average an empty list of metric reports")
        n = len(reports)
        columns = list(zip(*(r.values() for r in reports)))
        return cls(*(sum(c) / n for c in columns), count=sum(r.count for r in reports))


class MetricsRow(TypedDict):
    tag: str
    corruption: str
    severity: int
    abs_rel: Any
    sq_rel: Any
    rmse: Any
    rmse_log: Any
    d1: Any
    d2: Any
    d3: Any


@dataclass
class StepReport:
    step: int
    loss_p: float
    loss_ad: float
    mean_cos: float = 0.0
    frac_neg: float = 0.0
    grad_norm_theta: float = 0.0
    grad_norm_phi: float = 0.0
    rejected: bool = False
    stats: Optional[Any] = field(default=None, repr=False)

    def as_row(self) -> List:
        return [
            self.step,
            self.loss_p,
            self.loss_ad,
            self.mean_cos,
            self.frac_neg,
            self.grad_norm_theta,
            self.grad_norm_phi,
        ]


@dataclass
class FitResult:
    epochs: int
    steps: int
    rollbacks: int
    reports: List[StepReport]
    wall_clock_sec: float = 0.0

    @property
    def losses(self) -> List[float]:
        return [r.loss_p for r in self.reports if not r.rejected]


@dataclass
class AscentTrace:
    losses: List[float]
    delta_norms: List[float]


class RunManifest(TypedDict):
    command: List[str]
    config: Dict[str, Any]
    code_hash: str
    seeds: Dict[str, int]
    outputs: List[str]
    wall_clock_sec: float


@dataclass
class ResultTable:
    """Tabular command output with rendering capabilities."""

    columns: List[str]
    rows: List[Dict[str, Any]]
    title: str = "Results"
    output_format: str = field(default="csv")
    wall_clock_sec: float = 0.0

    def __str__(self) -> str:
        """Render rows using the configured format."""
        from scat_depth.renderers.factory import create_renderer
        renderer = create_renderer(self.output_format)
        return renderer.render(self)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "columns": self.columns,
            "rows": self.rows,
            "wall_clock_sec": self.wall_clock_sec,
        }

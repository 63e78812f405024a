from scat_depth.synthworld.corruptions import (
    CORRUPTION_KINDS,
    SEVERITIES,
    CorruptionSpec,
    corrupt,
    corruption_grid,
    create_corruption,
)
from scat_depth.synthworld.dataset import dataset_build, load_dataset, read_manifest
from scat_depth.synthworld.scene import SceneSample, generate_scene, to_batch

__all__ = [
    "CORRUPTION_KINDS",
    "SEVERITIES",
    "CorruptionSpec",
    "corrupt",
    "corruption_grid",
    "create_corruption",
    "dataset_build",
    "load_dataset",
    "read_manifest",
    "SceneSample",
    "generate_scene",
    "to_batch",
]

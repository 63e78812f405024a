import numpy as np
import pytest

from scat_depth.networks import ScalingDepthNet
from scat_depth.probes import (
    GRADIENT_PROBE_HEADER,
    SENSITIVITY_HEADER,
    gradient_probe,
    probe_batches,
    sensitivity_probe,
    unit_perturbations,
)
from scat_depth.trainer import SCATTrainer


@pytest.fixture(scope="module")
def images(tiny_scenes):
    return np.stack([s.target for s in tiny_scenes[:2]])


def test_unit_perturbations_have_unit_norm():
    deltas = unit_perturbations((2, 3, 4, 4), trials=3, seed=0)
    assert len(deltas) == 3
    for delta in deltas:
        assert np.allclose(np.linalg.norm(delta.reshape(2, -1), axis=1), 1.0)


def test_sensitivity_singleton_and_kappa_restored(images):
    net = ScalingDepthNet(widths=(4, 8), kappa=0.7, seed=1)
    table = sensitivity_probe(net, images, kappas=[0.3], trials=2)
    assert table.columns == SENSITIVITY_HEADER
    assert len(table.rows) == 1
    assert table.rows[0]["kappa"] == 0.3
    assert table.rows[0]["mean_deviation"] > 0
    assert net.kappa == (0.7, 0.7)


def test_sensitivity_is_deterministic(images):
    net = ScalingDepthNet(widths=(4, 8), seed=1)
    first = sensitivity_probe(net, images, kappas=[0.1, 1.0], trials=2, seed=4)
    second = sensitivity_probe(net, images, kappas=[0.1, 1.0], trials=2, seed=4)
    assert first.rows == second.rows
    with pytest.raises(ValueError):
        sensitivity_probe(net, images, kappas=[1.0], trials=0)


def test_probe_batches_cycle_through_scenes(tiny_scenes):
    batches = list(probe_batches(tiny_scenes, batch_size=3, steps=3, seed=0))
    assert [b[1].shape[0] for b in batches] == [3, 1, 3]
    assert list(probe_batches([], batch_size=2, steps=0, seed=0)) == []


def test_gradient_probe_emits_one_row_per_step_and_mode(tiny_config, tiny_camera, tiny_scenes):
    table = gradient_probe(lambda: SCATTrainer(tiny_config, tiny_camera), tiny_scenes, steps=2)
    assert table.columns == GRADIENT_PROBE_HEADER
    assert [row["mode"] for row in table.rows] == ["cgs", "cgs", "plain", "plain"]
    cgs = [row["mean_cos"] for row in table.rows[:2]]
    assert all(c >= -1e-7 for c in cgs), "Surgery leaves no conflicting gradient"


def test_gradient_probe_with_zero_steps(tiny_config, tiny_camera, tiny_scenes):
    table = gradient_probe(lambda: SCATTrainer(tiny_config, tiny_camera), tiny_scenes, steps=0)
    assert table.rows == []


def test_gradient_cosines_keep_rows_of_rolled_back_steps(tiny_config, tiny_camera, tiny_scenes, monkeypatch):
    clean_gradient = SCATTrainer._clean_gradient

    def first_step_diverges(trainer, batch):
        gradient, loss = clean_gradient(trainer, batch)
        return gradient, float("nan") if trainer.step_count == 1 else loss

    monkeypatch.setattr(SCATTrainer, "_clean_gradient", first_step_diverges)
    table = gradient_probe(lambda: SCATTrainer(tiny_config, tiny_camera), tiny_scenes, steps=2)
    assert [(row["mode"], row["iter"], row["rejected"]) for row in table.rows] == [
        ("cgs", 1, True), ("cgs", 2, False), ("plain", 1, True), ("plain", 2, False)
    ]
    assert np.isnan(table.rows[0]["mean_cos"])
    assert table.rows[1]["mean_cos"] >= -1e-7

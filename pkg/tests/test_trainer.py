import numpy as np
import pytest

from scat_depth.autograd import Tensor
from scat_depth.errors import NumericalAbort
from scat_depth.geometry import inverse_warp
from scat_depth.synthworld.scene import to_batch
from scat_depth.trainer import SCATTrainer
from scat_depth.trainer.ablation import ablation_cells, parse_axes, run_ablation
from scat_depth.networks import scaled_epsilon
from scat_depth.surgery import ConflictGradientSurgery, PlainAdversarialSum
from scat_depth.types import TRAIN_LOG_HEADER


@pytest.fixture
def batch(tiny_scenes):
    return to_batch(tiny_scenes[:2])


def states_equal(a, b):
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def test_combiner_follows_config(tiny_config, tiny_camera):
    assert isinstance(SCATTrainer(tiny_config, tiny_camera).combiner, ConflictGradientSurgery)
    assert isinstance(SCATTrainer(tiny_config.replace(enable_cgs=False), tiny_camera).combiner, PlainAdversarialSum)
    assert SCATTrainer(tiny_config.replace(enable_sdn=False), tiny_camera).depth_net.kappa == (1.0, 1.0)


def test_blend_warms_up(tiny_config, tiny_camera):
    trainer = SCATTrainer(tiny_config.replace(epochs=10, blend_warmup_fraction=0.2), tiny_camera)
    values = []
    for _ in range(4):
        values.append(trainer.blend())
        trainer.epoch += 1
    assert values == [0.0, 0.5, 1.0, 1.0]
    assert SCATTrainer(tiny_config.replace(blend_warmup_fraction=0.0), tiny_camera).blend() == 1.0


def test_first_step_has_no_adversarial_branches(tiny_config, tiny_camera, batch):
    """The history buffer starts empty, so only the clean term drives depth and pose."""
    trainer = SCATTrainer(tiny_config, tiny_camera)
    before = trainer.depth_net.state_dict()
    report = trainer.train_step(batch)

    assert not report.rejected
    assert report.stats.cosines == []
    assert report.grad_norm_phi > 0, "The live generator still ascends"
    assert not states_equal(before, trainer.depth_net.state_dict())
    assert len(trainer.train_log) == 1 and len(trainer.train_log.header) == len(TRAIN_LOG_HEADER)


def test_zero_budget_adversarial_loss_equals_clean_loss(tiny_config, tiny_camera, batch):
    config = tiny_config.replace(epsilon_m=0.0, smoothness_weight=0.0)
    report = SCATTrainer(config, tiny_camera).train_step(batch)
    assert report.loss_ad == pytest.approx(report.loss_p, abs=1e-6)


def test_ada_off_trains_clean_only(tiny_config, tiny_camera, tiny_scenes):
    trainer = SCATTrainer(tiny_config.replace(enable_ada=False, epochs=1), tiny_camera)
    result = trainer.fit(tiny_scenes)

    assert result.steps == 2
    assert all(r.loss_ad == 0.0 and r.grad_norm_phi == 0.0 for r in result.reports)
    assert len(trainer.buffer) == 0


def test_buffer_grows_at_epoch_end_up_to_capacity(tiny_config, tiny_camera):
    trainer = SCATTrainer(tiny_config, tiny_camera)
    sizes = []
    for _ in range(4):
        trainer.end_epoch()
        sizes.append(len(trainer.buffer))
    assert sizes == [1, 2, 3, 3]
    assert trainer.buffer.version_tags() == [2, 3, 4]


def test_step_snapshots(tiny_config, tiny_camera, batch):
    trainer = SCATTrainer(tiny_config.replace(snapshot_every_steps=2), tiny_camera)
    trainer.train_step(batch)
    assert len(trainer.buffer) == 0
    trainer.train_step(batch)
    assert trainer.buffer.version_tags() == [2]
    trainer.end_epoch()
    assert len(trainer.buffer) == 1, "Epoch ends do not snapshot in step mode"


def test_second_epoch_uses_buffered_generators(tiny_config, tiny_camera, tiny_scenes):
    trainer = SCATTrainer(tiny_config, tiny_camera)
    result = trainer.fit(tiny_scenes)

    assert result.epochs == 2 and result.steps == 4
    later = result.reports[2:]
    assert all(len(r.stats.cosines) == 1 for r in later), "One snapshot in the buffer after the first epoch"
    assert all(cos >= -1e-7 for r in later for cos in r.stats.effective.cosines)
    assert len(trainer.grad_stats) == 4
    assert result.wall_clock_sec >= 0


def test_fit_is_deterministic(tiny_config, tiny_camera, tiny_scenes):
    first = SCATTrainer(tiny_config, tiny_camera)
    first.fit(tiny_scenes)
    second = SCATTrainer(tiny_config, tiny_camera)
    second.fit(tiny_scenes)
    assert first.train_log.rows == second.train_log.rows
    assert states_equal(first.depth_net.state_dict(), second.depth_net.state_dict())


def test_fit_requires_scenes(tiny_config, tiny_camera):
    with pytest.raises(ValueError):
        SCATTrainer(tiny_config, tiny_camera).fit([])


@pytest.mark.parametrize("perturbation", ["gaussian", "corruption"])
def test_fixed_perturbations_fill_every_branch(tiny_config, tiny_camera, batch, perturbation):
    trainer = SCATTrainer(tiny_config.replace(perturbation=perturbation), tiny_camera)
    report = trainer.train_step(batch)
    assert len(report.stats.cosines) == tiny_config.sample_j
    assert report.grad_norm_phi == 0.0
    assert np.isfinite(report.loss_p)


def test_mix_batch_uses_one_branch(tiny_config, tiny_camera, batch):
    trainer = SCATTrainer(tiny_config.replace(perturbation="gaussian", mix_batch=True), tiny_camera)
    assert len(trainer.train_step(batch).stats.cosines) == 1


@pytest.mark.parametrize("perturbation", ["generator", "gaussian"])
def test_step_survives_fully_masked_warps(tiny_config, tiny_camera, batch, perturbation, monkeypatch, caplog):
    def masked_out(*args, **kwargs):
        image, mask = inverse_warp(*args, **kwargs)
        return image, Tensor(np.zeros(mask.shape))

    monkeypatch.setattr("scat_depth.trainer.trainer.inverse_warp", masked_out)
    trainer = SCATTrainer(tiny_config.replace(perturbation=perturbation), tiny_camera)
    report = trainer.train_step(batch)

    assert not report.rejected
    assert report.loss_ad == 0.0
    assert report.grad_norm_phi == 0.0
    assert "empty valid mask" in caplog.text


def test_rejected_steps_roll_back_then_abort(tiny_config, tiny_camera, batch, monkeypatch):
    trainer = SCATTrainer(tiny_config, tiny_camera)
    clean_gradient = trainer._clean_gradient
    monkeypatch.setattr(trainer, "_clean_gradient", lambda b: (clean_gradient(b)[0], float("nan")))
    before = trainer.depth_net.state_dict()

    for expected in (1, 2):
        report = trainer.train_step(batch)
        assert report.rejected
        assert trainer.rollbacks == expected
    assert states_equal(before, trainer.depth_net.state_dict())
    assert len(trainer.train_log) == 0

    with pytest.raises(NumericalAbort):
        trainer.train_step(batch)


def test_successful_step_resets_rejection_streak(tiny_config, tiny_camera, batch, monkeypatch):
    trainer = SCATTrainer(tiny_config, tiny_camera)
    clean_gradient = trainer._clean_gradient
    monkeypatch.setattr(trainer, "_clean_gradient", lambda b: (clean_gradient(b)[0], float("nan")))
    trainer.train_step(batch)
    trainer.train_step(batch)
    monkeypatch.setattr(trainer, "_clean_gradient", clean_gradient)
    assert not trainer.train_step(batch).rejected
    monkeypatch.setattr(trainer, "_clean_gradient", lambda b: (clean_gradient(b)[0], float("inf")))
    assert trainer.train_step(batch).rejected
    assert trainer.rollbacks == 3


def test_generator_ascent_check(tiny_config, tiny_camera, batch):
    trainer = SCATTrainer(tiny_config.replace(lr_phi=0.05), tiny_camera)
    before = trainer.generator.state_dict()
    trace = trainer.generator_ascent_check(batch, steps=3)

    epsilon = scaled_epsilon(tiny_config.epsilon_m, tiny_camera.height, tiny_camera.width)
    assert len(trace.losses) == 4
    assert np.allclose(trace.delta_norms, epsilon, rtol=1e-4)
    assert states_equal(before, trainer.generator.state_dict()), "Ascent check must not leave a trace"

    assert len(trainer.generator_ascent_check(batch, steps=0).losses) == 1
    with pytest.raises(ValueError):
        SCATTrainer(tiny_config.replace(perturbation="gaussian"), tiny_camera).generator_ascent_check(batch, 1)


def test_ablation_cells():
    from scat_depth.trainer.config import TrainConfig

    cells = ablation_cells(TrainConfig(), parse_axes("cgs,sdn"))
    assert [tag for tag, _ in cells] == ["cgs=on,sdn=on", "cgs=on,sdn=off", "cgs=off,sdn=on", "cgs=off,sdn=off"]
    assert not cells[-1][1].enable_cgs and not cells[-1][1].enable_sdn
    assert [tag for tag, _ in ablation_cells(TrainConfig(), ["epsilon_m"])][0] == "epsilon_m=20"
    for bad in ("", "cgs,bogus", "cgs,cgs"):
        with pytest.raises(ValueError):
            parse_axes(bad)


def test_run_ablation(tiny_config, tiny_camera, tiny_scenes):
    table = run_ablation(tiny_config.replace(epochs=1), ["cgs"], tiny_scenes[:2], tiny_scenes[2:], tiny_camera)
    assert [row["tag"] for row in table.rows] == ["cgs=on", "cgs=off"]
    assert all(row["corruption"] == "clean" and row["rollbacks"] == 0 for row in table.rows)
    assert str(table).splitlines()[0].endswith("rollbacks")

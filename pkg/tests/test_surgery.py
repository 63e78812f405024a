import numpy as np
import pytest

from scat_depth.networks import PerturbationGenerator, snapshot
from scat_depth.surgery import (
    ConflictGradientSurgery,
    ConflictStats,
    FlatGradient,
    GeneratorBuffer,
    PlainAdversarialSum,
    create_combiner,
    record_stats,
    surgery,
)
from scat_depth.surgery.stats import GRAD_STATS_HEADER, HISTOGRAM_BINS


def flat(values) -> FlatGradient:
    return FlatGradient.from_named({"g": np.asarray(values, dtype=np.float64)})


def test_conflicting_gradient_is_projected():
    update, stats = surgery(flat([1.0, 0.0]), [flat([-1.0, 1.0])], blend=1.0)
    assert np.allclose(update.values, [1.0, 1.0])
    assert stats.fraction_negative == 1.0
    assert stats.effective.mean_cosine == pytest.approx(0.0, abs=1e-12)


def test_agreeing_gradient_passes_unchanged():
    update, stats = surgery(flat([1.0, 0.0]), [flat([1.0, 1.0])], blend=0.5)
    assert np.allclose(update.values, [1.5, 0.5])
    assert stats.fraction_negative == 0.0


def test_adjusted_cosines_are_never_negative():
    rng = np.random.default_rng(0)
    combiner = ConflictGradientSurgery()
    worst = 1.0
    for _ in range(1000):
        g_clean = flat(rng.standard_normal(10))
        advs = [flat(rng.standard_normal(10)) for _ in range(3)]
        _, stats = combiner.combine(g_clean, advs, blend=1.0)
        worst = min(worst, min(stats.effective.cosines))
    assert worst >= -1e-7, f"Most negative adjusted cosine {worst}"


def test_zero_blend_returns_clean_gradient():
    update, _ = surgery(flat([1.0, 2.0]), [flat([-3.0, 1.0])], blend=0.0)
    assert np.array_equal(update.values, [1.0, 2.0])


def test_no_adversarial_gradients():
    update, stats = surgery(flat([1.0, 2.0]), [], blend=1.0)
    assert np.array_equal(update.values, [1.0, 2.0])
    assert stats.cosines == []


def test_blend_range_and_layout_checked():
    with pytest.raises(ValueError):
        surgery(flat([1.0]), [flat([1.0])], blend=1.5)
    with pytest.raises(ValueError):
        surgery(flat([1.0, 2.0]), [flat([1.0])], blend=1.0)


def test_plain_sum_ignores_blend_and_keeps_conflicts():
    update, stats = PlainAdversarialSum().combine(flat([1.0, 0.0]), [flat([-1.0, 1.0]), flat([-1.0, -1.0])], blend=0.0)
    assert np.allclose(update.values, [0.0, 0.0])
    assert stats.effective.fraction_negative == 1.0


def test_create_combiner():
    assert isinstance(create_combiner("cgs"), ConflictGradientSurgery)
    assert isinstance(create_combiner("plain"), PlainAdversarialSum)
    with pytest.raises(ValueError):
        create_combiner("pcgrad")


def test_flat_gradient_named_round_trip():
    grads = {"a": np.ones((2, 3)), "b": np.arange(4.0)}
    g = FlatGradient.from_named(grads)
    assert g.values.size == 10
    assert np.array_equal(g.to_named()["b"], grads["b"])
    assert set(FlatGradient.from_named({"depth.w": np.ones(2), "pose.w": np.ones(1)}).subset("pose.")) == {"w"}


def test_histogram_and_record_stats():
    stats = ConflictStats.from_cosines([-1.0, -0.5, 0.2, 1.0])
    assert sum(stats.histogram()) == 4
    rows = []
    row = record_stats(stats, rows, iteration=7)
    assert rows == [row]
    assert len(row) == len(GRAD_STATS_HEADER) == 3 + HISTOGRAM_BINS
    assert row[:3] == [7, pytest.approx(-0.075), 0.5]


def make_snapshot(tag: int) -> PerturbationGenerator:
    return snapshot(PerturbationGenerator(epsilon=0.1, widths=(4,), seed=tag), epoch=tag)


def test_buffer_evicts_oldest_first():
    buffer = GeneratorBuffer(capacity=3)
    for tag in range(5):
        buffer.add(make_snapshot(tag))
    assert buffer.version_tags() == [2, 3, 4]


def test_buffer_sample_without_replacement():
    buffer = GeneratorBuffer(capacity=4, rng_seed=1)
    assert buffer.sample(2) == []
    for tag in range(4):
        buffer.add(make_snapshot(tag))
    picks = buffer.sample(3)
    assert len({p.version_tag for p in picks}) == 3
    assert len(buffer.sample(10)) == 4
    with pytest.raises(ValueError):
        buffer.sample(0)
    with pytest.raises(ValueError):
        GeneratorBuffer(capacity=0)


def test_buffer_rng_state_restores_sampling():
    buffer = GeneratorBuffer(capacity=4, rng_seed=2)
    for tag in range(4):
        buffer.add(make_snapshot(tag))
    state = buffer.rng_state()
    first = [s.version_tag for s in buffer.sample(2)]
    buffer.set_rng_state(state)
    assert [s.version_tag for s in buffer.sample(2)] == first

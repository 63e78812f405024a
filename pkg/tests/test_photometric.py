import numpy as np
import pytest

from scat_depth.autograd import Tensor, finite_difference_check, precision
from scat_depth.photometric import (
    LossWeights,
    adversarial_loss,
    masked_mean,
    pe,
    reprojection_loss,
    reprojection_term,
    smoothness_loss,
    ssim,
    total_clean_objective,
)


@pytest.fixture(scope="module")
def images():
    rng = np.random.default_rng(11)
    return [Tensor(rng.uniform(size=(2, 3, 8, 12))) for _ in range(3)]


def ones_mask(image: Tensor) -> Tensor:
    n, _, h, w = image.shape
    return Tensor(np.ones((n, 1, h, w)))


def test_pe_of_identical_images_is_zero(images):
    a = images[0]
    assert np.abs(pe(a, a).numpy()).max() < 1e-6
    assert np.allclose(ssim(a, a).numpy(), 1.0, atol=1e-6)


def test_pe_with_alpha_zero_is_channel_mean_l1():
    a = Tensor(np.zeros((1, 3, 4, 4)))
    b = Tensor(np.full((1, 3, 4, 4), 0.5))
    out = pe(a, b, LossWeights(alpha=0.0)).numpy()
    assert out.shape == (1, 1, 4, 4)
    assert np.allclose(out, 0.5)


def test_pe_rejects_shape_mismatch(images):
    with pytest.raises(ValueError):
        pe(images[0], Tensor(np.zeros((2, 3, 8, 10))))


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(alpha=1.5)
    with pytest.raises(ValueError):
        LossWeights(smoothness_weight=-1.0)


def test_masked_mean_counts_only_valid_pixels():
    error = Tensor(np.arange(4.0).reshape(1, 1, 2, 2))
    mask = Tensor(np.array([1.0, 0.0, 0.0, 1.0]).reshape(1, 1, 2, 2))
    assert masked_mean(error, mask).item() == pytest.approx(1.5)


def test_masked_mean_of_empty_mask_is_zero(caplog):
    error = Tensor(np.ones((1, 1, 2, 2)))
    assert masked_mean(error, Tensor(np.zeros((1, 1, 2, 2)))).item() == 0.0
    assert "empty valid mask" in caplog.text


def test_reprojection_term_sums_sources(images):
    target, a, b = images
    weights = LossWeights()
    both = reprojection_term(target, [(a, ones_mask(a)), (b, ones_mask(b))], weights).item()
    single_a = reprojection_term(target, [(a, ones_mask(a))], weights).item()
    single_b = reprojection_term(target, [(b, ones_mask(b))], weights).item()
    assert both == pytest.approx(single_a + single_b, rel=1e-5)


def test_min_reprojection_is_not_larger_than_either_source(images):
    target, a, b = images
    warped = [(a, ones_mask(a)), (b, ones_mask(b))]
    minimum = reprojection_term(target, warped, min_reprojection=True).item()
    assert minimum <= reprojection_term(target, warped[:1]).item() + 1e-6
    assert minimum <= reprojection_term(target, warped[1:]).item() + 1e-6


def test_auto_mask_drops_pixels_explained_by_identity(images):
    target, a, _ = images
    # the unwarped source equals the target, so no pixel beats the identity error
    loss = reprojection_term(target, [(a, ones_mask(a))], identity_sources=[target]).item()
    assert loss == 0.0


def test_reprojection_term_requires_sources(images):
    with pytest.raises(ValueError):
        reprojection_term(images[0], [])


def test_reprojection_loss_adds_adversarial_terms(images):
    target, a, b = images
    clean = [(a, ones_mask(a))]
    adv = [(b, ones_mask(b))]
    total = reprojection_loss(target, clean, adv).item()
    expected = reprojection_term(target, clean).item() + adversarial_loss(target, adv).item()
    assert total == pytest.approx(expected, rel=1e-5)
    assert reprojection_loss(target, clean, []).item() == pytest.approx(reprojection_term(target, clean).item())


def test_smoothness_of_constant_disparity_is_zero(images):
    disp = Tensor(np.full((2, 1, 8, 12), 0.3))
    assert smoothness_loss(disp, images[0]).item() == pytest.approx(0.0, abs=1e-7)


def test_total_clean_objective_adds_weighted_smoothness(images):
    target, a, _ = images
    disp = Tensor(np.random.default_rng(2).uniform(0.1, 0.9, size=(2, 1, 8, 12)))
    weights = LossWeights(smoothness_weight=0.5)
    warped = [(a, ones_mask(a))]
    total = total_clean_objective(target, warped, disp, weights).item()
    expected = reprojection_term(target, warped, weights).item() + 0.5 * smoothness_loss(disp, target).item()
    assert total == pytest.approx(expected, rel=1e-5)


def test_pe_and_smoothness_gradcheck():
    rng = np.random.default_rng(5)
    target = rng.uniform(size=(1, 3, 6, 6))
    warped = rng.uniform(size=(1, 3, 6, 6))
    disp = rng.uniform(0.2, 0.8, size=(1, 1, 6, 6))

    def photometric(t):
        return masked_mean(pe(Tensor(target), t), Tensor(np.ones((1, 1, 6, 6))))

    assert finite_difference_check(photometric, warped) < 1e-4
    assert finite_difference_check(lambda d: smoothness_loss(d, Tensor(target)), disp) < 1e-4


def test_losses_stay_float64_under_precision(images):
    with precision(np.float64):
        a = Tensor(np.ones((1, 3, 4, 4)))
        assert pe(a, a).dtype == np.float64

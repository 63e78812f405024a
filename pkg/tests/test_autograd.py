import numpy as np
import pytest

from scat_depth.autograd import Tape, Tensor, finite_difference_check, get_default_dtype, precision
from scat_depth.autograd import ops

TOLERANCE = 1e-4


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(1234)


def weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.sum(out * Tensor(weights))


def test_default_dtype_is_float32_and_precision_restores():
    assert get_default_dtype() == np.float32
    with precision(np.float64):
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_tape_records_only_under_requires_grad():
    x = Tensor([1.0, 2.0], requires_grad=True)
    c = Tensor([3.0, 4.0])
    with Tape() as tape:
        y = ops.sum(x * c)
        z = c * c
    tape.backward(y)

    assert np.allclose(tape.gradient(x), [3.0, 4.0])
    assert tape.node_of(z) is None, "Constant-only ops must not be recorded"


def test_gradients_fill_zeros_for_untouched_leaves():
    used = Tensor([1.0], requires_grad=True)
    unused = Tensor([5.0, 6.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum(used * used)
    tape.backward(loss)
    grads = tape.gradients({"used": used, "unused": unused})

    assert np.allclose(grads["used"], [2.0])
    assert np.array_equal(grads["unused"], np.zeros(2))


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = x * x
    with pytest.raises(ValueError):
        tape.backward(y)


def test_elementwise_ops_gradcheck(rng):
    x = rng.uniform(0.5, 2.0, size=(2, 3))
    w = rng.standard_normal((2, 3))
    other = rng.uniform(0.5, 2.0, size=(2, 3))

    def f(t):
        out = ops.exp(ops.scalar_mul(t, 0.3)) + ops.log(t) * Tensor(other)
        out = out / (t + Tensor(other)) + ops.sigmoid(t) * ops.tanh(t)
        return weighted_sum(out, w)

    assert finite_difference_check(f, x) < TOLERANCE


def test_elu_and_broadcast_gradcheck(rng):
    x = rng.uniform(0.1, 1.0, size=(2, 4)) * rng.choice([-1.0, 1.0], size=(2, 4))
    row = rng.standard_normal((1, 4))
    w = rng.standard_normal((2, 4))

    def f(t):
        return weighted_sum(ops.elu(t) * Tensor(row) + ops.mean(t, axis=1, keepdims=True), w)

    assert finite_difference_check(f, x) < TOLERANCE


def test_matmul_reshape_transpose_gradcheck(rng):
    x = rng.standard_normal((2, 3, 4))
    b = rng.standard_normal((2, 4, 2))
    w = rng.standard_normal((2, 2, 3))

    def f(t):
        return weighted_sum(ops.transpose(ops.matmul(t, Tensor(b)), (0, 2, 1)), w)

    assert finite_difference_check(f, x) < TOLERANCE


def test_conv2d_gradcheck_both_inputs(rng):
    image = rng.standard_normal((1, 2, 5, 6))
    kernel = rng.standard_normal((3, 2, 3, 3))
    w = rng.standard_normal((1, 3, 5, 6))

    assert finite_difference_check(lambda t: weighted_sum(ops.conv2d(t, Tensor(kernel), padding=1), w), image) < TOLERANCE
    assert finite_difference_check(lambda k: weighted_sum(ops.conv2d(Tensor(image), k, padding=1), w), kernel) < TOLERANCE


def test_pool_upsample_pad_concat_gradcheck(rng):
    x = rng.standard_normal((1, 2, 4, 6))
    w_pool = rng.standard_normal((1, 4, 2, 3))
    w_up = rng.standard_normal((1, 2, 8, 12))
    w_pad = rng.standard_normal((1, 2, 6, 8))

    def f(t):
        pooled = ops.avg_pool2d(t, 2, 2)
        joined = ops.concat_channels([pooled, ops.scalar_mul(pooled, 2.0)])
        return (
            weighted_sum(joined, w_pool)
            + weighted_sum(ops.upsample_nearest_x2(t), w_up)
            + weighted_sum(ops.pad2d(t, 1, mode="reflect"), w_pad)
        )

    assert finite_difference_check(f, x) < TOLERANCE


def test_grid_sample_gradcheck_both_inputs(rng):
    n, c, h, w = 1, 2, 5, 7
    image = rng.standard_normal((n, c, h, w))
    # keep sample points away from integer pixel positions, where bilinear weights kink
    px = rng.integers(0, w - 1, size=(n, 3, 4)) + rng.uniform(0.2, 0.8, size=(n, 3, 4))
    py = rng.integers(0, h - 1, size=(n, 3, 4)) + rng.uniform(0.2, 0.8, size=(n, 3, 4))
    grid = np.stack([px / (w - 1) * 2 - 1, py / (h - 1) * 2 - 1], axis=-1)
    weights = rng.standard_normal((n, c, 3, 4))

    assert finite_difference_check(lambda t: weighted_sum(ops.grid_sample(t, Tensor(grid)), weights), image) < TOLERANCE
    assert finite_difference_check(lambda g: weighted_sum(ops.grid_sample(Tensor(image), g), weights), grid) < TOLERANCE


def test_identity_grid_sample_is_exact():
    from scat_depth.geometry import identity_grid

    image = np.random.default_rng(0).uniform(size=(2, 3, 6, 9))
    out = ops.grid_sample(Tensor(image), Tensor(identity_grid(2, 6, 9)))
    assert np.array_equal(out.numpy(), Tensor(image).numpy())


def test_rodrigues_helpers_gradcheck(rng):
    r = rng.standard_normal((2, 3)) * 0.4
    w_skew = rng.standard_normal((2, 3, 3))

    def f(t):
        theta_sq = ops.sum(t * t, axis=1)
        return (
            ops.sum(ops.sin_over_theta(theta_sq))
            + ops.sum(ops.one_minus_cos_over_theta_sq(theta_sq))
            + weighted_sum(ops.skew(t), w_skew)
        )

    assert finite_difference_check(f, r) < TOLERANCE


def test_rodrigues_helpers_near_zero_angle():
    with precision(np.float64):
        tiny = Tensor(np.array([0.0, 1e-12]))
        assert np.allclose(ops.sin_over_theta(tiny).numpy(), 1.0)
        assert np.allclose(ops.one_minus_cos_over_theta_sq(tiny).numpy(), 0.5)


def test_sphere_project_norm_and_gradcheck(rng):
    raw = rng.standard_normal((2, 3, 4, 4))
    w = rng.standard_normal((2, 3, 4, 4))
    with precision(np.float64):
        out = ops.sphere_project(Tensor(raw), 2.5).numpy()
    norms = np.linalg.norm(out.reshape(2, -1), axis=1)
    assert np.allclose(norms, 2.5, atol=1e-9), f"Projected norms {norms}"

    assert finite_difference_check(lambda t: weighted_sum(ops.sphere_project(t, 2.5), w), raw) < TOLERANCE


def test_sphere_project_zero_radius_gives_zeros():
    out = ops.sphere_project(Tensor(np.ones((1, 3, 2, 2))), 0.0)
    assert not out.numpy().any()


def test_finite_difference_check_detects_wrong_gradient():
    class WrongSquare(ops.Function):
        def forward(self, x):
            self.x = x
            return x * x

        def backward(self, grad):
            return (grad * self.x,)  # missing the factor 2

    x = np.array([0.7, -1.3])
    assert finite_difference_check(lambda t: ops.sum(WrongSquare.apply(t)), x) > 0.1

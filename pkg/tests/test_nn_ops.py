"""Per-op numerical checks.

The forward convolution is compared against a plain nested-loop reference
and every backward pass against central finite differences in float64, so
the fast im2col path never becomes its own authority.
"""

import numpy as np
import pytest

from gradcheck import conv_naive, numgrad, rand_array, rel_err
from pilotstack.nn.ops import (conv2d_backward, conv2d_forward,
                               dense_backward, dense_forward,
                               dropout_backward, dropout_forward,
                               flatten_backward, flatten_forward,
                               mse_dual_head_loss, relu_backward,
                               relu_forward)

FD_TOL = 1e-6  # float64 end to end, so central differences are this sharp


# -- convolution forward ----------------------------------------------------

def test_conv_1x1_identity_kernel():
    x = rand_array((5, 6, 1), seed=1)
    w = np.ones((1, 1, 1, 1))
    b = np.zeros(1)
    out, _ = conv2d_forward(x, w, b, stride=1)
    assert np.array_equal(out, x)


def test_conv_ones_kernel_sums_window():
    x = np.ones((3, 3, 1))
    w = np.ones((2, 2, 1, 1))
    out, _ = conv2d_forward(x, w, np.zeros(1), stride=1)
    assert out.shape == (2, 2, 1)
    assert np.all(out == 4.0)


def test_conv_output_shape_stride_two():
    x = np.zeros((120, 160, 3), dtype=np.float32)
    w = np.zeros((5, 5, 3, 24), dtype=np.float32)
    out, _ = conv2d_forward(x, w, np.zeros(24, dtype=np.float32), stride=2)
    assert out.shape == (58, 78, 24)
    assert out.dtype == np.float32


def test_conv_batched_and_squeezed_agree():
    x = rand_array((2, 7, 9, 3), seed=3)
    w = rand_array((3, 3, 3, 4), seed=4)
    b = rand_array((4,), seed=5)
    batched, _ = conv2d_forward(x, w, b, stride=2)
    single, _ = conv2d_forward(x[1], w, b, stride=2)
    assert batched.shape == (2, 3, 4, 4)
    assert single.shape == (3, 4, 4)
    assert np.allclose(batched[1], single, atol=0, rtol=0)


def test_conv_input_validation():
    x = rand_array((6, 6, 2), seed=1)
    with pytest.raises(ValueError, match="channels"):
        conv2d_forward(x, rand_array((3, 3, 3, 4), seed=2), np.zeros(4), 1)
    with pytest.raises(ValueError, match="stride"):
        conv2d_forward(x, rand_array((3, 3, 2, 4), seed=2), np.zeros(4), 0)
    with pytest.raises(ValueError, match="kernel larger"):
        conv2d_forward(x, rand_array((7, 3, 2, 4), seed=2), np.zeros(4), 1)


@pytest.mark.parametrize("case", range(8))
def test_conv_matches_naive_reference(case):
    shapes = [
        (1, 5, 5, 1, 3, 1), (2, 6, 7, 2, 3, 1), (1, 8, 8, 3, 3, 2),
        (2, 9, 6, 1, 2, 2), (1, 7, 7, 2, 5, 1), (3, 5, 9, 2, 3, 3),
        (1, 10, 10, 1, 4, 2), (2, 6, 6, 3, 2, 1),
    ]
    n, h, wd, c, k, stride = shapes[case]
    f = case % 3 + 1
    x = rand_array((n, h, wd, c), seed=100 + case)
    w = rand_array((k, k, c, f), seed=200 + case)
    b = rand_array((f,), seed=300 + case)
    fast, _ = conv2d_forward(x, w, b, stride)
    slow = conv_naive(x, w, b, stride)
    assert np.max(np.abs(fast - slow)) < 1e-12


# -- backward passes against finite differences -----------------------------

def test_conv_backward_matches_fd():
    x = rand_array((2, 6, 7, 2), seed=11)
    w = rand_array((3, 3, 2, 3), seed=12)
    b = rand_array((3,), seed=13)
    proj = rand_array((2, 2, 3, 3), seed=14)  # random scalarizer

    def loss_x(xv):
        out, _ = conv2d_forward(xv, w, b, 2)
        return float(np.sum(out * proj))

    def loss_w(wv):
        out, _ = conv2d_forward(x, wv, b, 2)
        return float(np.sum(out * proj))

    def loss_b(bv):
        out, _ = conv2d_forward(x, w, bv, 2)
        return float(np.sum(out * proj))

    out, cache = conv2d_forward(x, w, b, 2)
    dx, dw, db = conv2d_backward(proj, cache)
    assert rel_err(dx, numgrad(loss_x, x)) < FD_TOL
    assert rel_err(dw, numgrad(loss_w, w)) < FD_TOL
    assert rel_err(db, numgrad(loss_b, b)) < FD_TOL


def test_conv_backward_unbatched_shapes():
    x = rand_array((5, 5, 2), seed=21)
    w = rand_array((3, 3, 2, 4), seed=22)
    out, cache = conv2d_forward(x, w, np.zeros(4), 1)
    dx, dw, db = conv2d_backward(np.ones_like(out), cache)
    assert dx.shape == x.shape
    assert dw.shape == w.shape
    assert db.shape == (4,)


def test_dense_backward_matches_fd():
    x = rand_array((4, 6), seed=31)
    w = rand_array((6, 3), seed=32)
    b = rand_array((3,), seed=33)
    proj = rand_array((4, 3), seed=34)

    out, cache = dense_forward(x, w, b)
    dx, dw, db = dense_backward(proj, cache)
    assert rel_err(dx, numgrad(lambda v: np.sum(dense_forward(v, w, b)[0] * proj), x)) < FD_TOL
    assert rel_err(dw, numgrad(lambda v: np.sum(dense_forward(x, v, b)[0] * proj), w)) < FD_TOL
    assert rel_err(db, numgrad(lambda v: np.sum(dense_forward(x, w, v)[0] * proj), b)) < FD_TOL


def test_dense_identity_weight():
    x = rand_array((3, 4), seed=41)
    out, _ = dense_forward(x, np.eye(4), np.zeros(4))
    assert np.allclose(out, x, atol=0, rtol=0)


def test_dense_shape_validation():
    with pytest.raises(ValueError, match="shape mismatch"):
        dense_forward(np.zeros((2, 3)), np.zeros((4, 5)), np.zeros(5))


def test_relu_values_and_gradient():
    x = np.array([[-1.0, 0.0, 2.0]])
    out, cache = relu_forward(x)
    assert out.tolist() == [[0.0, 0.0, 2.0]]
    # subgradient at the kink is 0
    assert relu_backward(np.ones_like(x), cache).tolist() == [[0.0, 0.0, 1.0]]


def test_relu_backward_matches_fd_away_from_kink():
    x = rand_array((5, 7), seed=51)
    x = np.where(np.abs(x) < 0.05, 0.5, x)  # keep FD off the kink
    proj = rand_array((5, 7), seed=52)
    _, cache = relu_forward(x)
    dx = relu_backward(proj, cache)
    assert rel_err(dx, numgrad(lambda v: np.sum(relu_forward(v)[0] * proj), x)) < FD_TOL


def test_flatten_round_trip():
    x = rand_array((3, 4, 5, 2), seed=61)
    flat, cache = flatten_forward(x)
    assert flat.shape == (3, 40)
    back = flatten_backward(flat, cache)
    assert np.array_equal(back, x)
    with pytest.raises(ValueError):
        flatten_forward(np.zeros(3))


def test_flatten_gradient_is_reshape():
    x = rand_array((2, 3, 4), seed=62)
    proj = rand_array((2, 12), seed=63)
    _, cache = flatten_forward(x)
    dx = flatten_backward(proj, cache)
    assert rel_err(dx, numgrad(lambda v: np.sum(flatten_forward(v)[0] * proj), x)) < FD_TOL


# -- dropout ----------------------------------------------------------------

def test_dropout_inference_is_identity():
    x = rand_array((10, 10), seed=71)
    out, mask = dropout_forward(x, 0.5, train=False)
    assert out is x
    assert mask is None
    out, mask = dropout_forward(x, 0.0, train=True)
    assert out is x
    assert mask is None


def test_dropout_keep_fraction_and_mean():
    x = np.ones((100000,))
    out, mask = dropout_forward(x, 0.5, train=True, mask_seed=99)
    kept = float(np.mean(out > 0))
    assert 0.49 <= kept <= 0.51
    assert abs(float(np.mean(out)) - 1.0) < 0.02
    assert set(np.unique(mask)).issubset({0.0, 2.0})


def test_dropout_deterministic_by_seed():
    x = rand_array((50, 50), seed=72)
    a, _ = dropout_forward(x, 0.3, train=True, mask_seed=5)
    b, _ = dropout_forward(x, 0.3, train=True, mask_seed=5)
    c, _ = dropout_forward(x, 0.3, train=True, mask_seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_dropout_backward_applies_mask():
    x = rand_array((4, 4), seed=73)
    _, mask = dropout_forward(x, 0.4, train=True, mask_seed=7)
    dout = np.ones_like(x)
    assert np.array_equal(dropout_backward(dout, mask), mask)
    assert dropout_backward(dout, None) is dout


def test_dropout_rate_validation():
    x = np.zeros(3)
    for rate in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            dropout_forward(x, rate, train=True)


# -- loss -------------------------------------------------------------------

def test_loss_zero_when_exact():
    targets = rand_array((6, 2), seed=81)
    loss, ds, dt = mse_dual_head_loss(targets[:, 0:1], targets[:, 1:2], targets)
    assert loss == 0.0
    assert np.all(ds == 0.0)
    assert np.all(dt == 0.0)


def test_loss_unit_error_value():
    n = 4
    targets = np.zeros((n, 2))
    ps = np.ones((n, 1))   # steering error 1 everywhere
    pt = np.zeros((n, 1))  # throttle exact
    loss, ds, dt = mse_dual_head_loss(ps, pt, targets)
    assert loss == 0.5
    assert np.all(ds == 1.0 / n)
    assert np.all(dt == 0.0)


def test_loss_gradients_match_fd():
    targets = rand_array((5, 2), seed=82)
    ps = rand_array((5, 1), seed=83)
    pt = rand_array((5, 1), seed=84)
    loss, ds, dt = mse_dual_head_loss(ps, pt, targets)
    assert rel_err(ds, numgrad(lambda v: mse_dual_head_loss(v, pt, targets)[0], ps)) < FD_TOL
    assert rel_err(dt, numgrad(lambda v: mse_dual_head_loss(ps, v, targets)[0], pt)) < FD_TOL


def test_loss_shape_validation():
    with pytest.raises(ValueError, match="bad shapes"):
        mse_dual_head_loss(np.zeros((3, 1)), np.zeros((2, 1)), np.zeros((3, 2)))
    with pytest.raises(ValueError, match="bad shapes"):
        mse_dual_head_loss(np.zeros((0, 1)), np.zeros((0, 1)), np.zeros((0, 2)))


# -- dtype discipline -------------------------------------------------------

def test_ops_preserve_float32():
    x = rand_array((2, 8, 8, 3), seed=91).astype(np.float32)
    w = rand_array((3, 3, 3, 4), seed=92).astype(np.float32)
    b = np.zeros(4, dtype=np.float32)
    out, cache = conv2d_forward(x, w, b, 2)
    assert out.dtype == np.float32
    dx, dw, db = conv2d_backward(out, cache)
    assert dx.dtype == dw.dtype == db.dtype == np.float32


def test_ops_promote_to_float64():
    x = rand_array((2, 6, 6, 2), seed=93)  # float64
    w = rand_array((3, 3, 2, 2), seed=94)
    out, _ = conv2d_forward(x, w, np.zeros(2), 1)
    assert out.dtype == np.float64
    out, _ = dense_forward(rand_array((2, 3), seed=95),
                           rand_array((3, 2), seed=96), np.zeros(2))
    assert out.dtype == np.float64

"""Adam, the training loop and its determinism guarantees."""

import dataclasses
import math

import numpy as np
import pytest

from gradcheck import rand_array
from pilotstack.datastore import Dataset
from pilotstack.nn.train import (AdamState, TrainConfig, TrainingDiverged,
                                 adam_step, evaluate_loss, train,
                                 write_loss_history)
from pilotstack.nn.model import init_params, model_forward
from pilotstack.nn import ops
from pilotstack.prng import uniforms


def _dataset(tiny_arch, n, seed=0):
    h, w = tiny_arch.input_height, tiny_arch.input_width
    u = uniforms(seed, n * h * w * 3)
    images = (u * 256.0).astype(np.uint8).reshape(n, h, w, 3)
    labels = (rand_array((n, 2), seed + 1) * 0.8)
    return Dataset(images, labels)


# -- adam -------------------------------------------------------------------

def test_adam_single_step_hand_equations():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-7
    p = {"w": np.array([1.0])}
    g = {"w": np.array([0.1])}
    state = AdamState(p)
    adam_step(p, g, state, lr, b1, b2, eps)

    m = (1 - b1) * 0.1
    v = (1 - b2) * 0.01
    expected = 1.0 - lr * (m / (1 - b1)) / (math.sqrt(v / (1 - b2)) + eps)
    assert state.t == 1
    assert p["w"][0] == pytest.approx(expected, abs=1e-15)


def test_adam_second_step_uses_running_moments():
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-7
    p = {"w": np.array([0.5])}
    state = AdamState(p)
    adam_step(p, {"w": np.array([0.2])}, state, lr, b1, b2, eps)
    adam_step(p, {"w": np.array([-0.1])}, state, lr, b1, b2, eps)

    m = (1 - b1) * 0.2
    v = (1 - b2) * 0.04
    p_ref = 0.5 - lr * (m / (1 - b1)) / (math.sqrt(v / (1 - b2)) + eps)
    m = b1 * m + (1 - b1) * (-0.1)
    v = b2 * v + (1 - b2) * 0.01
    p_ref -= lr * (m / (1 - b1 ** 2)) / (math.sqrt(v / (1 - b2 ** 2)) + eps)
    assert state.t == 2
    assert p["w"][0] == pytest.approx(p_ref, abs=1e-15)


def test_adam_zero_gradient_leaves_params_bitwise():
    p = {"w": rand_array((4, 3), 5).astype(np.float32)}
    before = p["w"].copy()
    state = AdamState(p)
    adam_step(p, {"w": np.zeros((4, 3), dtype=np.float32)}, state,
              1e-3, 0.9, 0.999, 1e-7)
    assert np.array_equal(p["w"], before)


def test_adam_deterministic():
    def run():
        p = {"w": rand_array((3,), 7)}
        state = AdamState(p)
        for k in range(5):
            adam_step(p, {"w": rand_array((3,), 10 + k)}, state,
                      1e-2, 0.9, 0.999, 1e-7)
        return p["w"]
    assert np.array_equal(run(), run())


def test_adam_minimizes_a_quadratic():
    p = {"w": np.array([10.0])}
    state = AdamState(p)
    for _ in range(800):
        grads = {"w": 2.0 * (p["w"] - 3.0)}
        adam_step(p, grads, state, 0.05, 0.9, 0.999, 1e-7)
    assert p["w"][0] == pytest.approx(3.0, abs=1e-3)


# -- config -----------------------------------------------------------------

def test_train_config_defaults():
    c = TrainConfig()
    assert (c.epochs, c.batch_size, c.val_fraction) == (60, 64, 0.2)
    assert c.learning_rate == 1e-3
    assert (c.beta1, c.beta2, c.eps) == (0.9, 0.999, 1e-7)


@pytest.mark.parametrize("kwargs", [
    {"epochs": 0}, {"batch_size": 0}, {"learning_rate": -1e-3},
    {"beta1": 1.0}, {"beta2": -0.1}, {"eps": 0.0},
    {"val_fraction": 0.0}, {"val_fraction": 1.0},
])
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_train_config_allows_zero_learning_rate():
    assert TrainConfig(learning_rate=0.0).learning_rate == 0.0


# -- training loop ----------------------------------------------------------

def test_zero_learning_rate_returns_init_bitwise(tiny_arch):
    ds = _dataset(tiny_arch, 10)
    config = TrainConfig(epochs=2, batch_size=4, learning_rate=0.0, seed=9)
    result = train(ds, config, arch=tiny_arch)
    reference = init_params(tiny_arch, seed=9)
    for name, ref in reference.items():
        assert np.array_equal(result.params[name], ref)


def test_overfits_one_sample(tiny_arch):
    arch = dataclasses.replace(tiny_arch, dropout_rate=0.0)
    ds = _dataset(arch, 1, seed=3)
    config = TrainConfig(epochs=300, batch_size=1, learning_rate=3e-3, seed=1)
    result = train(ds, config, arch=arch)
    assert result.history[-1][1] < 1e-3  # train loss collapses
    assert result.best_val_loss < 1e-3


def test_training_is_bitwise_deterministic(tiny_arch):
    ds = _dataset(tiny_arch, 12)
    config = TrainConfig(epochs=3, batch_size=4, seed=5)
    a = train(ds, config, arch=tiny_arch)
    b = train(ds, config, arch=tiny_arch)
    assert a.history == b.history
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name])

    c = train(ds, TrainConfig(epochs=3, batch_size=4, seed=6), arch=tiny_arch)
    assert any(not np.array_equal(a.params[n], c.params[n]) for n in a.params)


def test_divergence_is_reported(tiny_arch):
    ds = _dataset(tiny_arch, 8)
    config = TrainConfig(epochs=5, batch_size=4, learning_rate=1e8, seed=2)
    with np.errstate(all="ignore"), pytest.raises(TrainingDiverged,
                                                  match="non-finite loss"):
        train(ds, config, arch=tiny_arch)


def test_history_and_best_epoch_bookkeeping(tiny_arch):
    ds = _dataset(tiny_arch, 10)
    config = TrainConfig(epochs=4, batch_size=4, seed=3)
    result = train(ds, config, arch=tiny_arch)
    assert [row[0] for row in result.history] == [1, 2, 3, 4]
    vals = [row[2] for row in result.history]
    assert result.best_val_loss == min(vals)
    assert result.best_epoch == vals.index(min(vals)) + 1


def test_single_sample_falls_back_to_full_validation(tiny_arch):
    ds = _dataset(tiny_arch, 1)
    result = train(ds, TrainConfig(epochs=1, batch_size=1, seed=1),
                   arch=tiny_arch)
    assert len(result.history) == 1
    with pytest.raises(ValueError, match="empty"):
        train(_dataset(tiny_arch, 10).subset([]),
              TrainConfig(epochs=1), arch=tiny_arch)


def test_log_callback_receives_formatted_lines(tiny_arch):
    ds = _dataset(tiny_arch, 6)
    lines = []
    train(ds, TrainConfig(epochs=2, batch_size=3, seed=1), arch=tiny_arch,
          log=lines.append)
    assert len(lines) == 2
    assert lines[0].startswith("epoch   1/2  train ")
    assert "val " in lines[0]


# -- evaluation and history file --------------------------------------------

def test_evaluate_loss_matches_direct_computation(tiny_arch):
    ds = _dataset(tiny_arch, 7, seed=11)
    params = init_params(tiny_arch, seed=4)

    x = ds.images.astype(np.float32) / np.float32(255.0)
    labels = ds.labels.astype(np.float32)
    ps, pt, _ = model_forward(params, tiny_arch, x, train=False)
    direct, _, _ = ops.mse_dual_head_loss(ps, pt, labels)

    assert evaluate_loss(params, tiny_arch, ds, batch_size=7) == pytest.approx(direct, rel=1e-12)
    assert evaluate_loss(params, tiny_arch, ds, batch_size=3) == pytest.approx(direct, rel=1e-6)


def test_loss_history_csv_round_trips(tmp_path):
    history = [(1, 0.5, 0.625), (2, 1 / 3, 0.1 + 0.2)]
    path = tmp_path / "losses.csv"
    write_loss_history(path, history)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss"
    for row, line in zip(history, lines[1:]):
        epoch, tr, va = line.split(",")
        assert int(epoch) == row[0]
        assert float(tr) == row[1]  # repr round-trip is exact
        assert float(va) == row[2]

"""Adam optimizer and the training loop.

Given the same dataset and config the loop is bitwise deterministic:
shuffles, dropout masks and init all come from the pinned SplitMix64
streams, and the float kernels are run-to-run stable on one machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..datastore import Dataset, iterate_batches, split_train_val
from . import ops
from .model import (ArchitectureSpec, default_architecture, init_params,
                    model_backward, model_forward)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    val_fraction: float = 0.2
    seed: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        # lr == 0 is allowed; it must leave parameters exactly at init
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


class AdamState:
    """First/second moment accumulators plus the step counter."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def adam_step(params: dict, grads: dict, state: AdamState,
              lr: float, beta1: float, beta2: float, eps: float) -> None:
    """One in-place Adam update with bias correction."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for k, p in params.items():
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]   # weights from the best validation epoch
    history: list[tuple[int, float, float]]  # (epoch, train_loss, val_loss)
    best_epoch: int
    best_val_loss: float


def evaluate_loss(params: dict, arch: ArchitectureSpec, dataset: Dataset,
                  batch_size: int) -> float:
    """Sample-weighted dual-head MSE over a dataset, inference mode."""
    total = 0.0
    count = 0
    for start in range(0, len(dataset), batch_size):
        imgs = dataset.images[start:start + batch_size].astype(np.float32) / np.float32(255.0)
        labels = dataset.labels[start:start + batch_size].astype(np.float32)
        ps, pt, _ = model_forward(params, arch, imgs, train=False)
        loss, _, _ = ops.mse_dual_head_loss(ps, pt, labels)
        total += loss * len(labels)
        count += len(labels)
    return total / count


def train(dataset: Dataset, config: TrainConfig,
          arch: ArchitectureSpec | None = None,
          log=None) -> TrainResult:
    """Fit the network; returns the best-validation-epoch parameters.

    The split follows config.val_fraction, except that a dataset too small
    to leave a non-empty training side (a single sample, say) falls back
    to training and validating on the full set.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    arch = arch or default_architecture()

    n_val = math.ceil(len(dataset) * config.val_fraction)
    if n_val >= len(dataset):
        train_ds = val_ds = dataset
    else:
        train_ds, val_ds = split_train_val(dataset, config.val_fraction,
                                           config.seed)

    params = init_params(arch, config.seed)
    state = AdamState(params)
    history: list[tuple[int, float, float]] = []
    best_val = math.inf
    best_epoch = 0
    best_params = {k: v.copy() for k, v in params.items()}
    step = 0

    for epoch in range(1, config.epochs + 1):
        total = 0.0
        count = 0
        for imgs, labels in iterate_batches(train_ds, config.batch_size,
                                            config.seed, epoch - 1):
            x = imgs / np.float32(255.0)
            ps, pt, caches = model_forward(params, arch, x, train=True,
                                           dropout_seed=config.seed, step=step)
            loss, dps, dpt = ops.mse_dual_head_loss(ps, pt, labels)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step}")
            grads = model_backward(arch, caches, dps, dpt)
            adam_step(params, grads, state, config.learning_rate,
                      config.beta1, config.beta2, config.eps)
            total += loss * len(labels)
            count += len(labels)
            step += 1

        train_loss = total / count
        val_loss = evaluate_loss(params, arch, val_ds, config.batch_size)
        history.append((epoch, train_loss, val_loss))
        if log is not None:
            log(f"epoch {epoch:3d}/{config.epochs}  "
                f"train {train_loss:.6f}  val {val_loss:.6f}")
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}

    return TrainResult(params=best_params, history=history,
                       best_epoch=best_epoch, best_val_loss=best_val)


def write_loss_history(path, history) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for epoch, tr, va in history:
            fh.write(f"{epoch},{tr!r},{va!r}\n")

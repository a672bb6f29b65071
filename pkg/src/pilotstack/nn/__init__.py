"""From-scratch dual-head CNN: ops, model, optimizer, checkpoints."""

from .model import (ArchitectureSpec, ConvLayer, count_parameters,
                    default_architecture, init_params, model_backward,
                    model_forward, model_predict)
from .train import (AdamState, TrainConfig, TrainResult, TrainingDiverged,
                    adam_step, evaluate_loss, train, write_loss_history)
from .checkpoint import (CHECKPOINT_VERSION, CheckpointError, header_size,
                         load_checkpoint, save_checkpoint)

__all__ = [
    "ArchitectureSpec", "ConvLayer", "count_parameters",
    "default_architecture", "init_params", "model_backward", "model_forward",
    "model_predict", "AdamState", "TrainConfig", "TrainResult",
    "TrainingDiverged", "adam_step", "evaluate_loss", "train",
    "write_loss_history", "CHECKPOINT_VERSION", "CheckpointError",
    "header_size", "load_checkpoint", "save_checkpoint",
]

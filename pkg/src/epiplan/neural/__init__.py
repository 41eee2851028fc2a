"""Graph regressor for distance-to-goal estimation (numpy only)."""

from .io import (
    CorruptModelError,
    ModelFileError,
    ModelShapeError,
    ModelVersionError,
    load_model,
    save_model,
)
from .layers import gine_conv, global_mean_pool, mse_loss
from .model import GraphBatch, Hyper, RegressorModel, Widths, backward, forward, loss_and_grads
from .optim import AdamWConfig, AdamWState, adamw_step
from .prep import (
    EmptyDatasetError,
    PrepConfig,
    PreparedData,
    denormalize_distance,
    normalize_distance,
    prepare_dataset,
)
from .train import TrainResult, evaluate_mse, train

__all__ = [
    "AdamWConfig", "AdamWState", "CorruptModelError", "EmptyDatasetError", "GraphBatch",
    "Hyper", "ModelFileError", "ModelShapeError", "ModelVersionError", "PrepConfig",
    "PreparedData", "RegressorModel", "TrainResult", "Widths", "adamw_step", "backward",
    "denormalize_distance", "evaluate_mse", "forward", "gine_conv", "global_mean_pool",
    "load_model", "loss_and_grads", "mse_loss", "normalize_distance", "prepare_dataset",
    "save_model", "train",
]

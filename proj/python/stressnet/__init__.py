"""Synthetic fracture-stress surrogate: simulator, preprocessing, losses and the train/evaluate workflow."""

from ._core import (
    CheckpointError,
    DataError,
    NumericError,
    SimulationRecord,
    denormalize,
    downsample,
    evaluate,
    fused_loss,
    generate,
    lambda_at,
    mape,
    mse,
    normalize,
    rollout,
    simulate,
    train,
)

__all__ = [
    "CheckpointError",
    "DataError",
    "NumericError",
    "SimulationRecord",
    "denormalize",
    "downsample",
    "evaluate",
    "fused_loss",
    "generate",
    "lambda_at",
    "mape",
    "mse",
    "normalize",
    "rollout",
    "simulate",
    "train",
]

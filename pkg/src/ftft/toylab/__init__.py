"""Synthetic tiered datasets and small hand-gradient models."""

from .data import GeometryConfig, SyntheticDataset, generate_dataset
from .models import ToyModelSpec, create_model
from .train import CheckpointMetric, RunResult, TrainConfig, lr_at, train

__all__ = [
    "GeometryConfig",
    "SyntheticDataset",
    "generate_dataset",
    "ToyModelSpec",
    "create_model",
    "CheckpointMetric",
    "RunResult",
    "TrainConfig",
    "lr_at",
    "train",
]

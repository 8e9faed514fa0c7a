"""Mini-batch gradient-descent training with checkpointed dynamics.

The loop is deterministic given (dataset, spec, config): parameter init
and epoch shuffles come from seeded generator streams, batches walk a
per-epoch permutation with the last partial batch kept, and checkpoints
fire every ``checkpoint_every`` steps.  At each checkpoint the model
does a full forward pass over the entire train split, recording the
gold-class probability for every train instance whether or not it is in
the training subset, plus accuracy on both eval splits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from ..dynamics import DynamicsRecord, TrainingDynamics
from .data import SyntheticDataset
from .models import ToyModelSpec, create_model, params_digest, softmax


class TrainError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int
    checkpoint_every: int
    peak_lr: float
    batch_size: int = 32
    warmup_fraction: float = 0.10
    weight_decay: float = 0.0
    seed: int = 0
    subset: frozenset[int] | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise TrainError(f"max_steps must be positive, got {self.max_steps}")
        if not (1 <= self.checkpoint_every <= self.max_steps):
            raise TrainError(
                f"checkpoint_every must be in [1, max_steps], got {self.checkpoint_every}"
            )
        if self.batch_size < 1:
            raise TrainError(f"batch_size must be positive, got {self.batch_size}")
        if self.peak_lr <= 0:
            raise TrainError(f"peak_lr must be positive, got {self.peak_lr}")
        if not (0.0 <= self.warmup_fraction < 1.0):
            raise TrainError(
                f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}"
            )
        if self.weight_decay < 0:
            raise TrainError(f"weight_decay must be >= 0, got {self.weight_decay}")

    @property
    def num_checkpoints(self) -> int:
        return self.max_steps // self.checkpoint_every


def lr_at(step: int, config: TrainConfig) -> float:
    """Linear warmup to peak_lr, then linear decay to 0 at max_steps."""
    warmup = config.warmup_fraction * config.max_steps
    if step <= warmup:
        return config.peak_lr * (step / warmup if warmup > 0 else 1.0)
    return config.peak_lr * (config.max_steps - step) / (config.max_steps - warmup)


@dataclass(frozen=True)
class CheckpointMetric:
    checkpoint: int
    id_accuracy: float
    hard_slice_accuracy: float


@dataclass(frozen=True)
class RunResult:
    dynamics: TrainingDynamics
    checkpoint_metrics: tuple[CheckpointMetric, ...]
    final_params_digest: str
    steps_run: int = 0
    config: TrainConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.checkpoint_metrics) != self.dynamics.num_checkpoints:
            raise TrainError(
                "checkpoint_metrics length "
                f"{len(self.checkpoint_metrics)} != num_checkpoints "
                f"{self.dynamics.num_checkpoints}"
            )

    def metric_series(self, metric: str) -> list[float]:
        try:
            return [getattr(m, metric) for m in self.checkpoint_metrics]
        except AttributeError:
            raise TrainError(f"unknown metric {metric!r}") from None


def _accuracy(model, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(model.logits(X).argmax(axis=1) == y))


def train(
    dataset: SyntheticDataset,
    spec: ToyModelSpec,
    config: TrainConfig,
    run_id: str | None = None,
) -> RunResult:
    train_idx = dataset.split_indices("train")
    if len(train_idx) == 0:
        raise TrainError("dataset has no train split")
    X_train = dataset.features[train_idx]
    y_train = dataset.labels[train_idx]

    if config.subset is not None:
        subset = np.array(sorted(config.subset), dtype=np.int64)
        unknown = set(subset.tolist()) - set(train_idx.tolist())
        if unknown:
            raise TrainError(f"subset ids not in train split: {sorted(unknown)[:5]}")
        fit_idx = subset
    else:
        fit_idx = train_idx
    X_fit = dataset.features[fit_idx]
    y_fit = dataset.labels[fit_idx]

    id_idx = dataset.split_indices("id_eval")
    hard_idx = dataset.split_indices("hard_slice_eval")
    X_id, y_id = dataset.features[id_idx], dataset.labels[id_idx]
    X_hard, y_hard = dataset.features[hard_idx], dataset.labels[hard_idx]

    model = create_model(
        spec,
        dataset.num_features,
        dataset.num_classes,
        np.random.default_rng([config.seed, 10]),
    )
    shuffle_rng = np.random.default_rng([config.seed, 11])

    n_fit = len(fit_idx)
    order = np.empty(0, dtype=np.int64)
    cursor = n_fit  # forces a reshuffle on the first step
    p_true_cols: list[np.ndarray] = []
    metrics: list[CheckpointMetric] = []

    step = 0
    while step < config.max_steps:
        if cursor >= n_fit:
            order = shuffle_rng.permutation(n_fit)
            cursor = 0
        batch = order[cursor : cursor + config.batch_size]
        cursor += config.batch_size

        loss, grads = model.loss_and_grads(X_fit[batch], y_fit[batch])
        if not np.isfinite(loss):
            raise TrainError(f"non-finite loss {loss!r} at step {step}")
        lr = lr_at(step, config)
        for name, param in model.param_items():
            if config.weight_decay > 0.0:
                param -= lr * config.weight_decay * param
            param -= lr * grads[name]
        step += 1

        if step % config.checkpoint_every == 0:
            probs = softmax(model.logits(X_train))
            p_true_cols.append(probs[np.arange(len(train_idx)), y_train])
            metrics.append(
                CheckpointMetric(
                    checkpoint=len(metrics),
                    id_accuracy=_accuracy(model, X_id, y_id) if len(id_idx) else 0.0,
                    hard_slice_accuracy=(
                        _accuracy(model, X_hard, y_hard) if len(hard_idx) else 0.0
                    ),
                )
            )
    p_true = np.stack(p_true_cols, axis=1)  # (n_train, num_checkpoints)
    records = tuple(
        DynamicsRecord(
            int(train_idx[i]),
            int(y_train[i]),
            tuple(float(v) for v in p_true[i]),
        )
        for i in range(len(train_idx))
    )
    dynamics = TrainingDynamics(
        run_id=run_id or f"{spec.model_name}-s{config.seed}",
        model_name=spec.model_name,
        num_params=spec.num_params(dataset.num_features, dataset.num_classes),
        dataset_name=dataset.name,
        num_checkpoints=len(metrics),
        records=records,
    )
    return RunResult(
        dynamics=dynamics,
        checkpoint_metrics=tuple(metrics),
        final_params_digest=params_digest(model),
        steps_run=step,
        config=config,
    )


def run_reference(
    dataset: SyntheticDataset, spec: ToyModelSpec, config: TrainConfig, run_id=None
) -> RunResult:
    """Full-data training; the map-building stage of every pipeline."""
    if config.subset is not None:
        config = TrainConfig(
            max_steps=config.max_steps,
            checkpoint_every=config.checkpoint_every,
            peak_lr=config.peak_lr,
            batch_size=config.batch_size,
            warmup_fraction=config.warmup_fraction,
            weight_decay=config.weight_decay,
            seed=config.seed,
            subset=None,
        )
    return train(dataset, spec, config, run_id=run_id)


def write_metrics_csv(metrics: Sequence[CheckpointMetric], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["checkpoint", "id_accuracy", "hard_slice_accuracy"])
    for m in metrics:
        w.writerow([m.checkpoint, f"{m.id_accuracy:.6f}", f"{m.hard_slice_accuracy:.6f}"])

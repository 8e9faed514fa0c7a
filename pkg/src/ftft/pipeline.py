"""End-to-end pipelines: plain training, map-then-train, and the
cheap-reference + early-stopping variant.

Three method families share one report shape.  ``run_erm`` trains the
main model on everything.  ``run_cartography`` trains a reference
full-length, builds a map, and trains the main model on the selected
subset, also full-length.  ``run_ftft`` swaps in a cheap reference and
stops the main run with a patience rule, charging the overshoot
checkpoints it took to detect the plateau.  Costs are all relative to
the main model trained full-length.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cartography import DataMap, build_map, check_q, random_subset, sel_count
from .costs import TrainingRun, relative_cost
from .toylab.data import SyntheticDataset
from .toylab.models import ToyModelSpec
from .toylab.train import RunResult, TrainConfig, train


class PipelineError(ValueError):
    pass


IMPROVE_TOL = 1e-9

SUBSET_KINDS = ("ambiguous", "hard_to_learn", "random")


@dataclass(frozen=True)
class StopPolicy:
    kind: str = "patience"  # "none" | "patience"
    k: int = 2
    metric: str = "hard_slice_accuracy"
    metrics: tuple[str, ...] = ()  # consulted only when metric = mean_of_listed

    def __post_init__(self):
        if self.kind not in ("none", "patience"):
            raise PipelineError(f"unknown stop kind {self.kind!r}")
        if self.kind == "patience" and self.k < 1:
            raise PipelineError(f"patience k must be >= 1, got {self.k}")
        if self.metric not in ("hard_slice_accuracy", "id_accuracy", "mean_of_listed"):
            raise PipelineError(f"unknown stop metric {self.metric!r}")
        if self.metric == "mean_of_listed" and not self.metrics:
            raise PipelineError("mean_of_listed needs a nonempty metrics list")


def early_stop(series: list[float], k: int) -> tuple[int, int]:
    """(best_index, stop_index) under a patience-k rule.

    Scanning left to right, the best index is the first index achieving
    the running maximum (strict improvement beyond a 1e-9 tolerance);
    the stop index is where the k-th consecutive non-improving
    checkpoint since the best lands, or the final index if patience
    never runs out.
    """
    if len(series) == 0:
        raise PipelineError("empty metric series")
    if k < 1:
        raise PipelineError(f"k must be >= 1, got {k}")
    best = 0
    best_val = series[0]
    since_best = 0
    for i in range(1, len(series)):
        if series[i] > best_val + IMPROVE_TOL:
            best, best_val, since_best = i, series[i], 0
        else:
            since_best += 1
            if since_best == k:
                return best, i
    return best, len(series) - 1


def stop_series(run: RunResult, policy: StopPolicy) -> list[float]:
    if policy.metric == "mean_of_listed":
        columns = [run.metric_series(m) for m in policy.metrics]
        return [sum(vals) / len(vals) for vals in zip(*columns)]
    return run.metric_series(policy.metric)


def best_index(series: list[float]) -> int:
    """First index achieving the global maximum, same tolerance as early_stop."""
    if len(series) == 0:
        raise PipelineError("empty metric series")
    top = max(series)
    for i, v in enumerate(series):
        if v > top - IMPROVE_TOL:
            return i
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class PipelineCost:
    stages: tuple[tuple[str, float], ...]

    @property
    def relative_total(self) -> float:
        return sum(cost for _, cost in self.stages)


@dataclass(frozen=True)
class FtftReport:
    method: str
    reference_run: RunResult | None
    data_map: DataMap | None
    subset_kind: str | None
    main_run: RunResult
    best_checkpoint: int
    stop_checkpoint: int
    costs: PipelineCost
    stop: StopPolicy

    def __post_init__(self):
        if self.best_checkpoint > self.stop_checkpoint:
            raise PipelineError("best checkpoint after stop checkpoint")
        if self.stop.kind == "patience":
            if self.stop_checkpoint - self.best_checkpoint > self.stop.k:
                raise PipelineError("patience overshoot exceeds k")

    @property
    def charged_checkpoints(self) -> int:
        return self.stop_checkpoint + 1


def _params(spec: ToyModelSpec, dataset: SyntheticDataset) -> int:
    return spec.num_params(dataset.num_features, dataset.num_classes)


def _baseline_run(main_spec: ToyModelSpec, dataset, config: TrainConfig) -> TrainingRun:
    return TrainingRun(_params(main_spec, dataset), config.max_steps, config.batch_size)


def _stage_cost(
    spec: ToyModelSpec, dataset, steps: int, config: TrainConfig, baseline: TrainingRun
) -> float:
    return relative_cost(
        TrainingRun(_params(spec, dataset), steps, config.batch_size), baseline
    )


def run_erm(
    dataset: SyntheticDataset,
    main_spec: ToyModelSpec,
    config: TrainConfig,
    stop: StopPolicy = StopPolicy(kind="none"),
    run_id: str | None = None,
) -> FtftReport:
    """Train on the full training split; optionally apply patience stopping."""
    result = train(dataset, main_spec, replace(config, subset=None), run_id=run_id)
    baseline = _baseline_run(main_spec, dataset, config)
    if stop.kind == "none":
        # no-stop runs report their globally best checkpoint but charge
        # the full length
        best = best_index(stop_series(result, stop))
        charged_steps = config.max_steps
        stop_idx = result.dynamics.num_checkpoints - 1
    else:
        best, stop_idx = early_stop(stop_series(result, stop), stop.k)
        charged_steps = min((stop_idx + 1) * config.checkpoint_every, config.max_steps)
    return FtftReport(
        method="erm" if stop.kind == "none" else "erm_es",
        reference_run=None,
        data_map=None,
        subset_kind=None,
        main_run=result,
        best_checkpoint=best,
        stop_checkpoint=stop_idx,
        costs=PipelineCost(
            stages=(("main", _stage_cost(main_spec, dataset, charged_steps, config, baseline)),)
        ),
        stop=stop,
    )


def run_cartography(
    dataset: SyntheticDataset,
    ref_spec: ToyModelSpec | None,
    main_spec: ToyModelSpec,
    q: float,
    subset_kind: str,
    ref_config: TrainConfig,
    main_config: TrainConfig,
    run_id_prefix: str = "",
) -> FtftReport:
    """Map-then-train with both stages full-length (no early stopping)."""
    check_q(q)
    if subset_kind not in SUBSET_KINDS:
        raise PipelineError(f"unknown subset kind {subset_kind!r}")
    train_ids = dataset.split_indices("train").tolist()
    baseline = _baseline_run(main_spec, dataset, main_config)
    stages = []

    ref_result = None
    data_map = None
    if subset_kind == "random":
        # a random selection needs no reference run and charges nothing
        rng = np.random.default_rng([ref_config.seed, 20])
        subset = random_subset(train_ids, q, rng)
    else:
        if ref_spec is None:
            raise PipelineError(f"subset kind {subset_kind!r} needs a reference model")
        ref_result = train(
            dataset,
            ref_spec,
            replace(ref_config, subset=None),
            run_id=f"{run_id_prefix}ref-{ref_spec.model_name}-s{ref_config.seed}",
        )
        stages.append(
            ("reference", _stage_cost(ref_spec, dataset, ref_config.max_steps, ref_config, baseline))
        )
        data_map = build_map(ref_result.dynamics, q)
        subset = getattr(data_map, subset_kind)

    main_result = train(
        dataset,
        main_spec,
        replace(main_config, subset=frozenset(subset)),
        run_id=f"{run_id_prefix}dm-{subset_kind}-{main_spec.model_name}-s{main_config.seed}",
    )
    stages.append(
        ("main", _stage_cost(main_spec, dataset, main_config.max_steps, main_config, baseline))
    )
    policy = StopPolicy(kind="none")
    best = best_index(stop_series(main_result, policy))
    return FtftReport(
        method=f"dm_{subset_kind}",
        reference_run=ref_result,
        data_map=data_map,
        subset_kind=subset_kind,
        main_run=main_result,
        best_checkpoint=best,
        stop_checkpoint=main_result.dynamics.num_checkpoints - 1,
        costs=PipelineCost(stages=tuple(stages)),
        stop=policy,
    )


def run_ftft(
    dataset: SyntheticDataset,
    ref_spec: ToyModelSpec,
    main_spec: ToyModelSpec,
    q: float,
    stop: StopPolicy,
    ref_config: TrainConfig,
    main_config: TrainConfig,
    run_id_prefix: str = "",
) -> FtftReport:
    """Cheap reference, ambiguous subset, aggressive patience stopping.

    The cost charges the reference full-length plus the main run through
    the stop checkpoint, overshoot included.
    """
    check_q(q)
    if stop.kind != "patience":
        raise PipelineError("ftft requires a patience stop policy")
    if _params(ref_spec, dataset) >= _params(main_spec, dataset):
        warnings.warn(
            "reference model is not cheaper than the main model; "
            "the pipeline saves nothing",
            stacklevel=2,
        )
    baseline = _baseline_run(main_spec, dataset, main_config)
    ref_result = train(
        dataset,
        ref_spec,
        replace(ref_config, subset=None),
        run_id=f"{run_id_prefix}ref-{ref_spec.model_name}-s{ref_config.seed}",
    )
    data_map = build_map(ref_result.dynamics, q)

    main_result = train(
        dataset,
        main_spec,
        replace(main_config, subset=frozenset(data_map.ambiguous)),
        run_id=f"{run_id_prefix}ftft-{main_spec.model_name}-s{main_config.seed}",
    )
    best, stop_idx = early_stop(stop_series(main_result, stop), stop.k)
    charged_steps = min((stop_idx + 1) * main_config.checkpoint_every, main_config.max_steps)
    costs = PipelineCost(
        stages=(
            ("reference", _stage_cost(ref_spec, dataset, ref_config.max_steps, ref_config, baseline)),
            ("main", _stage_cost(main_spec, dataset, charged_steps, main_config, baseline)),
        )
    )
    return FtftReport(
        method="ftft",
        reference_run=ref_result,
        data_map=data_map,
        subset_kind="ambiguous",
        main_run=main_result,
        best_checkpoint=best,
        stop_checkpoint=stop_idx,
        costs=costs,
        stop=stop,
    )

"""Benchmark harness: the methods x seeds matrix behind the comparison plots.

A benchmark is declared by a JSON config (dataset recipe, model pair,
selection fraction, stop policy, seed list) and produces a report bundle:
per-seed reference dynamics, map files, per-method metric CSVs, a cost
CSV, a JSON summary, and one curve plot per seed.  Five methods run per
seed: full-data training, the same with patience stopping, training on a
random subset, training on the ambiguous subset of an expensive twin
reference, and the cheap-reference early-stopped pipeline.

Everything written is a pure function of the config, so rerunning a
bundle reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from .cartography import MapError, check_q, save_map
from .costs import format_cost
from .dynamics import save_dynamics
from .pipeline import (
    SUBSET_KINDS,
    FtftReport,
    PipelineError,
    StopPolicy,
    run_cartography,
    run_erm,
    run_ftft,
)
from .svg import line_chart
from .toylab.data import DataError, GeometryConfig, generate_dataset
from .toylab.models import ModelError, ToyModelSpec
from .toylab.train import TrainConfig, TrainError, write_metrics_csv


class BenchmarkError(ValueError):
    """A benchmark input that cannot be processed (data-level failure)."""


class ConfigError(BenchmarkError):
    """A config that is readable but semantically invalid (usage-level)."""


SUMMARY_SCHEMA_VERSION = "ftft-bench-1"

_TOP_KEYS = {
    "name",
    "dataset",
    "models",
    "train",
    "q",
    "subset_kinds",
    "stop",
    "seeds",
    "cost_baseline",
}
_GEOMETRY_KEYS = {
    "simple_radius",
    "simple_sigma",
    "band_radius",
    "band_sigma",
    "wedge_margin",
    "wedge_turns",
    "wedge_radius_lo",
    "wedge_radius_hi",
    "off_tier_sigma",
}


@dataclass(frozen=True)
class DatasetSettings:
    num_instances: int
    num_classes: int
    mix: tuple[float, float, float]
    geometry: GeometryConfig


@dataclass(frozen=True)
class TrainSettings:
    max_steps: int
    checkpoint_every: int
    peak_lr: float
    batch_size: int = 32
    warmup_fraction: float = 0.10

    def config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            max_steps=self.max_steps,
            checkpoint_every=self.checkpoint_every,
            peak_lr=self.peak_lr,
            batch_size=self.batch_size,
            warmup_fraction=self.warmup_fraction,
            seed=seed,
        )


@dataclass(frozen=True)
class BenchmarkConfig:
    name: str
    dataset: DatasetSettings
    main: ToyModelSpec
    reference: ToyModelSpec
    train: TrainSettings
    q: float
    subset_kinds: tuple[str, ...]
    stop: StopPolicy
    seeds: tuple[int, ...]
    cost_baseline: str = "erm_main"

    def methods(self) -> list[str]:
        return ["erm", "erm_es"] + [f"dm_{k}" for k in self.subset_kinds] + ["ftft"]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": {
                "num_instances": self.dataset.num_instances,
                "num_classes": self.dataset.num_classes,
                "mix": list(self.dataset.mix),
                "geometry": asdict(self.dataset.geometry),
            },
            "models": {
                "main": _spec_dict(self.main),
                "reference": _spec_dict(self.reference),
            },
            "train": asdict(self.train),
            "q": self.q,
            "subset_kinds": list(self.subset_kinds),
            "stop": {"kind": self.stop.kind, "k": self.stop.k, "metric": self.stop.metric},
            "seeds": list(self.seeds),
            "cost_baseline": self.cost_baseline,
        }


def _spec_dict(spec: ToyModelSpec) -> dict:
    d = {"kind": spec.kind}
    if spec.kind == "mlp":
        d["hidden_units"] = spec.hidden_units
    return d


def _need(obj: Mapping, key: str, context: str):
    if key not in obj:
        raise ConfigError(f"{context}: missing key {key!r}")
    return obj[key]


def _as_section(obj, context: str) -> Mapping:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{context} must be an object")
    return obj


def _parse_model(obj, context: str) -> ToyModelSpec:
    obj = _as_section(obj, context)
    unknown = set(obj) - {"kind", "hidden_units"}
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    try:
        if "hidden_units" in obj:
            return ToyModelSpec(_need(obj, "kind", context), hidden_units=int(obj["hidden_units"]))
        return ToyModelSpec(_need(obj, "kind", context))
    except (ModelError, TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from None


def config_from_dict(obj: Mapping) -> BenchmarkConfig:
    """Validate a raw config mapping; every defect is reported as ConfigError."""
    obj = _as_section(obj, "config")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    seeds_raw = obj.get("seeds")
    if not isinstance(seeds_raw, list) or not seeds_raw:
        raise ConfigError("seeds required (nonempty list of integers)")
    try:
        seeds = tuple(int(s) for s in seeds_raw)
    except (TypeError, ValueError):
        raise ConfigError("seeds required (nonempty list of integers)") from None

    ds_raw = _as_section(_need(obj, "dataset", "config"), "dataset")
    unknown = set(ds_raw) - {"num_instances", "num_classes", "mix", "geometry"}
    if unknown:
        raise ConfigError(f"dataset: unknown keys {sorted(unknown)}")
    mix_raw = _need(ds_raw, "mix", "dataset")
    if not isinstance(mix_raw, list) or len(mix_raw) != 3:
        raise ConfigError("dataset.mix must be a list of three fractions")
    geo_raw = _as_section(ds_raw.get("geometry", {}), "dataset.geometry")
    unknown = set(geo_raw) - _GEOMETRY_KEYS
    if unknown:
        raise ConfigError(f"dataset.geometry: unknown keys {sorted(unknown)}")
    try:
        dataset = DatasetSettings(
            num_instances=int(_need(ds_raw, "num_instances", "dataset")),
            num_classes=int(ds_raw.get("num_classes", 3)),
            mix=tuple(float(f) for f in mix_raw),
            geometry=GeometryConfig(**geo_raw),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"dataset: {exc}") from None

    models_raw = _as_section(_need(obj, "models", "config"), "models")
    unknown = set(models_raw) - {"main", "reference"}
    if unknown:
        raise ConfigError(f"models: unknown keys {sorted(unknown)}")
    main = _parse_model(_need(models_raw, "main", "models"), "models.main")
    reference = _parse_model(_need(models_raw, "reference", "models"), "models.reference")

    tr_raw = _as_section(_need(obj, "train", "config"), "train")
    unknown = set(tr_raw) - {"max_steps", "checkpoint_every", "peak_lr", "batch_size", "warmup_fraction"}
    if unknown:
        raise ConfigError(f"train: unknown keys {sorted(unknown)}")
    try:
        train = TrainSettings(
            max_steps=int(_need(tr_raw, "max_steps", "train")),
            checkpoint_every=int(_need(tr_raw, "checkpoint_every", "train")),
            peak_lr=float(_need(tr_raw, "peak_lr", "train")),
            batch_size=int(tr_raw.get("batch_size", 32)),
            warmup_fraction=float(tr_raw.get("warmup_fraction", 0.10)),
        )
        train.config(seed=0)  # surface invalid step/lr combinations now
    except (TrainError, TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from None

    try:
        q = float(_need(obj, "q", "config"))
        check_q(q)
    except MapError as exc:
        raise ConfigError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"q: {exc}") from None

    kinds_raw = obj.get("subset_kinds", ["ambiguous", "random"])
    if not isinstance(kinds_raw, list) or not kinds_raw:
        raise ConfigError("subset_kinds must be a nonempty list")
    for kind in kinds_raw:
        if kind not in SUBSET_KINDS:
            raise ConfigError(
                f"unknown subset kind {kind!r}; known kinds: {', '.join(SUBSET_KINDS)}"
            )
    if len(set(kinds_raw)) != len(kinds_raw):
        raise ConfigError("subset_kinds contains duplicates")

    stop_raw = _as_section(_need(obj, "stop", "config"), "stop")
    unknown = set(stop_raw) - {"kind", "k", "metric"}
    if unknown:
        raise ConfigError(f"stop: unknown keys {sorted(unknown)}")
    try:
        stop = StopPolicy(
            kind=stop_raw.get("kind", "patience"),
            k=int(stop_raw.get("k", 2)),
            metric=stop_raw.get("metric", "hard_slice_accuracy"),
        )
    except (PipelineError, TypeError, ValueError) as exc:
        raise ConfigError(f"stop: {exc}") from None
    if stop.kind != "patience":
        raise ConfigError("stop.kind must be 'patience' for a benchmark")

    baseline = obj.get("cost_baseline", "erm_main")
    if baseline != "erm_main":
        raise ConfigError(
            f"unsupported cost_baseline {baseline!r}; only 'erm_main' is implemented"
        )

    name = obj.get("name", "benchmark")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a nonempty string")

    return BenchmarkConfig(
        name=name,
        dataset=dataset,
        main=main,
        reference=reference,
        train=train,
        q=q,
        subset_kinds=tuple(kinds_raw),
        stop=stop,
        seeds=seeds,
        cost_baseline=baseline,
    )


def load_benchmark_config(path) -> BenchmarkConfig:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise BenchmarkError(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BenchmarkError(f"malformed config {path}: {exc}") from None
    return config_from_dict(obj)


def default_config() -> BenchmarkConfig:
    raw = resources.files("ftft").joinpath("configs/default.json").read_text("utf-8")
    return config_from_dict(json.loads(raw))


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    reports: Mapping[str, FtftReport]  # keyed by method, insertion-ordered


@dataclass(frozen=True)
class BenchmarkResult:
    config: BenchmarkConfig
    outcomes: tuple[SeedOutcome, ...]


def run_seed(config: BenchmarkConfig, seed: int) -> SeedOutcome:
    try:
        dataset = generate_dataset(
            seed,
            num_instances=config.dataset.num_instances,
            num_classes=config.dataset.num_classes,
            mix=config.dataset.mix,
            geometry=config.dataset.geometry,
        )
    except DataError as exc:
        raise BenchmarkError(f"seed {seed}: {exc}") from None
    cfg = config.train.config(seed)
    reports: dict[str, FtftReport] = {}
    reports["erm"] = run_erm(dataset, config.main, cfg, run_id=f"erm-s{seed}")
    reports["erm_es"] = run_erm(
        dataset, config.main, cfg, stop=config.stop, run_id=f"erm_es-s{seed}"
    )
    for kind in config.subset_kinds:
        ref = None if kind == "random" else config.main
        reports[f"dm_{kind}"] = run_cartography(
            dataset, ref, config.main, config.q, kind, cfg, cfg, run_id_prefix=f"s{seed}-"
        )
    reports["ftft"] = run_ftft(
        dataset,
        config.reference,
        config.main,
        config.q,
        config.stop,
        cfg,
        cfg,
        run_id_prefix=f"s{seed}-",
    )
    return SeedOutcome(seed=seed, reports=reports)


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    outcomes = tuple(run_seed(config, seed) for seed in config.seeds)
    return BenchmarkResult(config=config, outcomes=outcomes)


def _method_summary(report: FtftReport, metric: str) -> dict:
    series = report.main_run.metric_series(metric)
    return {
        "best_checkpoint": report.best_checkpoint,
        "stop_checkpoint": report.stop_checkpoint,
        "charged_checkpoints": report.charged_checkpoints,
        "best_" + metric: series[report.best_checkpoint],
        "final_" + metric: series[-1],
        "relative_cost": report.costs.relative_total,
    }


def summarize(result: BenchmarkResult) -> dict:
    metric = result.config.stop.metric
    per_seed = []
    for outcome in result.outcomes:
        per_seed.append(
            {
                "seed": outcome.seed,
                "methods": {
                    m: _method_summary(rep, metric) for m, rep in outcome.reports.items()
                },
            }
        )
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "metric": metric,
        "methods": result.config.methods(),
        "per_seed": per_seed,
    }


def cost_table(result: BenchmarkResult) -> list[tuple[str, int, str, str, str]]:
    """(method, seed, main_model, ref_model, cost) rows, cost display-formatted."""
    rows = []
    main_name = result.config.main.model_name
    for outcome in result.outcomes:
        for method, report in outcome.reports.items():
            ref = report.reference_run.dynamics.model_name if report.reference_run else "-"
            rows.append(
                (method, outcome.seed, main_name, ref, format_cost(report.costs.relative_total))
            )
    return rows


def _charted_series(report: FtftReport, metric: str) -> list[float]:
    # a patience-stopped run's curve ends where the run was stopped
    series = report.main_run.metric_series(metric)
    if report.stop.kind == "patience":
        return series[: report.stop_checkpoint + 1]
    return series


def seed_chart(outcome: SeedOutcome, metric: str, title: str) -> str:
    return line_chart(
        {m: _charted_series(rep, metric) for m, rep in outcome.reports.items()},
        title=title,
        x_label="checkpoint",
        y_label=metric,
    )


def write_bundle(result: BenchmarkResult, out_dir, force: bool = False) -> Path:
    """Materialize the report bundle; refuses a nonempty directory without force."""
    out = Path(out_dir)
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"output path {out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise ConfigError(f"output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)

    config = result.config
    metric = config.stop.metric
    (out / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    (out / "summary.json").write_text(
        json.dumps(summarize(result), indent=2) + "\n", encoding="utf-8"
    )

    with open(out / "costs.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("method,seed,main_model,ref_model,relative_cost\n")
        for method, seed, main_name, ref, cost in cost_table(result):
            fh.write(f"{method},{seed},{main_name},{ref},{cost}\n")

    for outcome in result.outcomes:
        seed_dir = out / f"seed{outcome.seed}"
        seed_dir.mkdir(exist_ok=True)
        written_dynamics = set()
        for method, report in outcome.reports.items():
            with open(seed_dir / f"metrics_{method}.csv", "w", encoding="utf-8", newline="") as fh:
                write_metrics_csv(report.main_run.checkpoint_metrics, fh)
            if report.reference_run is not None:
                model = report.reference_run.dynamics.model_name
                if model not in written_dynamics:
                    written_dynamics.add(model)
                    save_dynamics(report.reference_run.dynamics, seed_dir / f"dynamics_{model}.jsonl")
            if report.data_map is not None:
                save_map(report.data_map, seed_dir / f"map_{method}.json")
        chart = seed_chart(outcome, metric, f"{config.name} seed {outcome.seed}")
        (out / f"curves_s{outcome.seed}.svg").write_text(chart + "\n", encoding="utf-8")
    return out

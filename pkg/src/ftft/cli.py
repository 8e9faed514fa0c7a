"""Command-line surface: train, map, select, compare, trajectory,
easy-ratio, cost, ftft, report.

Exit codes are a stable scripting contract: 0 success, 1 data or
validation error (unreadable or malformed input files, incompatible
maps), 2 usage error (bad flags or flag values, invalid config).  No
output file is ever overwritten without --force.  Set FTFT_NO_COLOR to
suppress the little ANSI styling the tables use.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .benchmark import (
    BenchmarkError,
    ConfigError,
    default_config,
    load_benchmark_config,
    run_benchmark,
    summarize,
    write_bundle,
)
from .cartography import (
    MapError,
    build_map,
    check_q,
    compute_stats,
    load_map,
    save_map,
    select_by_stat,
)
from .costs import (
    MODEL_REGISTRY,
    CostError,
    TrainingRun,
    format_cost,
    model_relative_cost,
    relative_cost,
    resolve_model,
)
from .dynamics import DynamicsError, load_dynamics, save_dynamics
from .pipeline import PipelineError
from .svg import heatmap, line_chart
from .toylab.data import DataError, generate_dataset
from .toylab.models import ModelError, ToyModelSpec
from .toylab.train import TrainConfig, TrainError, train, write_metrics_csv
from .transfer import (
    easy_ratio_rows,
    median_trajectories,
    overlap_matrix,
    write_easy_ratio_csv,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _style(text: str, code: str) -> str:
    if os.environ.get("FTFT_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _bold(text: str) -> str:
    return _style(text, "1")


def _guard(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise UsageError(f"refusing to overwrite {path} (use --force)")
    return path


def _usage_q(q: float) -> float:
    try:
        check_q(q)
    except MapError as exc:
        raise UsageError(str(exc)) from None
    return q


def _parse_fractions(text: str, count: int | None, flag: str) -> list[float]:
    try:
        parts = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} must be a comma-separated list of numbers") from None
    if not parts or (count is not None and len(parts) != count):
        need = f"{count} " if count is not None else ""
        raise UsageError(f"{flag} must hold {need}comma-separated numbers")
    return parts


# --- subcommands ---


def cmd_train(args) -> int:
    spec = ToyModelSpec(args.model, hidden_units=args.hidden_units)
    out = _guard(Path(args.out), args.force)
    metrics_out = _guard(Path(args.metrics_out), args.force) if args.metrics_out else None
    mix = _parse_fractions(args.mix, 3, "--mix")
    dataset = generate_dataset(
        args.dataset_seed,
        num_instances=args.num_instances,
        num_classes=args.num_classes,
        mix=mix,
    )
    config = TrainConfig(
        max_steps=args.max_steps,
        checkpoint_every=args.checkpoint_every,
        peak_lr=args.peak_lr,
        batch_size=args.batch_size,
        warmup_fraction=args.warmup_fraction,
        seed=args.seed,
    )
    result = train(dataset, spec, config, run_id=args.run_id)
    save_dynamics(result.dynamics, out)
    if metrics_out:
        with open(metrics_out, "w", encoding="utf-8", newline="") as fh:
            write_metrics_csv(result.checkpoint_metrics, fh)
    final = result.checkpoint_metrics[-1]
    print(f"run_id          {result.dynamics.run_id}")
    print(f"model           {result.dynamics.model_name} ({result.dynamics.num_params} params)")
    print(f"steps           {result.steps_run}")
    print(f"checkpoints     {result.dynamics.num_checkpoints}")
    print(f"id_accuracy     {final.id_accuracy:.6f}")
    print(f"hard_slice_accuracy {final.hard_slice_accuracy:.6f}")
    print(f"dynamics        {out}")
    return EXIT_OK


def cmd_map(args) -> int:
    _usage_q(args.q)
    out = _guard(Path(args.out), args.force)
    dynamics = load_dynamics(args.dynamics)
    data_map = build_map(dynamics, args.q)
    save_map(data_map, out)
    print(f"instances    {data_map.num_instances}")
    print(f"q            {args.q:g}")
    print(f"ambiguous    {len(data_map.ambiguous)}")
    print(f"hard_to_learn {len(data_map.hard_to_learn)}")
    print(f"easy         {len(data_map.easy)}")
    print(f"easy_ratio   {data_map.easy_ratio():.6f}")
    print(f"map          {out}")
    return EXIT_OK


def cmd_select(args) -> int:
    data_map = load_map(args.map)
    ids = sorted(getattr(data_map, args.region))
    if args.out:
        out = _guard(Path(args.out), args.force)
        out.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")
        print(f"wrote {len(ids)} {args.region} ids to {out}")
    else:
        for i in ids:
            print(i)
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.maps) < 2:
        raise UsageError("need at least two map files to compare")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = _guard(out_dir / "overlap.csv", args.force)
    svg_path = _guard(out_dir / "overlap.svg", args.force)

    labeled: dict[str, object] = {}
    for path in args.maps:
        data_map = load_map(path)
        label = data_map.run_id
        if label in labeled:
            label = f"{label}#{sum(1 for l in labeled if l.split('#')[0] == data_map.run_id) + 1}"
        labeled[label] = data_map
    matrix = overlap_matrix(labeled)

    width = max(len(l) for l in matrix.labels)
    print(_bold(" " * width + "  " + "  ".join(f"{l:>{max(len(l), 4)}}" for l in matrix.labels)))
    for label, row in zip(matrix.labels, matrix.values):
        cells = "  ".join(
            f"{v:>{max(len(l), 4)}.2f}" for l, v in zip(matrix.labels, row)
        )
        print(f"{label:<{width}}  {cells}")

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "overlap"])
        for la, row in zip(matrix.labels, matrix.values):
            for lb, v in zip(matrix.labels, row):
                w.writerow([la, lb, f"{v:.2f}"])
    svg_path.write_text(
        heatmap(matrix.labels, matrix.values, title="ambiguous-region overlap") + "\n",
        encoding="utf-8",
    )
    print(f"overlap csv  {csv_path}")
    print(f"overlap svg  {svg_path}")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    f = args.split_fraction
    if not (0.0 < f < 1.0):
        raise UsageError(f"split-fraction must be in (0, 1), got {f:g}")
    out = _guard(Path(args.out), args.force) if args.out else None
    dynamics = load_dynamics(args.dynamics)
    stats = compute_stats(dynamics)
    count = max(1, math.floor(f * len(stats) + 0.5))
    if count >= len(stats):
        raise UsageError(f"split-fraction {f:g} leaves no other half")
    hard = select_by_stat(stats, count, "mean", largest=False)
    rows = median_trajectories(dynamics, hard)
    print(_bold(f"{'checkpoint':>10}  {'hard_median':>11}  {'other_median':>12}"))
    for ckpt, hard_med, other_med in rows:
        print(f"{ckpt:>10}  {hard_med:>11.6f}  {other_med:>12.6f}")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(rows, fh)
        print(f"trajectory csv  {out}")
    return EXIT_OK


def cmd_easy_ratio(args) -> int:
    qs = sorted(_usage_q(q) for q in _parse_fractions(args.qs, None, "--qs"))
    out = _guard(Path(args.out), args.force) if args.out else None
    by_model: dict[str, object] = {}
    for path in args.dynamics:
        dynamics = load_dynamics(path)
        label = dynamics.model_name
        if label in by_model:
            label = f"{label}#{sum(1 for l in by_model if l.split('#')[0] == dynamics.model_name) + 1}"
        by_model[label] = dynamics
    rows = easy_ratio_rows(by_model, qs)
    print(_bold(f"{'model':<20}  {'q':>5}  {'easy_ratio':>10}"))
    for model, q, ratio in rows:
        print(f"{model:<20}  {q:>5g}  {ratio:>10.6f}")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_easy_ratio_csv(rows, fh)
        print(f"easy-ratio csv  {out}")
    return EXIT_OK


def cmd_cost(args) -> int:
    if args.table:
        print(_bold(f"{'model':<20}  {'params':>11}  {'relative_cost':>13}"))
        for name in sorted(MODEL_REGISTRY):
            spec = MODEL_REGISTRY[name]
            cost = model_relative_cost(name, args.baseline)
            print(f"{name:<20}  {spec.num_params:>11}  {format_cost(cost):>13}")
        return EXIT_OK
    if not args.model:
        raise UsageError("--model is required (or use --table)")
    try:
        main = resolve_model(args.model)
        base = resolve_model(args.baseline)
        ref = resolve_model(args.ref) if args.ref else None
    except CostError as exc:
        raise UsageError(str(exc)) from None
    baseline_run = TrainingRun(base.num_params, args.steps, args.batch_size)
    total = relative_cost(
        TrainingRun(main.num_params, args.steps, args.batch_size), baseline_run
    )
    if ref is not None:
        total += relative_cost(
            TrainingRun(ref.num_params, args.steps, args.batch_size), baseline_run
        )
    print(format_cost(total))
    return EXIT_OK


def _print_summary(summary: dict) -> None:
    metric = summary["metric"]
    print(_bold(
        f"{'seed':>4}  {'method':<14}  {'best':>4}  {'charged':>7}  "
        f"{'best_' + metric:>25}  {'final_' + metric:>26}  {'cost':>7}"
    ))
    for entry in summary["per_seed"]:
        for method in summary["methods"]:
            m = entry["methods"][method]
            print(
                f"{entry['seed']:>4}  {method:<14}  {m['best_checkpoint']:>4}  "
                f"{m['charged_checkpoints']:>7}  {m['best_' + metric]:>25.6f}  "
                f"{m['final_' + metric]:>26.6f}  {format_cost(m['relative_cost']):>7}"
            )


def cmd_ftft(args) -> int:
    config = load_benchmark_config(args.config) if args.config else default_config()
    out_dir = Path(args.out_dir)
    started = time.perf_counter()
    result = run_benchmark(config)
    write_bundle(result, out_dir, force=args.force)
    elapsed = time.perf_counter() - started
    _print_summary(summarize(result))
    print(f"bundle  {out_dir}  ({elapsed:.1f}s)")
    return EXIT_OK


def cmd_report(args) -> int:
    bundle = Path(args.bundle)
    summary_path = bundle / "summary.json"
    if not summary_path.is_file():
        raise BenchmarkError(f"{bundle} is not a benchmark bundle (no summary.json)")
    summary = json.loads(summary_path.read_text("utf-8"))
    _print_summary(summary)
    if args.render_dir:
        render_dir = Path(args.render_dir)
        render_dir.mkdir(parents=True, exist_ok=True)
        metric = summary["metric"]
        for entry in summary["per_seed"]:
            seed = entry["seed"]
            series = {}
            for method in summary["methods"]:
                path = bundle / f"seed{seed}" / f"metrics_{method}.csv"
                values = _read_metric_csv(path, metric)
                stop = entry["methods"][method]["stop_checkpoint"]
                if method in ("erm_es", "ftft"):
                    values = values[: stop + 1]
                series[method] = values
            svg_path = _guard(render_dir / f"curves_s{seed}.svg", args.force)
            svg_path.write_text(
                line_chart(
                    series,
                    title=f"{summary['config']['name']} seed {seed}",
                    x_label="checkpoint",
                    y_label=metric,
                )
                + "\n",
                encoding="utf-8",
            )
            print(f"rendered  {svg_path}")
    return EXIT_OK


def _read_metric_csv(path: Path, metric: str) -> list[float]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            return [float(row[metric]) for row in reader]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise BenchmarkError(f"cannot read metrics csv {path}: {exc}") from None


# --- parser & dispatch ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftft",
        description="data maps from training dynamics, subset selection, and pipeline benchmarks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("train", help="train a toy model, write its dynamics")
    p.add_argument("--model", required=True, choices=["linear", "mlp"])
    p.add_argument("--hidden-units", type=int, default=32)
    p.add_argument("--out", required=True, help="dynamics output path")
    p.add_argument("--metrics-out", help="checkpoint metrics CSV path")
    p.add_argument("--dataset-seed", type=int, default=0)
    p.add_argument("--num-instances", type=int, default=1200)
    p.add_argument("--num-classes", type=int, default=3)
    p.add_argument("--mix", default="0.5,0.2,0.3", help="tier fractions a,b,c")
    p.add_argument("--max-steps", type=int, required=True)
    p.add_argument("--checkpoint-every", type=int, required=True)
    p.add_argument("--peak-lr", type=float, required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--warmup-fraction", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--run-id", default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("map", help="build a data map from a dynamics file")
    p.add_argument("--dynamics", required=True)
    p.add_argument("--q", type=float, default=0.33)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("select", help="list one region of a map")
    p.add_argument("--map", required=True)
    p.add_argument("--region", default="ambiguous", choices=["ambiguous", "hard_to_learn", "easy"])
    p.add_argument("--out", help="write ids here, one per line")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", help="overlap matrix of two or more maps")
    p.add_argument("maps", nargs="+", help="map files")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trajectory", help="median p_true of hard vs other instances")
    p.add_argument("--dynamics", required=True)
    p.add_argument("--split-fraction", type=float, default=0.10)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("easy-ratio", help="easy-region share per model and q")
    p.add_argument("--dynamics", action="append", required=True, help="repeatable")
    p.add_argument("--qs", default="0.1,0.25,0.33,0.5")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_easy_ratio)

    p = sub.add_parser("cost", help="relative fine-tuning cost from the model registry")
    p.add_argument("--model")
    p.add_argument("--ref", help="add a full-length reference stage")
    p.add_argument("--baseline", default="deberta-v3-large")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--table", action="store_true", help="print the whole registry")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("ftft", help="run a benchmark config, write the report bundle")
    p.add_argument("--config", help="benchmark config JSON (default: shipped config)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_ftft)

    p = sub.add_parser("report", help="print (and optionally re-render) a bundle summary")
    p.add_argument("--bundle", required=True)
    p.add_argument("--render-dir", help="re-render curve SVGs into this directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


DATA_ERRORS = (
    DynamicsError,
    MapError,
    DataError,
    TrainError,
    PipelineError,
    ModelError,
    CostError,
    BenchmarkError,
    OSError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

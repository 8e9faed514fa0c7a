#!/usr/bin/env python3
"""Train both reference models on one seed and dump the contrast artifacts.

Writes easy_ratio.csv, trajectory_<model>.csv per model, and
hard_median.svg into the output directory.  The point of the figure: the
weak (linear) model's median confidence on the difficult tier hovers at
chance for the whole run, while the stronger mlp climbs away from it.
"""

import argparse
from pathlib import Path

import numpy as np

from ftft.benchmark import default_config
from ftft.svg import line_chart
from ftft.toylab.data import generate_dataset
from ftft.toylab.train import train
from ftft.transfer import (
    easy_ratio_rows,
    median_trajectories,
    write_easy_ratio_csv,
    write_trajectory_csv,
)

QS = (0.10, 0.25, 0.33, 0.50)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out-dir", default="runs/reference-gap")
    args = ap.parse_args()

    config = default_config()
    ds = generate_dataset(
        args.seed,
        num_instances=config.dataset.num_instances,
        num_classes=config.dataset.num_classes,
        mix=config.dataset.mix,
        geometry=config.dataset.geometry,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    runs = {}
    for spec in (config.reference, config.main):
        runs[spec.model_name] = train(ds, spec, config.train.config(args.seed))
        print(f"trained {spec.model_name}")

    rows = easy_ratio_rows({name: r.dynamics for name, r in runs.items()}, QS)
    with open(out / "easy_ratio.csv", "w", encoding="utf-8", newline="") as fh:
        write_easy_ratio_csv(rows, fh)

    dif = np.flatnonzero((ds.tier == "difficult") & (ds.split == "train")).tolist()
    medians = {}
    for name, r in runs.items():
        traj = median_trajectories(r.dynamics, dif)
        path = out / f"trajectory_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(traj, fh)
        medians[name] = [row[1] for row in traj]

    svg = line_chart(
        medians,
        title=f"difficult-tier median p_true, seed {args.seed}",
        y_label="median p_true",
    )
    (out / "hard_median.svg").write_text(svg, encoding="utf-8")

    for model, q, ratio in rows:
        print(f"{model}  q={q:g}  easy_ratio={ratio:.3f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Generate plot-ready coverage and set-size curves on synthetic data.

Runs the full pipeline (synthetic blobs -> softmax baseline -> repeated
random-split evaluation across a risk grid) and writes three CSVs into the
output directory: the per-trial rows, the per-alpha aggregate, and a curve
table with the coverage target column added. Rendering is left to whatever
plotting tool you prefer; the bands are mean +/- one standard deviation.
"""

import argparse
import contextlib
import csv
import io
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from conformal_fault.cli import main as cli_main
from conformal_fault.fileio import load_scores, report_paths, save_report
from conformal_fault.labels import validate_label_space
from conformal_fault.metrics import sweep


def run(args: argparse.Namespace) -> None:
    os.makedirs(args.out_dir, exist_ok=True)
    scores_path = os.path.join(args.out_dir, "scores.csv")
    with contextlib.redirect_stdout(io.StringIO()):
        cli_main(
            [
                "simulate",
                "--seed", str(args.seed),
                "--separation", str(args.separation),
                "--out", scores_path,
            ]
        )
    labels, records = load_scores(scores_path)
    space = validate_label_space(labels, ["Normal"])
    alphas = [round(0.1 * k, 10) for k in range(1, 10)]
    report = sweep(records, space, alphas, n_trials=args.trials, seed=args.seed)

    trials_path, aggregate_path = report_paths(os.path.join(args.out_dir, "report"))
    save_report(trials_path, aggregate_path, report)

    curve_path = os.path.join(args.out_dir, "coverage_curve.csv")
    with open(curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "target", "ecr_mean", "ecr_sd", "apss_mean", "apss_sd"])
        for s in report.summaries:
            writer.writerow(
                [
                    f"{s.alpha:.6f}",
                    f"{1 - s.alpha:.6f}",
                    f"{s.ecr_mean:.6f}",
                    f"{s.ecr_sd:.6f}",
                    f"{s.apss_mean:.6f}",
                    f"{s.apss_sd:.6f}",
                ]
            )

    print(f"wrote {trials_path}, {aggregate_path}, {curve_path}")
    print(f"{'alpha':>6} {'target':>7} {'ecr':>16} {'apss':>16}")
    for s in report.summaries:
        print(
            f"{s.alpha:6.1f} {1 - s.alpha:7.2f} "
            f"{s.ecr_mean:8.4f}±{s.ecr_sd:6.4f} "
            f"{s.apss_mean:8.4f}±{s.apss_sd:6.4f}"
        )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--separation", type=float, default=1.5)
    parser.add_argument("--out-dir", default="curves_out")
    run(parser.parse_args())

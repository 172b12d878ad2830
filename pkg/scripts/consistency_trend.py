#!/usr/bin/env python3
"""Show how prediction sets tighten as the calibration set grows.

At a fixed risk level, a tiny calibration set cannot push any label's
p-value below the threshold (the lattice is too coarse), so sets stay large;
with more calibration data they shrink toward the smallest size the scores
support. This script measures mean set size against calibration size on
well-separated synthetic scores and writes the trend as a CSV.
"""

import argparse
import csv
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from conformal_fault.conformal import calibrate
from conformal_fault.labels import ScoreRecord, validate_label_space
from conformal_fault.metrics import apss, outcome_for_record

SPACE = validate_label_space(["A", "B"], ["A"])


def separable_records(n: int, rng: np.random.Generator) -> list[ScoreRecord]:
    records = []
    for i in range(n):
        truth = "A" if i % 2 == 0 else "B"
        confident = rng.uniform(0.9, 1.0)
        scores = (confident, 1.0 - confident) if truth == "A" else (1.0 - confident, confident)
        records.append(ScoreRecord(f"s{i}", truth, scores))
    return records


def run(args: argparse.Namespace) -> None:
    rng = np.random.default_rng(args.seed)
    rows = []
    for n_calib in args.sizes:
        values = []
        for _ in range(args.repeats):
            calib = separable_records(n_calib, rng)
            evaluation = separable_records(args.eval_size, rng)
            model = calibrate(calib, SPACE)
            outcomes = [
                outcome_for_record(model, r, SPACE, args.alpha) for r in evaluation
            ]
            values.append(apss(outcomes))
        rows.append((n_calib, float(np.mean(values)), float(np.std(values))))

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n_calibration", "apss_mean", "apss_sd"])
        for n_calib, mean, sd in rows:
            writer.writerow([n_calib, f"{mean:.6f}", f"{sd:.6f}"])

    print(f"wrote {args.out} (alpha={args.alpha})")
    for n_calib, mean, sd in rows:
        print(f"n={n_calib:5d}  mean set size {mean:.3f} ± {sd:.3f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 10, 30, 120, 480])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--eval-size", type=int, default=200)
    parser.add_argument("--seed", type=int, default=1234)
    parser.add_argument("--out", default="consistency_trend.csv")
    run(parser.parse_args())

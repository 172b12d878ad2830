"""Command-line entry points.

Subcommands
    simulate   generate a synthetic score file end to end
    calibrate  persist sorted calibration scores plus the label partition
    predict    prediction sets and decisions for a score file
    evaluate   repeated random-split metrics at a single risk level
    sweep      the same across a risk-level grid

Every subcommand is deterministic given its flags; all randomness flows
through ``--seed``. Errors print ``error: <Code>: <detail>`` on stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .conformal import calibrate as calibrate_scores
from .errors import (
    ConformalFaultError,
    InvalidParameterError,
    LabelSpaceMismatchError,
)
from .fileio import (
    load_calibration,
    load_scores,
    report_paths,
    require_labeled,
    save_calibration,
    save_outcomes,
    save_report,
    save_scores,
)
from .labels import validate_label_space
from .metrics import outcome_for_record, sweep as run_sweep
from .synth import SynthConfig, baseline_predict, baseline_train, synth_generate


def parse_alpha_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` into an inclusive grid (or a single value).

    Both ends are included when they land within half a step; each value is
    rounded to 10 decimals so the usual decimal grids come out exact.
    """
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise InvalidParameterError(
                    f"bad grid {text!r}: need start <= stop and step > 0"
                )
            values = []
            k = 0
            while True:
                v = round(start + k * step, 10)
                if v > stop + step / 2:
                    break
                values.append(v)
                k += 1
        else:
            raise InvalidParameterError(
                f"bad grid {text!r}: expected a value or start:stop:step"
            )
    except ValueError:
        raise InvalidParameterError(f"bad grid {text!r}: not numeric") from None
    for v in values:
        if not 0.0 < v < 1.0:
            raise InvalidParameterError(f"risk level {v} outside (0, 1)")
    return values


def _split_labels(text: str) -> list[str]:
    return [part for part in text.split(",") if part]


def _resolve_jobs(jobs: int | None) -> int:
    # None = machine parallelism (joblib's -1)
    return -1 if jobs is None else jobs


def _cmd_simulate(args: argparse.Namespace) -> None:
    labels = _split_labels(args.labels)
    space = validate_label_space(labels, _split_labels(args.normal_labels))
    config = SynthConfig(
        label_space=space,
        n_per_class=args.per_class,
        n_features=args.features,
        class_separation=args.separation,
        noise_scale=args.noise,
        seed=args.seed,
    )
    if not 0.0 < args.train_frac < 1.0:
        raise InvalidParameterError(f"train-frac {args.train_frac} outside (0, 1)")
    features, truth = synth_generate(config)
    n_train = round(args.train_frac * config.n_per_class)
    if not 1 <= n_train <= config.n_per_class - 1:
        raise InvalidParameterError(
            f"train-frac {args.train_frac} leaves no training or pool rows "
            f"with {config.n_per_class} samples per class"
        )
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
    train_idx: list[int] = []
    pool_idx: list[int] = []
    for c in range(len(space.labels)):
        offset = c * config.n_per_class
        order = rng.permutation(config.n_per_class)
        train_idx.extend(offset + i for i in order[:n_train])
        pool_idx.extend(offset + i for i in order[n_train:])
    model = baseline_train(
        features[train_idx],
        [truth[i] for i in train_idx],
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        label_order=space.labels,
    )
    records = baseline_predict(
        model,
        features[pool_idx],
        sample_ids=[f"s{k:06d}" for k in range(len(pool_idx))],
        true_labels=[truth[i] for i in pool_idx],
    )
    save_scores(args.out, space.labels, records)
    print(
        f"wrote {args.out}: {len(records)} pool rows "
        f"({n_train}/{config.n_per_class - n_train} train/pool per class, "
        f"final training loss {model.info.final_loss:.6f})"
    )


def _cmd_calibrate(args: argparse.Namespace) -> None:
    labels, records = load_scores(args.scores)
    require_labeled(records, args.scores)
    space = validate_label_space(labels, _split_labels(args.normal_labels))
    model = calibrate_scores(records, space)
    save_calibration(args.out, model, space)
    print(f"wrote {args.out}: n={model.n} calibration scores")


def _cmd_predict(args: argparse.Namespace) -> None:
    model, space = load_calibration(args.artifact)
    labels, records = load_scores(args.scores)
    if tuple(labels) != space.labels:
        raise LabelSpaceMismatchError(
            f"score columns {labels} do not match calibration labels "
            f"{list(space.labels)}"
        )
    outcomes = [outcome_for_record(model, r, space, args.alpha) for r in records]
    save_outcomes(args.out, outcomes, labels=space.labels)
    print(f"wrote {args.out}: {len(outcomes)} outcomes at alpha={args.alpha}")


def _run_report(args: argparse.Namespace, alphas: list[float]) -> None:
    labels, records = load_scores(args.scores)
    require_labeled(records, args.scores)
    space = validate_label_space(labels, _split_labels(args.normal_labels))
    report = run_sweep(
        records,
        space,
        alphas,
        n_trials=args.trials,
        seed=args.seed,
        calib_ratio=args.calib_ratio,
        n_jobs=_resolve_jobs(args.jobs),
    )
    trials_path, aggregate_path = report_paths(args.out)
    save_report(trials_path, aggregate_path, report)
    print(f"wrote {trials_path} and {aggregate_path}")
    for s in report.summaries:
        print(
            f"alpha={s.alpha:.3f} target={1 - s.alpha:.3f} "
            f"ecr={s.ecr_mean:.4f}±{s.ecr_sd:.4f} "
            f"apss={s.apss_mean:.4f}±{s.apss_sd:.4f}"
        )


def _cmd_evaluate(args: argparse.Namespace) -> None:
    _run_report(args, [args.alpha])


def _cmd_sweep(args: argparse.Namespace) -> None:
    _run_report(args, parse_alpha_grid(args.alphas))


def _alpha_flag(value: str) -> float:
    try:
        alpha = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    return alpha


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformal-fault",
        description="Prediction sets with coverage guarantees for fault detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic score file")
    p_sim.add_argument("--labels", default="Normal,IR,OR,Ball", help="comma list of class names")
    p_sim.add_argument("--normal-labels", default="Normal", help="comma list of healthy classes")
    p_sim.add_argument("--per-class", type=int, default=375, help="samples generated per class (default leaves a 150-per-class pool)")
    p_sim.add_argument("--features", type=int, default=4, help="feature dimensions")
    p_sim.add_argument("--separation", type=float, default=1.5, help="class center distance")
    p_sim.add_argument("--noise", type=float, default=1.0, help="within-class std dev")
    p_sim.add_argument("--train-frac", type=float, default=0.6, help="fraction used to train the baseline")
    p_sim.add_argument("--iterations", type=int, default=200, help="gradient-descent steps")
    p_sim.add_argument("--learning-rate", type=float, default=0.5)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="score file to write")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cal = sub.add_parser("calibrate", help="build a calibration artifact from labeled scores")
    p_cal.add_argument("scores", help="labeled score file")
    p_cal.add_argument("--normal-labels", required=True, help="comma list of healthy classes")
    p_cal.add_argument("--out", required=True, help="artifact JSON to write")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_pred = sub.add_parser("predict", help="prediction sets and decisions for a score file")
    p_pred.add_argument("artifact", help="calibration artifact JSON")
    p_pred.add_argument("scores", help="score file (labels optional)")
    p_pred.add_argument("--alpha", type=_alpha_flag, required=True, help="risk level in (0,1)")
    p_pred.add_argument("--out", required=True, help="outcome file to write")
    p_pred.set_defaults(func=_cmd_predict)

    p_eval = sub.add_parser("evaluate", help="random-split metrics at one risk level")
    p_eval.add_argument("scores", help="labeled score file")
    p_eval.add_argument("--normal-labels", required=True)
    p_eval.add_argument("--alpha", type=_alpha_flag, required=True)
    p_eval.add_argument("--trials", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--calib-ratio", type=float, default=0.5)
    p_eval.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p_eval.add_argument("--out", required=True, help="output prefix: writes <out>_trials.csv and <out>_aggregate.csv")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="random-split metrics across a risk grid")
    p_sweep.add_argument("scores", help="labeled score file")
    p_sweep.add_argument("--normal-labels", required=True)
    p_sweep.add_argument("--alphas", default="0.1:0.9:0.1", help="grid start:stop:step or single value")
    p_sweep.add_argument("--trials", type=int, default=100)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--calib-ratio", type=float, default=0.5)
    p_sweep.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p_sweep.add_argument("--out", required=True, help="output prefix: writes <out>_trials.csv and <out>_aggregate.csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConformalFaultError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

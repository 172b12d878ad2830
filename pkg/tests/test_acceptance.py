"""End-to-end acceptance checks for the whole pipeline.

Each criterion is one test that prints a PASS line; run them with

    pytest tests/test_acceptance.py -v -s

or execute this file directly for a plain PASS/FAIL listing. Everything is
seeded, so the suite is deterministic.
"""

import math
import pathlib
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from conformal_fault.cli import main
from conformal_fault.conformal import calibrate, nonconformity, p_value, p_values_all, prediction_set
from conformal_fault.decision import Decision, classify
from conformal_fault.fileio import load_outcomes, load_scores, save_outcomes
from conformal_fault.labels import ScoreRecord, validate_label_space
from conformal_fault.metrics import (
    exact_rejection_rate,
    outcome_for_record,
    split_half,
    sweep,
    trial_seed,
)
from conformal_fault.synth import loss_and_gradient, softmax

ALPHAS = [round(0.1 * k, 10) for k in range(1, 10)]
SIM_SEED = 2
SWEEP_SEED = 2024
N_TRIALS = 100


@pytest.fixture(scope="module")
def pool(tmp_path_factory):
    """Default synthetic pool: 4 classes, 150 rows per class after the train split."""
    path = str(tmp_path_factory.mktemp("pool") / "scores.csv")
    assert main(["simulate", "--seed", str(SIM_SEED), "--out", path]) == 0
    labels, records = load_scores(path)
    space = validate_label_space(labels, ["Normal"])
    assert len(records) == 600
    return space, records


@pytest.fixture(scope="module")
def report_and_elapsed(pool):
    space, records = pool
    start = time.perf_counter()
    report = sweep(records, space, ALPHAS, n_trials=N_TRIALS, seed=SWEEP_SEED, n_jobs=1)
    elapsed = time.perf_counter() - start
    return report, elapsed


def test_a1_coverage_validity(report_and_elapsed):
    report, elapsed = report_and_elapsed
    assert elapsed < 10.0, f"sweep took {elapsed:.1f}s"
    for s in report.summaries:
        target = 1.0 - s.alpha
        two_se = 2.0 * s.ecr_sd / math.sqrt(N_TRIALS)
        assert s.ecr_mean >= target - two_se, (
            f"alpha={s.alpha}: mean ECR {s.ecr_mean:.4f} below {target:.4f} - 2SE"
        )
        assert s.ecr_mean >= target - 0.02, (
            f"alpha={s.alpha}: mean ECR {s.ecr_mean:.4f} below {target:.4f} - 0.02"
        )
    print(
        f"A1 coverage validity: PASS "
        f"(9 risk levels x {N_TRIALS} trials in {elapsed:.1f}s; "
        f"min margin over target-0.02: "
        f"{min(s.ecr_mean - (1 - s.alpha) + 0.02 for s in report.summaries):.4f})"
    )


def _p_true_draws(n_calib, n_draws, seed):
    space = validate_label_space(["A", "B"], ["A"])
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n_calib,)))
    values = []
    for _ in range(n_draws):
        f = rng.random(n_calib + 1)  # continuous scores: ties have probability zero
        records = [ScoreRecord(f"c{i}", "A", (f[i], 1.0 - f[i])) for i in range(n_calib)]
        model = calibrate(records, space)
        test = ScoreRecord("t", "A", (f[n_calib], 1.0 - f[n_calib]))
        values.append(p_value(model, nonconformity(test, "A", space)))
    return values


def test_a2_exact_super_uniformity():
    n_draws = 10_000
    for n_calib in (1, 4, 9):
        draws = _p_true_draws(n_calib, n_draws, seed=7)
        for alpha in (0.19, 0.2, 0.5, 0.9):
            oracle = exact_rejection_rate(n_calib, alpha)
            threshold = Fraction(alpha)
            count = sum(1 for p in draws if p <= threshold)
            freq = Fraction(count, n_draws)
            tol = 3.0 * math.sqrt(float(oracle * (1 - oracle)) / n_draws)
            assert float(abs(freq - oracle)) <= tol + 1e-12, (
                f"N={n_calib} alpha={alpha}: freq {float(freq):.4f} vs "
                f"oracle {float(oracle):.4f} (tol {tol:.4f})"
            )
    print("A2 exact super-uniformity: PASS (N in {1,4,9}, 10,000 draws each)")


def test_a3_nesting_and_monotone_sets(pool, report_and_elapsed):
    space, records = pool
    report, _ = report_and_elapsed
    by_trial = {}
    for row in report.rows:
        by_trial.setdefault(row.trial, []).append(row)
    for t in range(N_TRIALS):
        rows = sorted(by_trial[t], key=lambda r: r.alpha)
        for a, b in zip(rows, rows[1:]):
            assert b.apss <= a.apss, f"trial {t}: APSS increased with alpha"
            assert b.ecr <= a.ecr, f"trial {t}: ECR increased with alpha"
        # rebuild the trial and check the per-record sets really are nested
        calib, evaluation = split_half(records, trial_seed(SWEEP_SEED, t))
        model = calibrate(calib, space)
        sizes = {alpha: 0 for alpha in ALPHAS}
        for record in evaluation:
            p_map = p_values_all(model, record, space)
            previous = None
            for alpha in sorted(ALPHAS, reverse=True):
                members = prediction_set(p_map, alpha)
                if previous is not None:
                    assert previous <= members, f"trial {t}: sets not nested"
                previous = members
                sizes[alpha] += len(members)
        for row in rows:
            assert sizes[row.alpha] / len(evaluation) == row.apss
    first, last = report.summaries[0], report.summaries[-1]
    assert first.apss_mean > last.apss_mean
    print(
        "A3 nesting/monotonicity: PASS "
        f"(all {N_TRIALS} trials nested; mean set size "
        f"{first.apss_mean:.3f} at alpha=0.1 -> {last.apss_mean:.3f} at alpha=0.9)"
    )


# All 16 subsets of the 4-label space, worked out by hand from the rule order:
# only {Normal} stays inside the normal subset; any set containing a fault
# label raises the alarm; only the empty set reaches the fallback.
DECISION_TABLE = {
    (): "Ambiguous",
    ("Normal",): "Normal",
    ("IR",): "Faulty",
    ("OR",): "Faulty",
    ("Ball",): "Faulty",
    ("Normal", "IR"): "Faulty",
    ("Normal", "OR"): "Faulty",
    ("Normal", "Ball"): "Faulty",
    ("IR", "OR"): "Faulty",
    ("IR", "Ball"): "Faulty",
    ("OR", "Ball"): "Faulty",
    ("Normal", "IR", "OR"): "Faulty",
    ("Normal", "IR", "Ball"): "Faulty",
    ("Normal", "OR", "Ball"): "Faulty",
    ("IR", "OR", "Ball"): "Faulty",
    ("Normal", "IR", "OR", "Ball"): "Faulty",
}


def test_a4_decision_rule_oracle():
    space = validate_label_space(["Normal", "IR", "OR", "Ball"], ["Normal"])
    assert len(DECISION_TABLE) == 16
    for members, expected in DECISION_TABLE.items():
        got = classify(frozenset(members), space)
        assert got.value == expected, f"{members}: {got.value} != {expected}"
        assert (got is Decision.AMBIGUOUS) == (len(members) == 0)
    print("A4 decision-rule oracle: PASS (all 16 subsets match the hand-derived table)")


def test_a5_miscoverage_on_normal_bound(report_and_elapsed):
    report, _ = report_and_elapsed
    lines = []
    for s in report.summaries:
        rows = [r for r in report.rows if r.alpha == s.alpha]
        mis = float(np.mean([r.miscoverage_normal for r in rows]))
        type1 = float(np.mean([r.type1_rate for r in rows]))
        assert mis <= s.alpha + 0.02, (
            f"alpha={s.alpha}: miscoverage on normal {mis:.4f} above {s.alpha + 0.02:.4f}"
        )
        lines.append(f"a={s.alpha:.1f}: mis={mis:.3f} type1={type1:.3f}")
    print(
        "A5 miscoverage-on-normal bound: PASS "
        "(type1 reported, not bounded: " + "; ".join(lines) + ")"
    )


def _finite_difference(weights, features, labels, step=1e-5):
    grad = np.zeros_like(weights)
    for i in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            up = weights.copy()
            up[i, j] += step
            down = weights.copy()
            down[i, j] -= step
            grad[i, j] = (
                loss_and_gradient(up, features, labels)[0]
                - loss_and_gradient(down, features, labels)[0]
            ) / (2 * step)
    return grad


def test_a6_numerical_checks():
    rng = np.random.default_rng(42)
    features = rng.normal(size=(8, 3))
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 1])
    for weights in (np.zeros((3, 4)), np.random.default_rng(7).normal(size=(3, 4))):
        _, analytic = loss_and_gradient(weights, features, labels)
        numeric = _finite_difference(weights, features, labels)
        rel = np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8))
        assert rel < 1e-5, f"gradient relative error {rel:.2e}"
    probs = softmax(rng.normal(scale=10.0, size=(1000, 6)))
    worst = float(np.max(np.abs(probs.sum(axis=1) - 1.0)))
    assert worst < 1e-9, f"softmax row sums off by {worst:.2e}"
    print(
        "A6 numerical checks: PASS "
        f"(gradient vs central differences; softmax row-sum error {worst:.1e})"
    )


def test_a7_determinism_and_round_trip(pool, tmp_path):
    space, records = pool
    scores_path = str(tmp_path / "scores.csv")
    assert main(["simulate", "--seed", str(SIM_SEED), "--out", scores_path]) == 0
    base = [
        "sweep", scores_path, "--normal-labels", "Normal", "--alphas", "0.2:0.8:0.3",
        "--trials", "25", "--seed", "5",
    ]
    runs = {
        "one": base + ["--jobs", "1", "--out", str(tmp_path / "one")],
        "two": base + ["--jobs", "1", "--out", str(tmp_path / "two")],
        "par": base + ["--jobs", "2", "--out", str(tmp_path / "par")],
    }
    for argv in runs.values():
        assert main(argv) == 0
    for suffix in ("_trials.csv", "_aggregate.csv"):
        reference = pathlib.Path(str(tmp_path / "one") + suffix).read_bytes()
        assert pathlib.Path(str(tmp_path / "two") + suffix).read_bytes() == reference
        assert pathlib.Path(str(tmp_path / "par") + suffix).read_bytes() == reference

    calib, evaluation = split_half(records, trial_seed(SWEEP_SEED, 0))
    model = calibrate(calib, space)
    outcomes = [outcome_for_record(model, r, space, 0.2) for r in evaluation[:40]]
    outcome_path = str(tmp_path / "outcomes.csv")
    save_outcomes(outcome_path, outcomes)
    loaded = load_outcomes(outcome_path)
    assert loaded == outcomes
    for orig, back in zip(outcomes, loaded):
        for label in space.labels:
            assert back.p_values[label] == orig.p_values[label]
            assert isinstance(back.p_values[label], Fraction)
    print(
        "A7 determinism and round-trip: PASS "
        "(report bytes equal across reruns and --jobs; outcomes reload exactly)"
    )


def test_a8_p_value_lattice(pool):
    space, records = pool
    calib, evaluation = split_half(records, trial_seed(SWEEP_SEED, 0))
    model = calibrate(calib, space)
    denominator = model.n + 1
    checked = 0
    for record in evaluation:
        for p in p_values_all(model, record, space).values():
            scaled = p * denominator
            assert scaled.denominator == 1, f"{p} not on the k/{denominator} lattice"
            assert 1 <= scaled.numerator <= denominator
            checked += 1
    print(
        f"A8 p-value lattice: PASS "
        f"({checked} p-values all equal k/{denominator}, k in [1, {denominator}])"
    )


if __name__ == "__main__":
    raise SystemExit(
        subprocess.call(
            [sys.executable, "-m", "pytest", __file__, "-v", "-s", "--no-header"]
        )
    )

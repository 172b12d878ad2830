"""Coverage/set-size metrics and the repeated random-split evaluation harness.

A trial splits a labeled score pool into calibration and evaluation halves,
calibrates once, and scores every evaluation record at one or more risk
levels. A sweep repeats that over independently seeded trials and reports
mean and standard deviation per risk level; all randomness flows from the
base seed, so equal seeds give bit-identical reports regardless of how many
worker processes run the trials.

Coverage (ECR) is measured on the true label's set membership, independently
of the ternary decision; decision-level false alarms (type1_rate) and the
miscoverage of normal-truth samples are reported as separate columns so the
two kinds of error stay distinguishable.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .conformal import (
    CalibrationModel,
    PredictionOutcome,
    calibrate,
    p_values_all,
    prediction_set,
)
from .decision import Decision, classify
from .errors import (
    AlphaOutOfRangeError,
    EmptyEvaluationError,
    InvalidParameterError,
    MissingLabelError,
    NoNormalSamplesError,
    TooFewRecordsError,
)
from .labels import LabelSpace, ScoreRecord


@dataclass(frozen=True)
class TrialMetrics:
    """Aggregates of one calibration/evaluation split at one risk level."""

    alpha: float
    trial: int
    ecr: float
    apss: float
    type1_rate: float
    miscoverage_normal: float
    n_eval: int

    def __post_init__(self) -> None:
        for name in ("ecr", "type1_rate", "miscoverage_normal"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} outside [0, 1]: {value}")
        if self.apss < 0.0:
            raise ValueError(f"apss negative: {self.apss}")
        if self.n_eval < 1:
            raise ValueError("n_eval must be positive")


@dataclass(frozen=True)
class AlphaSummary:
    """Mean and population SD of ECR and APSS over trials at one risk level."""

    alpha: float
    ecr_mean: float
    ecr_sd: float
    apss_mean: float
    apss_sd: float


@dataclass(frozen=True)
class SweepReport:
    """Per-(alpha, trial) rows plus per-alpha summaries for one sweep.

    ``rows`` are sorted by (alpha, trial); ``seed`` is the base seed the
    sweep ran with (None when reconstructed from files, which do not store
    it).
    """

    rows: tuple[TrialMetrics, ...]
    summaries: tuple[AlphaSummary, ...]
    seed: int | None
    n_trials: int


def ecr(outcomes: Sequence[PredictionOutcome]) -> float:
    """Fraction of outcomes whose true label lies in the prediction set."""
    if not outcomes:
        raise EmptyEvaluationError("no outcomes to evaluate")
    covered = 0
    for o in outcomes:
        if o.true_label is None:
            raise MissingLabelError(f"sample {o.sample_id!r} has no true label")
        if o.true_label in o.set_members:
            covered += 1
    return covered / len(outcomes)


def apss(outcomes: Sequence[PredictionOutcome]) -> float:
    """Mean prediction-set cardinality."""
    if not outcomes:
        raise EmptyEvaluationError("no outcomes to evaluate")
    return sum(len(o.set_members) for o in outcomes) / len(outcomes)


def _normal_truth(
    outcomes: Sequence[PredictionOutcome], space: LabelSpace
) -> list[PredictionOutcome]:
    normal = set(space.normal_labels)
    subset = []
    for o in outcomes:
        if o.true_label is None:
            raise MissingLabelError(f"sample {o.sample_id!r} has no true label")
        if o.true_label in normal:
            subset.append(o)
    if not subset:
        raise NoNormalSamplesError("no outcomes with a normal true label")
    return subset


def type1_rate(outcomes: Sequence[PredictionOutcome], space: LabelSpace) -> float:
    """Among normal-truth outcomes, the fraction decided Faulty (false alarms)."""
    subset = _normal_truth(outcomes, space)
    alarms = sum(1 for o in subset if o.decision is Decision.FAULTY)
    return alarms / len(subset)


def miscoverage_on_normal(
    outcomes: Sequence[PredictionOutcome], space: LabelSpace
) -> float:
    """Among normal-truth outcomes, the fraction whose set misses the truth.

    This is the event the coverage guarantee bounds by alpha; a covered
    sample can still be decided Faulty when fault labels share its set, so
    this is reported separately from :func:`type1_rate`.
    """
    subset = _normal_truth(outcomes, space)
    missed = sum(1 for o in subset if o.true_label not in o.set_members)
    return missed / len(subset)


def split_half(
    records: Sequence[ScoreRecord],
    seed: "int | np.random.SeedSequence",
    calib_ratio: float = 0.5,
) -> tuple[list[ScoreRecord], list[ScoreRecord]]:
    """Randomly partition records into (calibration, evaluation) lists.

    A seeded uniform permutation assigns the first ``ceil(n * calib_ratio)``
    records to calibration and the rest to evaluation, so an odd pool gives
    calibration the extra record. Deterministic given the seed.
    """
    n = len(records)
    if n < 2:
        raise TooFewRecordsError(f"need at least 2 records to split, got {n}")
    if not 0.0 < calib_ratio < 1.0:
        raise InvalidParameterError(
            f"calib_ratio must be in (0, 1), got {calib_ratio}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_calib = math.ceil(n * calib_ratio)
    n_calib = min(max(n_calib, 1), n - 1)
    calib = [records[i] for i in order[:n_calib]]
    evaluation = [records[i] for i in order[n_calib:]]
    return calib, evaluation


def _assemble_outcome(
    record: ScoreRecord,
    p_map: dict,
    space: LabelSpace,
    alpha: float,
) -> PredictionOutcome:
    members = prediction_set(p_map, alpha)
    return PredictionOutcome(
        sample_id=record.sample_id,
        true_label=record.true_label,
        p_values=p_map,
        set_members=members,
        alpha=alpha,
        decision=classify(members, space),
    )


def outcome_for_record(
    model: CalibrationModel,
    record: ScoreRecord,
    space: LabelSpace,
    alpha: float,
) -> PredictionOutcome:
    """Full per-record result: p-values, prediction set, ternary decision."""
    return _assemble_outcome(record, p_values_all(model, record, space), space, alpha)


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    """Seed for trial ``trial``: ``SeedSequence(base_seed, spawn_key=(trial,))``."""
    return np.random.SeedSequence(base_seed, spawn_key=(trial,))


def _check_all_labeled(records: Sequence[ScoreRecord]) -> None:
    for record in records:
        if record.true_label is None:
            raise MissingLabelError(
                f"sample {record.sample_id!r} has no true label; "
                "evaluation requires fully labeled records"
            )


def _trial_rows(
    records: Sequence[ScoreRecord],
    space: LabelSpace,
    alphas: Sequence[float],
    seed: "int | np.random.SeedSequence",
    calib_ratio: float,
) -> list[TrialMetrics]:
    """One split scored at every alpha; p-values are computed once per record."""
    _check_all_labeled(records)
    calib, evaluation = split_half(records, seed, calib_ratio)
    model = calibrate(calib, space)
    p_maps = [p_values_all(model, r, space) for r in evaluation]
    rows = []
    for alpha in alphas:
        outcomes = [
            _assemble_outcome(r, p_map, space, alpha)
            for r, p_map in zip(evaluation, p_maps)
        ]
        rows.append(
            TrialMetrics(
                alpha=alpha,
                trial=0,
                ecr=ecr(outcomes),
                apss=apss(outcomes),
                type1_rate=type1_rate(outcomes, space),
                miscoverage_normal=miscoverage_on_normal(outcomes, space),
                n_eval=len(outcomes),
            )
        )
    return rows


def run_trial(
    records: Sequence[ScoreRecord],
    space: LabelSpace,
    alpha: float,
    seed: "int | np.random.SeedSequence",
    calib_ratio: float = 0.5,
) -> TrialMetrics:
    """Split, calibrate, score every evaluation record, and aggregate.

    Deterministic: fixed seed and inputs give bit-identical metrics.
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRangeError(f"alpha must be in (0, 1), got {alpha}")
    return _trial_rows(records, space, [alpha], seed, calib_ratio)[0]


def _sweep_trial(args) -> list[TrialMetrics]:
    records, space, alphas, base_seed, t, calib_ratio = args
    rows = _trial_rows(records, space, alphas, trial_seed(base_seed, t), calib_ratio)
    return [dataclasses.replace(row, trial=t) for row in rows]


def sweep(
    records: Sequence[ScoreRecord],
    space: LabelSpace,
    alphas: Sequence[float],
    n_trials: int,
    seed: int,
    calib_ratio: float = 0.5,
    n_jobs: int = 1,
) -> SweepReport:
    """Repeat random-split trials over a risk-level grid.

    Parameters
    ----------
    alphas : sequence of float
        Risk levels, each in (0, 1); deduplicated and sorted ascending.
    n_trials : int
        Independent splits; trial ``t`` is seeded from
        ``SeedSequence(seed, spawn_key=(t,))``.
    n_jobs : int
        Worker processes for the trials (joblib semantics; -1 = all cores).
        The report is identical for any value.

    Returns
    -------
    SweepReport
        Rows sorted by (alpha, trial) plus per-alpha mean/SD summaries
        (population SD, i.e. divided by ``n_trials``).
    """
    if not alphas:
        raise InvalidParameterError("alphas must be non-empty")
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise AlphaOutOfRangeError(f"alpha must be in (0, 1), got {alpha}")
    if n_trials < 1:
        raise InvalidParameterError(f"n_trials must be >= 1, got {n_trials}")
    grid = sorted(set(float(a) for a in alphas))
    tasks = [(list(records), space, grid, seed, t, calib_ratio) for t in range(n_trials)]
    if n_jobs == 1:
        per_trial = [_sweep_trial(task) for task in tasks]
    else:
        from joblib import Parallel, delayed

        per_trial = Parallel(n_jobs=n_jobs)(delayed(_sweep_trial)(t) for t in tasks)
    rows = sorted(
        (row for trial_rows in per_trial for row in trial_rows),
        key=lambda r: (r.alpha, r.trial),
    )
    summaries = []
    for alpha in grid:
        ecrs = np.array([r.ecr for r in rows if r.alpha == alpha])
        apsss = np.array([r.apss for r in rows if r.alpha == alpha])
        summaries.append(
            AlphaSummary(
                alpha=alpha,
                ecr_mean=float(np.mean(ecrs)),
                ecr_sd=float(np.std(ecrs)),
                apss_mean=float(np.mean(apsss)),
                apss_sd=float(np.std(apsss)),
            )
        )
    return SweepReport(
        rows=tuple(rows),
        summaries=tuple(summaries),
        seed=seed,
        n_trials=n_trials,
    )


def exact_rejection_rate(n_calib: int, alpha: float | Fraction) -> Fraction:
    """Exact probability that an exchangeable, tie-free true label is rejected.

    Enumerates the ``N+1`` equally likely placements of the test score among
    the calibration scores on a concrete configuration of distinct values,
    counting strictly-greater calibration scores directly for each placement.
    This deliberately avoids both the engine's search path and the closed-form
    lattice expression, so it can serve as independent ground truth for the
    rank p-value's rejection frequency.
    """
    if n_calib < 1:
        raise InvalidParameterError(f"n_calib must be >= 1, got {n_calib}")
    threshold = Fraction(alpha)
    denom = n_calib + 1
    rejected = 0
    values = list(range(1, denom + 1))  # any distinct values work; ranks decide
    for test_value in values:
        calibration = [v for v in values if v != test_value]
        greater = 0
        for s in calibration:
            if s > test_value:
                greater += 1
        p = Fraction(greater + 1, denom)
        if p <= threshold:
            rejected += 1
    return Fraction(rejected, denom)

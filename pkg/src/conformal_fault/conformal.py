"""Split-conformal core: nonconformity scores, rank p-values, prediction sets.

The nonconformity of label ``y`` for a sample is ``|1 - score_y|``, the
residual of the per-class score against a perfectly confident prediction.
Candidate labels are ranked against the calibration scores to produce exact
rational p-values ``k/(N+1)``; the prediction set keeps every label whose
p-value strictly exceeds the risk level. All comparisons against the risk
level are done in exact rational arithmetic, so a p-value landing exactly on
the threshold is excluded, never rounded in.

All functions here are pure and all types immutable; concurrent use needs
no coordination.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .decision import Decision
from .errors import (
    AlphaOutOfRangeError,
    EmptyCalibrationError,
    MissingLabelError,
    NonFiniteScoreError,
)
from .labels import LabelSpace, ScoreRecord


@dataclass(frozen=True)
class CalibrationModel:
    """Sorted nonconformity scores from a calibration set.

    Invariants: at least one score, non-decreasing order, every value finite
    and non-negative. Built by :func:`calibrate`; construct directly only
    with data that already satisfies them.
    """

    sorted_scores: tuple[float, ...]

    def __post_init__(self) -> None:
        scores = tuple(float(s) for s in self.sorted_scores)
        object.__setattr__(self, "sorted_scores", scores)
        if not scores:
            raise EmptyCalibrationError("calibration model needs at least one score")
        prev = None
        for s in scores:
            if not math.isfinite(s):
                raise NonFiniteScoreError(f"non-finite calibration score {s!r}")
            if s < 0.0:
                raise ValueError(f"negative calibration score {s!r}")
            if prev is not None and s < prev:
                raise ValueError("calibration scores not sorted non-decreasingly")
            prev = s

    @property
    def n(self) -> int:
        return len(self.sorted_scores)


@dataclass(frozen=True)
class PredictionOutcome:
    """Per-sample result: exact p-values, the prediction set, the decision.

    ``p_values`` maps every label to an exact rational in (0, 1];
    ``set_members`` is precisely the set of labels whose p-value strictly
    exceeds the stored risk level (re-checked on construction so that file
    round-trips cannot smuggle in an inconsistent set).
    """

    sample_id: str
    true_label: str | None
    p_values: Mapping[str, Fraction] = field(hash=False)
    set_members: frozenset[str]
    alpha: float
    decision: Decision

    def __post_init__(self) -> None:
        object.__setattr__(self, "set_members", frozenset(self.set_members))
        if not 0.0 < self.alpha < 1.0:
            raise AlphaOutOfRangeError(f"alpha must be in (0, 1), got {self.alpha}")
        threshold = Fraction(self.alpha)
        t_num, t_den = threshold.numerator, threshold.denominator
        expected = set()
        for label, p in self.p_values.items():
            num, den = p.numerator, p.denominator
            if num <= 0 or num > den:
                raise ValueError(f"p-value for {label!r} outside (0, 1]: {p}")
            # exact cross-multiplied strict comparison p > alpha
            if num * t_den > t_num * den:
                expected.add(label)
        if expected != set(self.set_members):
            raise ValueError(
                f"sample {self.sample_id!r}: prediction set inconsistent with "
                f"p-values at alpha={self.alpha}"
            )


def nonconformity(record: ScoreRecord, label: str, space: LabelSpace) -> float:
    """Nonconformity of ``label`` for ``record``: ``|1 - score_at(label)|``.

    The absolute value is kept so that scores outside [0, 1] (models that are
    not softmax-normalized) still map to a valid non-negative nonconformity.

    Raises
    ------
    UnknownLabelError
        If ``label`` is not in the space.
    DimensionMismatchError
        If the record's score vector does not match the space.
    """
    idx = space.position(label)
    space.check_record(record)
    return abs(1.0 - record.scores[idx])


def calibrate(records: Sequence[ScoreRecord], space: LabelSpace) -> CalibrationModel:
    """Compute and sort the true-label nonconformity scores.

    Parameters
    ----------
    records : sequence of ScoreRecord
        Calibration samples; every record must carry a true label.
    space : LabelSpace
        Canonical label order for the score vectors.

    Returns
    -------
    CalibrationModel
        Sorted nonconformity scores, one per record.

    Raises
    ------
    EmptyCalibrationError
        If ``records`` is empty.
    MissingLabelError
        If any record lacks a true label.
    """
    if not records:
        raise EmptyCalibrationError("no calibration records")
    scores = []
    for record in records:
        if record.true_label is None:
            raise MissingLabelError(
                f"sample {record.sample_id!r} has no true label; "
                "calibration requires labeled records"
            )
        scores.append(nonconformity(record, record.true_label, space))
    scores.sort()
    return CalibrationModel(sorted_scores=tuple(scores))


def p_value(model: CalibrationModel, candidate_score: float) -> Fraction:
    """Rank p-value of a candidate nonconformity against the calibration set.

    Returns the exact rational ``(#{calibration scores strictly greater} + 1)
    / (N + 1)``. Larger nonconformity never yields a larger p-value, and the
    result always lies on the lattice ``k/(N+1)``, ``1 <= k <= N+1``.
    """
    if not math.isfinite(candidate_score):
        raise NonFiniteScoreError(f"non-finite candidate score {candidate_score!r}")
    greater = model.n - bisect_right(model.sorted_scores, candidate_score)
    return Fraction(greater + 1, model.n + 1)


def p_values_all(
    model: CalibrationModel, record: ScoreRecord, space: LabelSpace
) -> dict[str, Fraction]:
    """p-value for every candidate label of one record, in label order."""
    space.check_record(record)
    return {
        label: p_value(model, nonconformity(record, label, space))
        for label in space.labels
    }


def prediction_set(
    p_map: Mapping[str, Fraction], alpha: float | Fraction
) -> frozenset[str]:
    """Labels whose p-value strictly exceeds the risk level ``alpha``.

    The comparison is exact: ``alpha`` is converted to a rational with the
    precise value of the float passed in, so lattice points equal to the
    threshold are excluded rather than left to float rounding. May return
    the empty set (high alpha) or every label (alpha below ``1/(N+1)``).
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRangeError(f"alpha must be in (0, 1), got {alpha}")
    threshold = Fraction(alpha)
    t_num, t_den = threshold.numerator, threshold.denominator
    return frozenset(
        label
        for label, p in p_map.items()
        if p.numerator * t_den > t_num * p.denominator
    )

"""CSV and JSON file formats.

Score files
    ``sample_id,true_label,<label columns in canonical order>`` — one row per
    sample, ``true_label`` empty for unlabeled rows.
Outcome files
    ``sample_id,true_label,alpha,decision,set_members,p_<label>...,
    p_<label>_rational...`` — prediction-set members ';'-joined in label
    order; p-values appear both as 6-decimal convenience floats and as exact
    ``numerator/denominator`` text, so loading a saved file loses nothing.
Report files
    per-trial ``alpha,trial,ecr,apss,type1_rate,miscoverage_normal,n_eval``
    plus an aggregate ``alpha,ecr_mean,ecr_sd,apss_mean,apss_sd``.
Calibration artifacts
    JSON with the label partition and the sorted nonconformity scores.

All floats are written with six decimal places (round-half-even); all files
are UTF-8 with '\\n' line endings, so equal inputs produce byte-identical
files on every platform.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from typing import Sequence

from .conformal import CalibrationModel, PredictionOutcome
from .decision import Decision
from .errors import (
    DuplicateLabelError,
    IoError,
    MissingLabelError,
    NonFiniteScoreError,
    ParseError,
    UnknownLabelError,
)
from .labels import LabelSpace, ScoreRecord, validate_label_space
from .metrics import AlphaSummary, SweepReport, TrialMetrics

SCORE_FIXED_COLUMNS = ("sample_id", "true_label")
OUTCOME_FIXED_COLUMNS = ("sample_id", "true_label", "alpha", "decision", "set_members")
TRIALS_COLUMNS = ("alpha", "trial", "ecr", "apss", "type1_rate", "miscoverage_normal", "n_eval")
AGGREGATE_COLUMNS = ("alpha", "ecr_mean", "ecr_sd", "apss_mean", "apss_sd")
SET_DELIMITER = ";"


def fmt_float(x: float) -> str:
    """Canonical 6-decimal rendering used by every CSV column."""
    return f"{x:.6f}"


def _open_write(path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _open_read(path):
    try:
        return open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _parse_float(text: str, path: str, lineno: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path} line {lineno}: bad number {text!r} in {column}") from None
    if not math.isfinite(value):
        raise NonFiniteScoreError(
            f"{path} line {lineno}: non-finite value {text!r} in {column}"
        )
    return value


def load_scores(path: str) -> tuple[list[str], list[ScoreRecord]]:
    """Read a score file; returns (label column order, records in row order)."""
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file")
        if tuple(header[:2]) != SCORE_FIXED_COLUMNS:
            raise ParseError(
                f"{path} line 1: header must start with "
                f"{','.join(SCORE_FIXED_COLUMNS)}, got {header[:2]}"
            )
        labels = header[2:]
        if not labels:
            raise ParseError(f"{path} line 1: no label columns")
        if len(set(labels)) != len(labels):
            raise DuplicateLabelError(f"{path} line 1: duplicate label columns")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + len(labels):
                raise ParseError(
                    f"{path} line {lineno}: expected {2 + len(labels)} fields, "
                    f"got {len(row)}"
                )
            sample_id = row[0]
            true_label = row[1] or None
            if true_label is not None and true_label not in labels:
                raise UnknownLabelError(
                    f"{path} line {lineno}: unknown true label {true_label!r}"
                )
            scores = tuple(
                _parse_float(cell, path, lineno, f"score column {labels[i]!r}")
                for i, cell in enumerate(row[2:])
            )
            records.append(
                ScoreRecord(sample_id=sample_id, true_label=true_label, scores=scores)
            )
    return list(labels), records


def save_scores(path: str, labels: Sequence[str], records: Sequence[ScoreRecord]) -> None:
    """Write a score file in canonical format (floats at 6 decimals)."""
    with _open_write(path) as fh:
        writer = _writer(fh)
        writer.writerow(list(SCORE_FIXED_COLUMNS) + list(labels))
        for record in records:
            if len(record.scores) != len(labels):
                raise IoError(
                    f"sample {record.sample_id!r}: {len(record.scores)} scores "
                    f"for {len(labels)} label columns"
                )
            writer.writerow(
                [record.sample_id, record.true_label or ""]
                + [fmt_float(s) for s in record.scores]
            )


def _outcome_header(labels: Sequence[str]) -> list[str]:
    return (
        list(OUTCOME_FIXED_COLUMNS)
        + [f"p_{lab}" for lab in labels]
        + [f"p_{lab}_rational" for lab in labels]
    )


def save_outcomes(
    path: str,
    outcomes: Sequence[PredictionOutcome],
    labels: Sequence[str] | None = None,
) -> None:
    """Write per-sample outcomes; label order defaults to the first outcome's."""
    if labels is None:
        if not outcomes:
            raise IoError("cannot infer label columns from an empty outcome list")
        labels = list(outcomes[0].p_values.keys())
    with _open_write(path) as fh:
        writer = _writer(fh)
        writer.writerow(_outcome_header(labels))
        for o in outcomes:
            if set(o.p_values.keys()) != set(labels):
                raise IoError(
                    f"sample {o.sample_id!r}: p-value labels do not match columns"
                )
            members = SET_DELIMITER.join(lab for lab in labels if lab in o.set_members)
            row = [
                o.sample_id,
                o.true_label or "",
                fmt_float(o.alpha),
                o.decision.value,
                members,
            ]
            row += [fmt_float(float(o.p_values[lab])) for lab in labels]
            row += [
                f"{o.p_values[lab].numerator}/{o.p_values[lab].denominator}"
                for lab in labels
            ]
            writer.writerow(row)


def load_outcomes(path: str) -> list[PredictionOutcome]:
    """Read an outcome file; p-values come back exact from the rational columns."""
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file")
        if tuple(header[: len(OUTCOME_FIXED_COLUMNS)]) != OUTCOME_FIXED_COLUMNS:
            raise ParseError(f"{path} line 1: unexpected outcome header")
        rest = header[len(OUTCOME_FIXED_COLUMNS) :]
        if not rest or len(rest) % 2 != 0:
            raise ParseError(f"{path} line 1: malformed p-value columns")
        half = len(rest) // 2
        labels = []
        for i in range(half):
            dec_col, rat_col = rest[i], rest[half + i]
            if not dec_col.startswith("p_") or rat_col != dec_col + "_rational":
                raise ParseError(
                    f"{path} line 1: p-value columns out of order near {dec_col!r}"
                )
            labels.append(dec_col[2:])
        outcomes = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            sample_id, true_label_raw, alpha_raw, decision_raw, members_raw = row[:5]
            alpha = _parse_float(alpha_raw, path, lineno, "alpha")
            try:
                decision = Decision(decision_raw)
            except ValueError:
                raise ParseError(
                    f"{path} line {lineno}: unknown decision {decision_raw!r}"
                ) from None
            members = frozenset(members_raw.split(SET_DELIMITER)) if members_raw else frozenset()
            unknown = members - set(labels)
            if unknown:
                raise UnknownLabelError(
                    f"{path} line {lineno}: set members not in columns: {sorted(unknown)}"
                )
            p_values = {}
            for i, lab in enumerate(labels):
                text = row[5 + half + i]
                try:
                    p = Fraction(text)
                except (ValueError, ZeroDivisionError):
                    raise ParseError(
                        f"{path} line {lineno}: bad rational {text!r}"
                    ) from None
                p_values[lab] = p
            try:
                outcome = PredictionOutcome(
                    sample_id=sample_id,
                    true_label=true_label_raw or None,
                    p_values=p_values,
                    set_members=members,
                    alpha=alpha,
                    decision=decision,
                )
            except ValueError as exc:
                raise ParseError(f"{path} line {lineno}: {exc}") from None
            outcomes.append(outcome)
    return outcomes


def save_report(trials_path: str, aggregate_path: str, report: SweepReport) -> None:
    """Write the per-trial rows and the per-alpha aggregate table."""
    with _open_write(trials_path) as fh:
        writer = _writer(fh)
        writer.writerow(TRIALS_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [
                    fmt_float(r.alpha),
                    r.trial,
                    fmt_float(r.ecr),
                    fmt_float(r.apss),
                    fmt_float(r.type1_rate),
                    fmt_float(r.miscoverage_normal),
                    r.n_eval,
                ]
            )
    with _open_write(aggregate_path) as fh:
        writer = _writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for s in report.summaries:
            writer.writerow(
                [
                    fmt_float(s.alpha),
                    fmt_float(s.ecr_mean),
                    fmt_float(s.ecr_sd),
                    fmt_float(s.apss_mean),
                    fmt_float(s.apss_sd),
                ]
            )


def _parse_int(text: str, path: str, lineno: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{path} line {lineno}: bad integer {text!r} in {column}") from None


def load_report(trials_path: str, aggregate_path: str) -> SweepReport:
    """Rebuild a report from its two files.

    The file schema does not store the base seed, so ``seed`` comes back as
    None; everything else is restored at the written precision.
    """
    rows = []
    with _open_read(trials_path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRIALS_COLUMNS:
            raise ParseError(f"{trials_path} line 1: unexpected trials header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRIALS_COLUMNS):
                raise ParseError(f"{trials_path} line {lineno}: wrong field count")
            rows.append(
                TrialMetrics(
                    alpha=_parse_float(row[0], trials_path, lineno, "alpha"),
                    trial=_parse_int(row[1], trials_path, lineno, "trial"),
                    ecr=_parse_float(row[2], trials_path, lineno, "ecr"),
                    apss=_parse_float(row[3], trials_path, lineno, "apss"),
                    type1_rate=_parse_float(row[4], trials_path, lineno, "type1_rate"),
                    miscoverage_normal=_parse_float(
                        row[5], trials_path, lineno, "miscoverage_normal"
                    ),
                    n_eval=_parse_int(row[6], trials_path, lineno, "n_eval"),
                )
            )
    summaries = []
    with _open_read(aggregate_path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != AGGREGATE_COLUMNS:
            raise ParseError(f"{aggregate_path} line 1: unexpected aggregate header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(AGGREGATE_COLUMNS):
                raise ParseError(f"{aggregate_path} line {lineno}: wrong field count")
            summaries.append(
                AlphaSummary(
                    alpha=_parse_float(row[0], aggregate_path, lineno, "alpha"),
                    ecr_mean=_parse_float(row[1], aggregate_path, lineno, "ecr_mean"),
                    ecr_sd=_parse_float(row[2], aggregate_path, lineno, "ecr_sd"),
                    apss_mean=_parse_float(row[3], aggregate_path, lineno, "apss_mean"),
                    apss_sd=_parse_float(row[4], aggregate_path, lineno, "apss_sd"),
                )
            )
    n_trials = len({r.trial for r in rows})
    return SweepReport(
        rows=tuple(rows), summaries=tuple(summaries), seed=None, n_trials=n_trials
    )


def save_calibration(path: str, model: CalibrationModel, space: LabelSpace) -> None:
    """Persist sorted calibration scores plus the label partition as JSON."""
    payload = {
        "labels": list(space.labels),
        "normal_labels": list(space.normal_labels),
        "fault_labels": list(space.fault_labels),
        "n": model.n,
        "sorted_scores": list(model.sorted_scores),
    }
    with _open_write(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibration(path: str) -> tuple[CalibrationModel, LabelSpace]:
    """Read a calibration artifact back into its model and label space."""
    with _open_read(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from None
    for key in ("labels", "normal_labels", "fault_labels", "sorted_scores"):
        if key not in payload:
            raise ParseError(f"{path}: missing key {key!r}")
    space = validate_label_space(
        payload["labels"], payload["normal_labels"], payload["fault_labels"]
    )
    try:
        model = CalibrationModel(sorted_scores=tuple(payload["sorted_scores"]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad calibration scores: {exc}") from None
    if "n" in payload and payload["n"] != model.n:
        raise ParseError(f"{path}: stored n={payload['n']} but {model.n} scores")
    return model, space


def require_labeled(records: Sequence[ScoreRecord], path: str) -> None:
    """Raise MissingLabelError naming the first unlabeled row of ``path``."""
    for i, record in enumerate(records, start=1):
        if record.true_label is None:
            raise MissingLabelError(
                f"{path} data row {i}: sample {record.sample_id!r} has no true label"
            )


def report_paths(prefix: str) -> tuple[str, str]:
    """(trials, aggregate) file pair for an output prefix."""
    base = prefix[:-4] if prefix.endswith(".csv") else prefix
    return base + "_trials.csv", base + "_aggregate.csv"

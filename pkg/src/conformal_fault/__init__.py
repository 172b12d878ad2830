"""Calibrated fault detection from classifier scores via conformal prediction sets.

Turns any per-class score vector into an exact rank p-value per candidate
label, a prediction set with finite-sample coverage at a chosen risk level,
and a ternary Normal/Faulty/Ambiguous decision; ships a random-split
evaluation harness, a synthetic data generator, and a minimal softmax
baseline so the whole pipeline runs without an external model.
"""

from . import errors
from .conformal import (
    CalibrationModel,
    PredictionOutcome,
    calibrate,
    nonconformity,
    p_value,
    p_values_all,
    prediction_set,
)
from .decision import Decision, classify
from .fileio import (
    load_calibration,
    load_outcomes,
    load_report,
    load_scores,
    save_calibration,
    save_outcomes,
    save_report,
    save_scores,
)
from .labels import LabelSpace, ScoreRecord, validate_label_space
from .metrics import (
    AlphaSummary,
    SweepReport,
    TrialMetrics,
    apss,
    ecr,
    exact_rejection_rate,
    miscoverage_on_normal,
    outcome_for_record,
    run_trial,
    split_half,
    sweep,
    trial_seed,
    type1_rate,
)
from .synth import (
    BaselineModel,
    SynthConfig,
    accuracy,
    baseline_predict,
    baseline_train,
    loss_and_gradient,
    softmax,
    synth_generate,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaSummary",
    "BaselineModel",
    "CalibrationModel",
    "Decision",
    "LabelSpace",
    "PredictionOutcome",
    "ScoreRecord",
    "SweepReport",
    "SynthConfig",
    "TrialMetrics",
    "accuracy",
    "apss",
    "baseline_predict",
    "baseline_train",
    "calibrate",
    "classify",
    "ecr",
    "errors",
    "exact_rejection_rate",
    "load_calibration",
    "load_outcomes",
    "load_report",
    "load_scores",
    "loss_and_gradient",
    "miscoverage_on_normal",
    "nonconformity",
    "outcome_for_record",
    "p_value",
    "p_values_all",
    "prediction_set",
    "run_trial",
    "save_calibration",
    "save_outcomes",
    "save_report",
    "save_scores",
    "softmax",
    "split_half",
    "sweep",
    "synth_generate",
    "trial_seed",
    "type1_rate",
    "validate_label_space",
]

"""Gaussian-blob data generation and a linear softmax baseline.

The generator places one isotropic Gaussian per class on its own unit
direction; the baseline is multinomial logistic regression fit by full-batch
gradient descent from zero initialization. Deliberately weak but correct:
its job is to produce honest per-class probability scores that exercise the
conformal layer end to end, not to win benchmarks. Zero init plus full-batch
updates make training deterministic without any seed plumbing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    InvalidParameterError,
    TooFewFeaturesError,
    UnknownLabelError,
)
from .labels import LabelSpace, ScoreRecord


@dataclass(frozen=True)
class SynthConfig:
    """Parameters for the per-class Gaussian generator.

    Class ``c`` is an isotropic Gaussian with standard deviation
    ``noise_scale`` centered at ``class_separation * u_c``: axis-aligned unit
    directions for the first ``min(n_classes, n_features)`` classes, then
    seeded random unit directions for any surplus classes. ``class_separation``
    may be zero (all classes identically distributed, the hardest case for
    set efficiency).
    """

    label_space: LabelSpace
    n_per_class: int = 150
    n_features: int = 2
    class_separation: float = 3.0
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise TooFewFeaturesError(
                f"n_features must be >= 1, got {self.n_features}"
            )
        if self.n_per_class < 1:
            raise InvalidParameterError(
                f"n_per_class must be >= 1, got {self.n_per_class}"
            )
        if self.class_separation < 0.0:
            raise InvalidParameterError(
                f"class_separation must be >= 0, got {self.class_separation}"
            )
        if self.noise_scale <= 0.0:
            raise InvalidParameterError(
                f"noise_scale must be > 0, got {self.noise_scale}"
            )


def class_directions(n_classes: int, n_features: int, rng: np.random.Generator) -> np.ndarray:
    """Unit direction per class: axis-aligned first, seeded random after."""
    directions = np.zeros((n_classes, n_features))
    n_axis = min(n_classes, n_features)
    for i in range(n_axis):
        directions[i, i] = 1.0
    for i in range(n_axis, n_classes):
        v = rng.standard_normal(n_features)
        norm = np.linalg.norm(v)
        while norm < 1e-12:
            v = rng.standard_normal(n_features)
            norm = np.linalg.norm(v)
        directions[i] = v / norm
    return directions


def synth_generate(config: SynthConfig) -> tuple[np.ndarray, list[str]]:
    """Draw the labeled feature table described by ``config``.

    Returns
    -------
    features : ndarray of shape (n_classes * n_per_class, n_features)
        Rows grouped by class in label order.
    labels : list of str
        True class name per row.
    """
    rng = np.random.default_rng(config.seed)
    space = config.label_space
    n_classes = len(space.labels)
    directions = class_directions(n_classes, config.n_features, rng)
    blocks = []
    labels: list[str] = []
    for c, name in enumerate(space.labels):
        center = config.class_separation * directions[c]
        noise = rng.standard_normal((config.n_per_class, config.n_features))
        blocks.append(center + config.noise_scale * noise)
        labels.extend([name] * config.n_per_class)
    return np.vstack(blocks), labels


@dataclass(frozen=True)
class TrainingInfo:
    """What happened during the fit; ``loss_monotone`` is reported, not enforced."""

    iterations: int
    final_loss: float
    loss_monotone: bool


@dataclass(frozen=True)
class BaselineModel:
    """Multinomial logistic regression weights, one row per class.

    ``weights`` has shape (n_classes, n_features + 1); the last column is the
    bias. Arrays are frozen read-only on construction.
    """

    weights: np.ndarray
    labels: tuple[str, ...]
    info: TrainingInfo

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != len(self.labels):
            raise DimensionMismatchError(
                f"weights shape {w.shape} does not match {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("baseline weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; rows sum to 1 to machine precision."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _with_bias(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"features must be 2-D, got shape {x.shape}")
    return np.hstack([x, np.ones((x.shape[0], 1))])


def loss_and_gradient(
    weights: np.ndarray, features: np.ndarray, label_indices: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the weight matrix.

    ``weights`` is (n_classes, n_features + 1) including the bias column;
    the gradient has the same shape. Kept public so the analytic gradient
    can be checked against finite differences of the loss alone.
    """
    x1 = _with_bias(features)
    y = np.asarray(label_indices, dtype=np.intp)
    m = x1.shape[0]
    probs = softmax(x1 @ np.asarray(weights, dtype=np.float64).T)
    loss = float(-np.mean(np.log(probs[np.arange(m), y])))
    resid = probs.copy()
    resid[np.arange(m), y] -= 1.0
    grad = resid.T @ x1 / m
    return loss, grad


def encode_labels(labels: Sequence[str], label_order: Sequence[str]) -> np.ndarray:
    """Map class names to integer indices in ``label_order``."""
    index = {lab: i for i, lab in enumerate(label_order)}
    out = np.empty(len(labels), dtype=np.intp)
    for i, lab in enumerate(labels):
        if lab not in index:
            raise UnknownLabelError(f"label {lab!r} not in {list(label_order)}")
        out[i] = index[lab]
    return out


def baseline_train(
    features: np.ndarray,
    labels: Sequence[str],
    iterations: int = 200,
    learning_rate: float = 0.5,
    seed: int = 0,
    label_order: Sequence[str] | None = None,
) -> BaselineModel:
    """Fit the softmax baseline by full-batch gradient descent.

    Weights start at zero, so training is deterministic and ``seed`` is
    accepted only for interface stability. The loss is recorded each
    iteration; whether it decreased monotonically is reported in
    ``model.info`` rather than asserted, since too large a learning rate can
    legitimately overshoot.

    Raises
    ------
    DegenerateDataError
        If fewer than two classes are present in ``labels``.
    """
    del seed  # zero init: nothing stochastic to seed
    if iterations < 1:
        raise InvalidParameterError(f"iterations must be >= 1, got {iterations}")
    x1 = _with_bias(features)
    if label_order is None:
        label_order = list(dict.fromkeys(labels))
    if len(set(labels)) < 2:
        raise DegenerateDataError("training data contains fewer than 2 classes")
    y = encode_labels(labels, label_order)
    n_classes = len(label_order)
    weights = np.zeros((n_classes, x1.shape[1]))
    losses = []
    for _ in range(iterations):
        loss, grad = loss_and_gradient(weights, features, y)
        losses.append(loss)
        weights = weights - learning_rate * grad
    final_loss, _ = loss_and_gradient(weights, features, y)
    losses.append(final_loss)
    monotone = all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    return BaselineModel(
        weights=weights,
        labels=tuple(label_order),
        info=TrainingInfo(
            iterations=iterations, final_loss=final_loss, loss_monotone=monotone
        ),
    )


def baseline_predict(
    model: BaselineModel,
    features: np.ndarray,
    sample_ids: Sequence[str] | None = None,
    true_labels: Sequence[str | None] | None = None,
) -> list[ScoreRecord]:
    """Softmax probabilities for each row, packaged as score records.

    Scores sum to 1 per row and stay strictly inside (0, 1) except at float
    saturation for extreme logits; ids default to ``r000000``, ``r000001``, ...
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"features shape {x.shape} does not match model with "
            f"{model.n_features} features"
        )
    probs = softmax(_with_bias(x) @ model.weights.T)
    n = x.shape[0]
    if sample_ids is None:
        sample_ids = [f"r{i:06d}" for i in range(n)]
    if true_labels is None:
        true_labels = [None] * n
    if len(sample_ids) != n or len(true_labels) != n:
        raise DimensionMismatchError("sample_ids/true_labels length mismatch")
    return [
        ScoreRecord(sample_id=sid, true_label=tl, scores=tuple(row))
        for sid, tl, row in zip(sample_ids, true_labels, probs)
    ]


def accuracy(model: BaselineModel, features: np.ndarray, labels: Sequence[str]) -> float:
    """Top-1 accuracy of the baseline on a labeled feature table."""
    probs = softmax(_with_bias(np.asarray(features, dtype=np.float64)) @ model.weights.T)
    predicted = np.argmax(probs, axis=1)
    truth = encode_labels(labels, model.labels)
    return float(np.mean(predicted == truth))

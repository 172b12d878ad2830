"""Label partitions and per-sample score vectors.

A ``LabelSpace`` fixes the canonical column order used everywhere: score
vectors, file columns, and prediction sets all follow it. The normal and
fault subsets partition the full label list, which is what turns a
prediction set into a normal/fault decision downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatchError,
    DuplicateLabelError,
    EmptyPartitionError,
    IncompletePartitionError,
    InvalidLabelError,
    NonFiniteScoreError,
    OverlapError,
    UnknownLabelError,
)

# Reserved by the CSV formats (column separator, set-member separator).
_FORBIDDEN_IN_LABELS = (",", ";", "\n", "\r")


def _check_label_names(labels: Sequence[str]) -> None:
    seen = set()
    for lab in labels:
        if not isinstance(lab, str) or not lab:
            raise InvalidLabelError(f"label must be a non-empty string, got {lab!r}")
        if any(ch in lab for ch in _FORBIDDEN_IN_LABELS):
            raise InvalidLabelError(
                f"label {lab!r} contains a character reserved by the file formats"
            )
        if lab in seen:
            raise DuplicateLabelError(f"duplicate label {lab!r}")
        seen.add(lab)


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class labels split into disjoint normal and fault subsets.

    ``labels`` is the canonical column order; ``normal_labels`` and
    ``fault_labels`` are disjoint, non-empty, and together cover ``labels``.
    Instances are immutable and safe to share across threads.
    """

    labels: tuple[str, ...]
    normal_labels: tuple[str, ...]
    fault_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "normal_labels", tuple(self.normal_labels))
        object.__setattr__(self, "fault_labels", tuple(self.fault_labels))
        if not self.labels:
            raise EmptyPartitionError("label list is empty")
        _check_label_names(self.labels)
        _check_label_names(self.normal_labels)
        _check_label_names(self.fault_labels)
        if not self.normal_labels:
            raise EmptyPartitionError("normal label subset is empty")
        if not self.fault_labels:
            raise EmptyPartitionError("fault label subset is empty")
        label_set = set(self.labels)
        for lab in self.normal_labels + self.fault_labels:
            if lab not in label_set:
                raise UnknownLabelError(f"subset member {lab!r} is not in the label list")
        normal_set = set(self.normal_labels)
        fault_set = set(self.fault_labels)
        overlap = normal_set & fault_set
        if overlap:
            raise OverlapError(f"labels in both subsets: {sorted(overlap)}")
        uncovered = label_set - normal_set - fault_set
        if uncovered:
            raise IncompletePartitionError(
                f"labels in neither subset: {sorted(uncovered)}"
            )
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def position(self, label: str) -> int:
        """Column index of ``label``; raises UnknownLabelError otherwise."""
        try:
            return self._index[label]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownLabelError(f"unknown label {label!r}") from None

    def is_normal(self, label: str) -> bool:
        self.position(label)
        return label in self.normal_labels

    def check_record(self, record: "ScoreRecord") -> None:
        """Raise unless ``record`` fits this space (score arity, known label)."""
        if len(record.scores) != len(self.labels):
            raise DimensionMismatchError(
                f"sample {record.sample_id!r}: {len(record.scores)} scores "
                f"for {len(self.labels)} labels"
            )
        if record.true_label is not None and record.true_label not in self._index:  # type: ignore[attr-defined]
            raise UnknownLabelError(
                f"sample {record.sample_id!r}: unknown true label {record.true_label!r}"
            )


def validate_label_space(
    labels: Iterable[str],
    normal_labels: Iterable[str],
    fault_labels: Iterable[str] | None = None,
) -> LabelSpace:
    """Build a validated LabelSpace from a raw partition.

    Parameters
    ----------
    labels : iterable of str
        All class names, in canonical column order.
    normal_labels : iterable of str
        Labels to treat as healthy states.
    fault_labels : iterable of str, optional
        Labels to treat as fault states. When omitted, defaults to every
        label not in ``normal_labels`` (order preserved).

    Raises
    ------
    EmptyPartitionError, OverlapError, UnknownLabelError,
    IncompletePartitionError, DuplicateLabelError, InvalidLabelError
    """
    labels = tuple(labels)
    normal = tuple(normal_labels)
    if fault_labels is None:
        fault = tuple(lab for lab in labels if lab not in set(normal))
    else:
        fault = tuple(fault_labels)
    return LabelSpace(labels=labels, normal_labels=normal, fault_labels=fault)


@dataclass(frozen=True)
class ScoreRecord:
    """One sample: id, optional true label, and one score per label column.

    Scores are finite reals in label-space order (softmax probabilities for
    the built-in baseline, but any per-class score works). ``true_label`` is
    None for unlabeled samples; operations that need labels reject those.
    """

    sample_id: str
    true_label: str | None
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        for s in self.scores:
            if not math.isfinite(s):
                raise NonFiniteScoreError(
                    f"sample {self.sample_id!r}: non-finite score {s!r}"
                )

"""Ternary normal/fault decision from a prediction set.

The rules fire in order: a set that touches the normal labels and stays
inside them is Normal; any set containing a fault label is Faulty;
everything else (with a partitioned label space: exactly the empty set)
is Ambiguous.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable

from .errors import UnknownLabelError
from .labels import LabelSpace


class Decision(Enum):
    NORMAL = "Normal"
    FAULTY = "Faulty"
    AMBIGUOUS = "Ambiguous"


def classify(set_members: Iterable[str], space: LabelSpace) -> Decision:
    """Apply the ordered decision rules to a prediction set.

    Rule order matters: an unambiguous healthy set wins, then any fault
    evidence raises the alarm, and only sets touching neither subset
    (the empty set, given a full partition) fall through to Ambiguous.
    """
    members = frozenset(set_members)
    unknown = members - set(space.labels)
    if unknown:
        raise UnknownLabelError(f"set members not in label space: {sorted(unknown)}")
    normal = frozenset(space.normal_labels)
    fault = frozenset(space.fault_labels)
    if members & normal and members <= normal:
        return Decision.NORMAL
    if members & fault:
        return Decision.FAULTY
    return Decision.AMBIGUOUS

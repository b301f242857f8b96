"""Three-valued truth values, their truth tables, and decision classes.

Values are ordered ``F < U < T`` so that conjunction is ``min`` and
disjunction is ``max``; the numeric codes are reused by the dense region
code in :mod:`sepl.semantics`.
"""

from __future__ import annotations

import enum
from typing import NamedTuple


class TriValue(enum.IntEnum):
    F = 0
    U = 1
    T = 2

    def __str__(self):
        return _RENDER[self]

    @classmethod
    def parse(cls, text: str) -> "TriValue":
        try:
            return _PARSE[text.strip()]
        except KeyError:
            raise ValueError(f"not a truth value: {text!r}") from None


T, U, F = TriValue.T, TriValue.U, TriValue.F

_RENDER = {T: "T", F: "F", U: "?"}
_PARSE = {"T": T, "F": F, "?": U, "U": U}

# Rows are the left operand, columns the right, both in (T, U, F) order,
# laid out exactly as the printed tables.
_ORDER = (T, U, F)


def _table(rows):
    return {(a, b): rows[i][j] for i, a in enumerate(_ORDER) for j, b in enumerate(_ORDER)}


AND_TABLE = _table([
    (T, U, F),
    (U, U, F),
    (F, F, F),
])
OR_TABLE = _table([
    (T, T, T),
    (T, U, U),
    (T, U, F),
])
OMINUS_TABLE = _table([
    (U, U, T),
    (U, U, U),
    (F, F, F),
])
NOT_TABLE = {T: F, U: U, F: T}
DET_TABLE = {T: T, U: F, F: F}
DET_DUAL_TABLE = {T: T, U: T, F: F}


def tv_not(a: TriValue) -> TriValue:
    return NOT_TABLE[a]


def tv_det(a: TriValue) -> TriValue:
    return DET_TABLE[a]


def tv_det_dual(a: TriValue) -> TriValue:
    return DET_DUAL_TABLE[a]


def tv_and(a: TriValue, b: TriValue) -> TriValue:
    return AND_TABLE[a, b]


def tv_or(a: TriValue, b: TriValue) -> TriValue:
    return OR_TABLE[a, b]


def tv_minus(a: TriValue, b: TriValue) -> TriValue:
    """``a - b`` is shorthand for ``a and not b``."""
    return AND_TABLE[a, NOT_TABLE[b]]


def tv_ominus(a: TriValue, b: TriValue) -> TriValue:
    return OMINUS_TABLE[a, b]


_UNARY = {"not": tv_not, "det": tv_det, "det_dual": tv_det_dual}
_BINARY = {"and": tv_and, "or": tv_or, "minus": tv_minus, "ominus": tv_ominus}


def tv_unary(op: str, a: TriValue) -> TriValue:
    try:
        fn = _UNARY[op]
    except KeyError:
        raise ValueError(f"unknown unary operator {op!r}") from None
    return fn(a)


def tv_binary(op: str, a: TriValue, b: TriValue) -> TriValue:
    try:
        fn = _BINARY[op]
    except KeyError:
        raise ValueError(f"unknown binary operator {op!r}") from None
    return fn(a, b)


class DecisionPair(NamedTuple):
    accept: TriValue
    deny: TriValue

    def __str__(self):
        return f"({self.accept},{self.deny})"

    def swap(self) -> "DecisionPair":
        return DecisionPair(self.deny, self.accept)


class Decision(enum.Enum):
    PERMIT = "PERMIT"
    DENY = "DENY"
    NOT_APPLICABLE = "NOT_APPLICABLE"
    INDETERMINATE_P = "INDETERMINATE_P"
    INDETERMINATE_D = "INDETERMINATE_D"
    INDETERMINATE_PD = "INDETERMINATE_PD"
    CONFLICT = "CONFLICT"

    def __str__(self):
        return self.value

    @property
    def is_indeterminate(self) -> bool:
        return self in (Decision.INDETERMINATE_P, Decision.INDETERMINATE_D,
                        Decision.INDETERMINATE_PD)

    @property
    def is_definite(self) -> bool:
        return self in (Decision.PERMIT, Decision.DENY)


_CLASSES = {
    (F, F): Decision.NOT_APPLICABLE,
    (T, F): Decision.PERMIT,
    (T, U): Decision.PERMIT,
    (F, T): Decision.DENY,
    (U, T): Decision.DENY,
    (U, F): Decision.INDETERMINATE_P,
    (F, U): Decision.INDETERMINATE_D,
    (U, U): Decision.INDETERMINATE_PD,
    # Not produced by well-formed policies; kept total on purpose.
    (T, T): Decision.CONFLICT,
}


def classify(pair) -> Decision:
    return _CLASSES[TriValue(pair[0]), TriValue(pair[1])]


# The eight encodings of the six XACML decision classes (Permit and Deny
# each have two), in a fixed order used by conformance tables.
XACML_ENCODINGS = (
    DecisionPair(T, F), DecisionPair(T, U),
    DecisionPair(F, T), DecisionPair(U, T),
    DecisionPair(F, F), DecisionPair(U, F),
    DecisionPair(F, U), DecisionPair(U, U),
)

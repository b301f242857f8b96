"""Per-request (relative) and whole-domain (absolute) policy semantics.

The relative evaluator walks the term once per request using the kernel's
truth tables.  The absolute evaluator computes both three-valued regions
over every point of the schema at once, with values encoded as
``F=0, U=1, T=2`` so that conjunction and disjunction are elementwise
``min``/``max``.  The two are kept coherent on fully-bound requests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernel
from .errors import SchemaError, SeplError
from .kernel import DecisionPair, F, T, TriValue, classify
from .policy import (Binary, Choice, Det, Dov, Empty, Minus, Neg, Ominus, One, Par,
                     Policy, Pov, Rule, Scope, Seq, Var, Zero, has_scope, scope_expand)
from .schema import AttributeSchema, Request, guard_eval, guard_region


class UnboundVariable(SeplError):
    pass


# --------------------------------------------------------------------------
# relative semantics


def combine_pair(op: str, p1: DecisionPair, p2: DecisionPair | None = None) -> DecisionPair:
    """One step of the per-request semantics for operator ``op``."""
    a1, d1 = p1
    if op == "neg":
        return DecisionPair(d1, a1)
    if op == "det":
        return DecisionPair(kernel.tv_det(a1), kernel.tv_det(d1))
    if p2 is None:
        raise TypeError(f"operator {op!r} is binary")
    a2, d2 = p2
    or_, minus = kernel.tv_or, kernel.tv_minus
    if op == "seq":
        return DecisionPair(or_(a1, minus(a2, d1)), or_(d1, minus(d2, a1)))
    if op == "pov":
        return DecisionPair(or_(a1, a2), or_(minus(d1, a2), minus(d2, a1)))
    if op == "dov":
        return DecisionPair(or_(minus(a1, d2), minus(a2, d1)), or_(d1, d2))
    if op == "par":
        return DecisionPair(kernel.tv_and(a1, a2), kernel.tv_and(d1, d2))
    if op == "choice":
        a, d = or_(a1, a2), or_(d1, d2)
        return DecisionPair(minus(a, d), minus(d, a))
    if op == "minus":
        other = or_(a2, d2)
        return DecisionPair(minus(a1, other), minus(d1, other))
    if op == "ominus":
        other = or_(a2, d2)
        return DecisionPair(kernel.tv_ominus(a1, other), kernel.tv_ominus(d1, other))
    raise ValueError(f"unknown operator {op!r}")


OP_TAGS = {Seq: "seq", Pov: "pov", Dov: "dov", Par: "par",
           Choice: "choice", Minus: "minus", Ominus: "ominus"}

_EPS = DecisionPair(F, F)
_ZERO = DecisionPair(F, T)
_ONE = DecisionPair(T, F)


@lru_cache(maxsize=1024)
def _expanded(p: Policy, schema: AttributeSchema) -> Policy:
    return scope_expand(p, schema) if has_scope(p) else p


def eval_rel(p: Policy, r: Request, schema: AttributeSchema, env=None) -> DecisionPair:
    """Decision pair of ``p`` for request ``r``.

    ``env`` may bind policy variables directly to decision pairs.
    """
    return _rel(_expanded(p, schema), r, schema, env)


def eval_term(p: Policy, env) -> DecisionPair:
    """Evaluate a rule-free term whose variables are bound to decision pairs."""
    return _rel(p, None, None, env)


def _rel(p, r, schema, env=None):
    if isinstance(p, Binary):
        return combine_pair(OP_TAGS[type(p)], _rel(p.left, r, schema, env),
                            _rel(p.right, r, schema, env))
    if isinstance(p, Rule):
        m1 = guard_eval(p.accept, r, schema)
        m2 = guard_eval(p.deny, r, schema)
        return DecisionPair(kernel.tv_minus(m1, m2), kernel.tv_minus(m2, m1))
    if isinstance(p, Neg):
        return combine_pair("neg", _rel(p.body, r, schema, env))
    if isinstance(p, Det):
        return combine_pair("det", _rel(p.body, r, schema, env))
    if isinstance(p, Empty):
        return _EPS
    if isinstance(p, Zero):
        return _ZERO
    if isinstance(p, One):
        return _ONE
    if isinstance(p, Var):
        if env is not None and p.name in env:
            return DecisionPair(*env[p.name])
        raise UnboundVariable(f"policy variable {p.name} has no value")
    raise TypeError(f"not a policy: {p!r}")


def decide(p: Policy, r: Request, schema: AttributeSchema) -> kernel.Decision:
    return classify(eval_rel(p, r, schema))


# --------------------------------------------------------------------------
# absolute semantics

_OMINUS = np.array([[int(kernel.tv_ominus(TriValue(a), TriValue(b))) for b in range(3)]
                    for a in range(3)], dtype=np.int8)


class TriRegion:
    """A total map from schema points to truth values."""

    __slots__ = ("schema", "values")

    def __init__(self, schema: AttributeSchema, values: np.ndarray):
        self.schema = schema
        self.values = values

    def __len__(self):
        return len(self.values)

    def __getitem__(self, point) -> TriValue:
        return TriValue(int(self.values[self.schema.point_index(point)]))

    def __iter__(self):
        for v in self.values:
            yield TriValue(int(v))

    def __eq__(self, other):
        return (isinstance(other, TriRegion) and other.schema == self.schema
                and np.array_equal(other.values, self.values))

    def mask(self, value: TriValue = T) -> np.ndarray:
        return self.values == int(value)

    def count(self, value: TriValue = T) -> int:
        return int(np.count_nonzero(self.values == int(value)))

    def __repr__(self):
        return "TriRegion(" + "".join(str(v) for v in self) + ")"


@dataclass(frozen=True, eq=False)
class PolicyMeaning:
    accept: TriRegion
    deny: TriRegion

    @property
    def schema(self):
        return self.accept.schema

    def __eq__(self, other):
        return (isinstance(other, PolicyMeaning) and self.accept == other.accept
                and self.deny == other.deny)

    def pair_at(self, index: int) -> DecisionPair:
        return DecisionPair(TriValue(int(self.accept.values[index])),
                            TriValue(int(self.deny.values[index])))


def _crisp(mask: np.ndarray) -> np.ndarray:
    return mask.astype(np.int8) * 2


def _minus(a, b):
    return np.minimum(a, 2 - b)


def eval_abs(p: Policy, schema: AttributeSchema) -> PolicyMeaning:
    """Both regions of ``p`` over the whole (capped) product domain."""
    schema.require_cap()
    a, d = _abs(p, schema)
    return PolicyMeaning(TriRegion(schema, a), TriRegion(schema, d))


def _abs(p, schema):
    n = schema.size
    if isinstance(p, Empty):
        return np.zeros(n, np.int8), np.zeros(n, np.int8)
    if isinstance(p, Zero):
        return np.zeros(n, np.int8), np.full(n, 2, np.int8)
    if isinstance(p, One):
        return np.full(n, 2, np.int8), np.zeros(n, np.int8)
    if isinstance(p, Rule):
        g1, g2 = guard_region(p.accept, schema), guard_region(p.deny, schema)
        return _crisp(g1 & ~g2), _crisp(g2 & ~g1)
    if isinstance(p, Neg):
        a, d = _abs(p.body, schema)
        return d, a
    if isinstance(p, Det):
        a, d = _abs(p.body, schema)
        return np.where(a == 1, 0, a).astype(np.int8), np.where(d == 1, 0, d).astype(np.int8)
    if isinstance(p, Scope):
        a, d = _abs(p.body, schema)
        m = guard_region(p.guard, schema)
        return np.where(m, a, 0).astype(np.int8), np.where(m, d, 0).astype(np.int8)
    if isinstance(p, Var):
        raise UnboundVariable(f"policy variable {p.name} has no value")
    a1, d1 = _abs(p.left, schema)
    a2, d2 = _abs(p.right, schema)
    if isinstance(p, Seq):
        return np.maximum(a1, _minus(a2, d1)), np.maximum(d1, _minus(d2, a1))
    if isinstance(p, Pov):
        return np.maximum(a1, a2), np.maximum(_minus(d1, a2), _minus(d2, a1))
    if isinstance(p, Dov):
        return np.maximum(_minus(a1, d2), _minus(a2, d1)), np.maximum(d1, d2)
    if isinstance(p, Par):
        return np.minimum(a1, a2), np.minimum(d1, d2)
    if isinstance(p, Choice):
        a, d = np.maximum(a1, a2), np.maximum(d1, d2)
        return _minus(a, d), _minus(d, a)
    if isinstance(p, Minus):
        other = np.maximum(a2, d2)
        return _minus(a1, other), _minus(d1, other)
    if isinstance(p, Ominus):
        other = np.maximum(a2, d2)
        return _OMINUS[a1, other], _OMINUS[d1, other]
    raise TypeError(f"not a policy: {p!r}")


def lookup_meaning(m: PolicyMeaning, x: Request) -> DecisionPair:
    point = x.point(m.schema)
    try:
        idx = m.schema.point_index(point)
    except KeyError as exc:
        raise SchemaError(f"value {exc.args[0]!r} is outside the schema") from None
    return m.pair_at(idx)


def decisions(m: PolicyMeaning) -> list:
    """The decision class at every point, lexicographic order."""
    return [classify(m.pair_at(i)) for i in range(len(m.accept))]

"""Whole-domain analyses built on the absolute semantics.

Comparison and distances look only at definite (``T``) regions; unknown
points are reported separately by the completeness analysis.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NonDisjointTarget, SchemaError
from .generate import PolicyShape, random_policy
from .kernel import DecisionPair, F, T, U
from .policy import (EPS, ONE, ZERO, Compl, Diff, Inter, Leaf, Policy, SetExpr, Union,
                     parse_policy, print_policy, s2p_pair, substitute, variables)
from .schema import AttributeSchema
from .semantics import PolicyMeaning, eval_abs, eval_rel

DEFAULT_SAMPLES = 5


class Relation(enum.Enum):
    EQUIVALENT = "EQUIVALENT"
    LEFT_LOWER = "LEFT_LOWER"
    RIGHT_LOWER = "RIGHT_LOWER"
    INCOMPARABLE = "INCOMPARABLE"

    def __str__(self):
        return self.value


@dataclass
class RegionSummary:
    count: int
    samples: list = field(default_factory=list)

    @classmethod
    def of(cls, mask: np.ndarray, schema: AttributeSchema, limit=DEFAULT_SAMPLES):
        idx = np.flatnonzero(mask)
        return cls(int(idx.size), [schema.point_at(int(i)) for i in idx[:limit]])

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass
class CompareReport:
    relation: Relation
    applicability_disjoint: bool
    # failed inclusions: "accept" / "deny" for P<=Q and "accept'" / "deny'" for Q<=P
    witnesses: dict = field(default_factory=dict)
    unknown_left: int = 0
    unknown_right: int = 0


def _definite(m: PolicyMeaning):
    return m.accept.mask(T), m.deny.mask(T)


def _same_schema(m1: PolicyMeaning, m2: PolicyMeaning):
    if m1.schema != m2.schema:
        raise SchemaError("policies were evaluated over different schemas")


def compare(p: Policy, q: Policy, schema: AttributeSchema, limit=DEFAULT_SAMPLES) -> CompareReport:
    mp, mq = eval_abs(p, schema), eval_abs(q, schema)
    return compare_meanings(mp, mq, limit)


def compare_meanings(mp: PolicyMeaning, mq: PolicyMeaning, limit=DEFAULT_SAMPLES) -> CompareReport:
    _same_schema(mp, mq)
    schema = mp.schema
    ap, dp = _definite(mp)
    aq, dq = _definite(mq)
    witnesses = {}
    for name, lhs, rhs in (("accept", ap, aq), ("deny", dp, dq),
                           ("accept'", aq, ap), ("deny'", dq, dp)):
        extra = lhs & ~rhs
        if extra.any():
            witnesses[name] = RegionSummary.of(extra, schema, limit).samples
    left_lower = "accept" not in witnesses and "deny" not in witnesses
    right_lower = "accept'" not in witnesses and "deny'" not in witnesses
    if left_lower and right_lower:
        rel = Relation.EQUIVALENT
    elif left_lower:
        rel = Relation.LEFT_LOWER
    elif right_lower:
        rel = Relation.RIGHT_LOWER
    else:
        rel = Relation.INCOMPARABLE
    disjoint = not ((ap | dp) & (aq | dq)).any()
    unknown = lambda m: int(np.count_nonzero((m.accept.values == U) | (m.deny.values == U)))
    return CompareReport(rel, disjoint, witnesses, unknown(mp), unknown(mq))


@dataclass
class Overlap:
    left: int
    right: int
    overlap: RegionSummary      # both applicable
    conflicting: RegionSummary  # one accepts where the other denies


@dataclass
class AnalysisReport:
    not_applicable: RegionSummary | None = None
    indeterminate: RegionSummary | None = None
    conflict: RegionSummary | None = None
    overlaps: list = field(default_factory=list)
    domain_size: int = 0

    @property
    def complete(self) -> bool | None:
        if self.not_applicable is None:
            return None
        return self.not_applicable.empty and self.indeterminate.empty

    @property
    def conflict_free(self) -> bool:
        internal = self.conflict is None or self.conflict.empty
        return internal and all(o.conflicting.empty for o in self.overlaps)


def incompleteness(p: Policy, schema: AttributeSchema, limit=DEFAULT_SAMPLES) -> AnalysisReport:
    return meaning_report(eval_abs(p, schema), limit)


def meaning_report(m: PolicyMeaning, limit=DEFAULT_SAMPLES) -> AnalysisReport:
    schema = m.schema
    a, d = m.accept.values, m.deny.values
    na = (a == F) & (d == F)
    ind = (a == U) | (d == U)
    tt = (a == T) & (d == T)
    return AnalysisReport(RegionSummary.of(na, schema, limit), RegionSummary.of(ind, schema, limit),
                          RegionSummary.of(tt, schema, limit), [], schema.size)


def conflict_report(policies: Sequence[Policy], schema: AttributeSchema,
                    limit=DEFAULT_SAMPLES) -> AnalysisReport:
    meanings = [eval_abs(p, schema) for p in policies]
    internal = np.zeros(schema.size, dtype=bool)
    for m in meanings:
        internal |= m.accept.mask(T) & m.deny.mask(T)
    overlaps = []
    for i, j in itertools.combinations(range(len(meanings)), 2):
        ai, di = _definite(meanings[i])
        aj, dj = _definite(meanings[j])
        both = (ai | di) & (aj | dj)
        clash = (ai & dj) | (di & aj)
        if both.any():
            overlaps.append(Overlap(i, j, RegionSummary.of(both, schema, limit),
                                    RegionSummary.of(clash, schema, limit)))
    return AnalysisReport(conflict=RegionSummary.of(internal, schema, limit),
                          overlaps=overlaps, domain_size=schema.size)


def distance(p: Policy, q: Policy, schema: AttributeSchema, metric: str = "hamming") -> Fraction:
    return distance_meanings(eval_abs(p, schema), eval_abs(q, schema), metric)


def distance_meanings(mp: PolicyMeaning, mq: PolicyMeaning, metric: str = "hamming") -> Fraction:
    _same_schema(mp, mq)
    ap, dp = _definite(mp)
    aq, dq = _definite(mq)
    count = lambda m: int(np.count_nonzero(m))
    if metric == "hamming":
        return Fraction(count(ap ^ aq) + count(dp ^ dq), 2 * mp.schema.size)
    if metric == "jaccard":
        union = count(ap | aq) + count(dp | dq)
        if union == 0:
            return Fraction(0)
        return 1 - Fraction(count(ap & aq) + count(dp & dq), union)
    raise ValueError(f"unknown metric {metric!r}")


# --------------------------------------------------------------------------
# realizing set expressions


def setexpr_values(e: SetExpr, mp: PolicyMeaning, mq: PolicyMeaning) -> np.ndarray:
    """Three-valued membership of every point in ``e`` (codes F=0, U=1, T=2)."""
    if isinstance(e, Leaf):
        return {"A": mp.accept, "D": mp.deny, "A'": mq.accept, "D'": mq.deny}[e.name].values
    if isinstance(e, Union):
        return np.maximum(setexpr_values(e.left, mp, mq), setexpr_values(e.right, mp, mq))
    if isinstance(e, Inter):
        return np.minimum(setexpr_values(e.left, mp, mq), setexpr_values(e.right, mp, mq))
    if isinstance(e, Diff):
        return np.minimum(setexpr_values(e.left, mp, mq), 2 - setexpr_values(e.right, mp, mq))
    if isinstance(e, Compl):
        return 2 - setexpr_values(e.body, mp, mq)
    raise TypeError(f"not a set expression: {e!r}")


def setexpr_region(e: SetExpr, mp: PolicyMeaning, mq: PolicyMeaning) -> np.ndarray:
    return setexpr_values(e, mp, mq) == int(T)


def semantics_to_policy(p: Policy, q: Policy, f: SetExpr, g: SetExpr,
                        schema: AttributeSchema) -> Policy:
    """Build a policy accepting exactly region ``f`` and denying exactly ``g``.

    Raises NonDisjointTarget when a point is definitely in one expression
    without being definitely outside the other.
    """
    mp, mq = eval_abs(p, schema), eval_abs(q, schema)
    fv, gv = setexpr_values(f, mp, mq), setexpr_values(g, mp, mq)
    bad = ((fv == 2) & (gv != 0)) | ((gv == 2) & (fv != 0))
    if bad.any():
        point = schema.point_at(int(np.flatnonzero(bad)[0]))
        raise NonDisjointTarget(f"accept and deny expressions overlap at {point}", point)
    return s2p_pair(p, q, f, g)


# --------------------------------------------------------------------------
# algebraic laws


@dataclass(frozen=True)
class Law:
    id: str
    lhs: str
    rhs: str
    expected: str  # "pass" | "counterexample"
    note: str = ""


LAWS = (
    Law("prop1", "P1 dov P2", "~(~P1 pov ~P2)", "pass"),
    Law("1", "P1 + P2", "P2 + P1", "pass"),
    Law("2", "P1 + (P2 + P3)", "(P1 + P2) + P3", "pass"),
    Law("3", "P1 && P2", "P2 && P1", "pass"),
    Law("4", "P1 && (P2 && P3)", "(P1 && P2) && P3", "pass"),
    Law("5", "(P1 + P2) && P3", "P1 && P3 + P2 && P3", "counterexample",
        "fails at P1=1, P2=0, P3=1"),
    Law("6", "~1", "0", "pass"),
    Law("7", "~0", "1", "pass"),
    Law("8", "~eps", "eps", "pass"),
    Law("9", "~~P1", "P1", "pass"),
    Law("10", "~(P1 && P2)", "~P1 && ~P2", "pass"),
    Law("11", "~(P1 + P2)", "~P1 + ~P2", "pass"),
    Law("12", "P1 + ~P2", "eps", "counterexample", "fails at P1=1, P2=0"),
    Law("13", "P1 + eps", "P1", "pass"),
    Law("14", "P1 && ~P2", "eps", "counterexample", "fails at P1=1, P2=0"),
)
LAWS_BY_ID = {law.id: law for law in LAWS}

CORNER_CASES = (ONE, ZERO, EPS)


@dataclass
class SamplingConfig:
    samples: int = 200
    seed: int = 0
    max_depth: int = 3
    shape: PolicyShape = field(default_factory=lambda: PolicyShape(scopes=True))


@dataclass
class LawVerdict:
    law_id: str
    status: str  # "pass" | "counterexample"
    checked: int = 0
    instantiation: dict | None = None
    point: tuple | None = None
    lhs_pair: DecisionPair | None = None
    rhs_pair: DecisionPair | None = None
    expected: str | None = None

    @property
    def as_expected(self) -> bool:
        return self.expected is None or self.status == self.expected

    def recheck(self, lhs: Policy, rhs: Policy, schema: AttributeSchema) -> bool:
        """Confirm the witness with the per-request evaluator."""
        if self.status != "counterexample":
            return True
        env = self.instantiation or {}
        r = schema.request_for(self.point)
        return (eval_rel(substitute(lhs, env), r, schema) == self.lhs_pair
                and eval_rel(substitute(rhs, env), r, schema) == self.rhs_pair
                and self.lhs_pair != self.rhs_pair)


def instantiations(names: Sequence[str], schema: AttributeSchema, config: SamplingConfig):
    """Constant corner cases first, then random policies of growing depth."""
    names = sorted(names)
    if not names:
        yield {}
        return
    emitted = 0
    for combo in itertools.product(CORNER_CASES, repeat=len(names)):
        if emitted >= config.samples:
            return
        yield dict(zip(names, combo))
        emitted += 1
    rng = random.Random(config.seed)
    while emitted < config.samples:
        depth = 1 + emitted % config.max_depth
        yield {n: random_policy(rng, schema, depth, config.shape) for n in names}
        emitted += 1


def check_law(law, schema: AttributeSchema, config: SamplingConfig | None = None) -> LawVerdict:
    """Test ``lhs`` against ``rhs`` pointwise over sampled instantiations.

    ``law`` is a catalog id, a :class:`Law`, or a ``(lhs, rhs)`` pair of
    pattern strings over metavariables ``P1``, ``P2``, ...
    """
    config = config or SamplingConfig()
    if isinstance(law, str):
        law = LAWS_BY_ID[law]
    if isinstance(law, tuple):
        law = Law("custom", law[0], law[1], None)
    lhs, rhs = parse_policy(law.lhs, schema), parse_policy(law.rhs, schema)
    names = variables(lhs) | variables(rhs)
    checked = 0
    for env in instantiations(names, schema, config):
        checked += 1
        ml = eval_abs(substitute(lhs, env), schema)
        mr = eval_abs(substitute(rhs, env), schema)
        diff = (ml.accept.values != mr.accept.values) | (ml.deny.values != mr.deny.values)
        if diff.any():
            i = int(np.flatnonzero(diff)[0])
            return LawVerdict(law.id, "counterexample", checked, env, schema.point_at(i),
                              ml.pair_at(i), mr.pair_at(i), law.expected)
    return LawVerdict(law.id, "pass", checked, expected=law.expected)


def check_catalog(schema: AttributeSchema, config: SamplingConfig | None = None) -> list:
    return [check_law(law, schema, config) for law in LAWS]


def describe_instantiation(env: dict) -> str:
    return ", ".join(f"{k}={print_policy(v)}" for k, v in sorted(env.items()))

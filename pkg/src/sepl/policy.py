"""Policy terms: abstract syntax, concrete syntax, and term rewriters.

Concrete syntax, loosest binding first::

    policy := sum
    sum    := prio ( ('+' | '-' | '(-)') prio )*
    prio   := par ( ('pov' | 'dov') par )*
    par    := seq ( '&&' seq )*
    seq    := unary ( '.' unary )*
    unary  := '~' unary | 'det' unary | guard ':' unary | atom
    atom   := 'eps' | '0' | '1' | '<' guard ',' guard '>' | '(' policy ')' | Var
    guard  := 'none' | box ( 'or' box )*
    box    := '{' [ constraint ( ',' constraint )* ] '}'

Constraints are ``k = v``, ``k != v``, ``k < v`` (and ``<=``, ``>``, ``>=``),
``k in {v1, v2}``, ``k in {}`` (empty), ``k in *`` (whole domain) and
``k matches "regex"``.  ``Var`` names start with an upper-case letter and
only appear in law patterns.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

from .errors import SchemaError, SyntaxError_
from .schema import (BOTTOM, TOP, Atom, AttributeSchema, Box, Guard, check_atom,
                     guard_combine)


class Policy:
    """Base class of policy terms."""

    __slots__ = ()


@dataclass(frozen=True)
class Empty(Policy):
    pass


@dataclass(frozen=True)
class Zero(Policy):
    pass


@dataclass(frozen=True)
class One(Policy):
    pass


@dataclass(frozen=True)
class Var(Policy):
    name: str


@dataclass(frozen=True)
class Rule(Policy):
    accept: Guard
    deny: Guard


@dataclass(frozen=True)
class Neg(Policy):
    body: Policy


@dataclass(frozen=True)
class Det(Policy):
    body: Policy


@dataclass(frozen=True)
class Scope(Policy):
    guard: Guard
    body: Policy


@dataclass(frozen=True)
class Binary(Policy):
    left: Policy
    right: Policy


class Seq(Binary):
    pass


class Pov(Binary):
    pass


class Dov(Binary):
    pass


class Par(Binary):
    pass


class Choice(Binary):
    pass


class Minus(Binary):
    pass


class Ominus(Binary):
    pass


EPS, ZERO, ONE = Empty(), Zero(), One()

BINARY_TOKENS = {Seq: ".", Pov: "pov", Dov: "dov", Par: "&&",
                 Choice: "+", Minus: "-", Ominus: "(-)"}
_LEVEL = {Choice: 1, Minus: 1, Ominus: 1, Pov: 2, Dov: 2, Par: 3, Seq: 4}
_UNARY_LEVEL = 5
_ATOM_LEVEL = 6


def children(p: Policy) -> tuple:
    if isinstance(p, Binary):
        return (p.left, p.right)
    if isinstance(p, (Neg, Det, Scope)):
        return (p.body,)
    return ()


def size(p: Policy) -> int:
    return 1 + sum(size(c) for c in children(p))


def depth(p: Policy) -> int:
    return 1 + max((depth(c) for c in children(p)), default=0)


def variables(p: Policy) -> set:
    if isinstance(p, Var):
        return {p.name}
    out = set()
    for c in children(p):
        out |= variables(c)
    return out


def substitute(p: Policy, env: dict) -> Policy:
    """Replace ``Var`` leaves by the policies bound in ``env``."""
    if isinstance(p, Var):
        return env.get(p.name, p)
    if isinstance(p, Binary):
        return type(p)(substitute(p.left, env), substitute(p.right, env))
    if isinstance(p, Neg):
        return Neg(substitute(p.body, env))
    if isinstance(p, Det):
        return Det(substitute(p.body, env))
    if isinstance(p, Scope):
        return Scope(p.guard, substitute(p.body, env))
    return p


# --------------------------------------------------------------------------
# parsing

_WS = re.compile(r"(?:\s+|#[^\n]*)+")
_VAR = re.compile(r"[A-Z][A-Za-z0-9_']*")
_WORD = re.compile(r"[a-z]+")
_KEY = re.compile(r"[A-Za-z_][\w.\-:/@]*")
_BARE_VALUE = re.compile(r"-?[\w.\-:/@]+")
_QUOTED = re.compile(r'"(?:[^"\\]|\\.)*"')
_CMP = re.compile(r"!=|>=|<=|=|>|<")
_CMP_PRED = {"=": "eq", "!=": "neq", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}
_KEYWORDS = {"eps", "det", "pov", "dov", "none", "or", "in", "matches"}


class _Parser:
    def __init__(self, text, schema, source=None, allow_vars=True):
        self.text = text
        self.schema = schema
        self.source = source
        self.allow_vars = allow_vars
        self.pos = 0

    # -- low level
    def error(self, msg, pos=None):
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return SyntaxError_(msg, line, col, self.source)

    def skip(self):
        m = _WS.match(self.text, self.pos)
        if m:
            self.pos = m.end()

    def at(self, lit: str) -> bool:
        self.skip()
        return self.text.startswith(lit, self.pos)

    def at_word(self, word: str) -> bool:
        self.skip()
        m = _WORD.match(self.text, self.pos)
        return bool(m) and m.group() == word

    def take(self, lit: str):
        if not self.at(lit):
            found = self.text[self.pos:self.pos + 10] or "end of input"
            raise self.error(f"expected {lit!r}, found {found!r}")
        self.pos += len(lit)

    def take_word(self, word: str):
        if not self.at_word(word):
            raise self.error(f"expected {word!r}")
        self.pos += len(word)

    # -- grammar
    def parse(self) -> Policy:
        p = self.sum()
        self.skip()
        if self.pos != len(self.text):
            raise self.error(f"unexpected {self.text[self.pos:self.pos + 10]!r}")
        return p

    def sum(self):
        left = self.prio()
        while True:
            if self.at("(-)"):
                self.pos += 3
                cls = Ominus
            elif self.at("+"):
                self.pos += 1
                cls = Choice
            elif self.at("-"):
                self.pos += 1
                cls = Minus
            else:
                return left
            left = cls(left, self.prio())

    def prio(self):
        left = self.par()
        while True:
            if self.at_word("pov"):
                self.pos += 3
                cls = Pov
            elif self.at_word("dov"):
                self.pos += 3
                cls = Dov
            else:
                return left
            left = cls(left, self.par())

    def par(self):
        left = self.seq()
        while self.at("&&"):
            self.pos += 2
            left = Par(left, self.seq())
        return left

    def seq(self):
        left = self.unary()
        while self.at("."):
            self.pos += 1
            left = Seq(left, self.unary())
        return left

    def unary(self):
        if self.at("~"):
            self.pos += 1
            return Neg(self.unary())
        if self.at_word("det"):
            self.pos += 3
            return Det(self.unary())
        if self.at("{") or self.at_word("none"):
            g = self.guard()
            self.take(":")
            return Scope(g, self.unary())
        return self.atom()

    def atom(self):
        self.skip()
        start = self.pos
        if self.at_word("eps"):
            self.pos += 3
            return EPS
        if self.at("(-)"):
            raise self.error("expected a policy, found '(-)'")
        if self.at("("):
            self.pos += 1
            p = self.sum()
            self.take(")")
            return p
        if self.at("<"):
            self.pos += 1
            g1 = self.guard()
            self.take(",")
            g2 = self.guard()
            self.take(">")
            return Rule(g1, g2)
        if self.at("0") or self.at("1"):
            ch = self.text[self.pos]
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isalnum():
                raise self.error("malformed constant", start)
            return ONE if ch == "1" else ZERO
        m = _VAR.match(self.text, self.pos)
        if m:
            if not self.allow_vars:
                raise self.error(f"policy variable {m.group()!r} not allowed here")
            self.pos = m.end()
            return Var(m.group())
        found = self.text[self.pos:self.pos + 10] or "end of input"
        raise self.error(f"expected a policy, found {found!r}")

    def guard(self) -> Guard:
        if self.at_word("none"):
            self.pos += 4
            return BOTTOM
        boxes = [self.box()]
        while self.at_word("or"):
            self.pos += 2
            b = self.box()
            if b not in boxes:
                boxes.append(b)
        return Guard(tuple(boxes))

    def box(self) -> Box:
        self.take("{")
        atoms = []
        if not self.at("}"):
            atoms.append(self.constraint())
            while self.at(","):
                self.pos += 1
                atoms.append(self.constraint())
        self.take("}")
        keys = [a.key for a in atoms]
        if len(set(keys)) != len(keys):
            raise self.error("a box may constrain each attribute only once")
        return Box(tuple(atoms))

    def constraint(self) -> Atom:
        self.skip()
        start = self.pos
        m = _KEY.match(self.text, self.pos)
        if not m:
            raise self.error("expected an attribute key")
        key = m.group()
        self.pos = m.end()
        attr = self._attribute(key, start)
        if self.at_word("in"):
            self.pos += 2
            if self.at("*"):
                self.pos += 1
                atom = Atom(key, "any")
            else:
                self.take("{")
                vals = []
                if not self.at("}"):
                    vals.append(self.value(attr))
                    while self.at(","):
                        self.pos += 1
                        vals.append(self.value(attr))
                self.take("}")
                atom = Atom(key, "in", frozenset(vals)) if vals else Atom(key, "none")
        elif self.at_word("matches"):
            self.pos += 7
            self.skip()
            q = _QUOTED.match(self.text, self.pos)
            if not q:
                raise self.error("expected a quoted regular expression")
            self.pos = q.end()
            atom = Atom(key, "regexp", json.loads(q.group()))
        else:
            self.skip()
            c = _CMP.match(self.text, self.pos)
            if not c:
                raise self.error(f"expected a comparison after {key!r}")
            self.pos = c.end()
            atom = Atom(key, _CMP_PRED[c.group()], self.value(attr))
        if self.schema is not None:
            try:
                check_atom(atom, self.schema)
            except SchemaError as exc:
                raise SchemaError(exc.message, *self._linecol(start), self.source) from None
        return atom

    def value(self, attr):
        self.skip()
        start = self.pos
        q = _QUOTED.match(self.text, self.pos)
        if q:
            self.pos = q.end()
            raw = json.loads(q.group())
        else:
            m = _BARE_VALUE.match(self.text, self.pos)
            if not m:
                raise self.error("expected a value")
            self.pos = m.end()
            raw = m.group()
        if attr is None:
            return raw
        try:
            return attr.coerce(raw)
        except SchemaError as exc:
            raise SchemaError(exc.message, *self._linecol(start), self.source) from None

    def _attribute(self, key, start):
        if self.schema is None:
            return None
        try:
            return self.schema.attribute(key)
        except SchemaError as exc:
            raise SchemaError(exc.message, *self._linecol(start), self.source) from None

    def _linecol(self, pos):
        e = self.error("", pos)
        return e.line, e.column


def parse_policy(text: str, schema: AttributeSchema | None = None, source=None,
                 allow_vars: bool = True) -> Policy:
    """Parse concrete syntax into a policy term.

    With a schema, attribute keys and values are checked and values are
    coerced to their domain type; without one, values stay strings.
    """
    return _Parser(text, schema, source, allow_vars).parse()


def parse_guard(text: str, schema: AttributeSchema | None = None) -> Guard:
    p = _Parser(text, schema)
    g = p.guard()
    p.skip()
    if p.pos != len(text):
        raise p.error("trailing input after guard")
    return g


# --------------------------------------------------------------------------
# printing


def _fmt_value(v) -> str:
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    s = str(v)
    if _BARE_VALUE.fullmatch(s) and s not in _KEYWORDS:
        return s
    return json.dumps(s)


def _sort_key(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


def format_atom(a: Atom) -> str:
    if a.pred == "any":
        return f"{a.key} in *"
    if a.pred == "none":
        return f"{a.key} in {{}}"
    if a.pred == "in":
        vals = ", ".join(_fmt_value(v) for v in sorted(a.arg, key=_sort_key))
        return f"{a.key} in {{{vals}}}"
    if a.pred == "regexp":
        return f"{a.key} matches {json.dumps(a.arg)}"
    op = {v: k for k, v in _CMP_PRED.items()}[a.pred]
    return f"{a.key} {op} {_fmt_value(a.arg)}"


def format_guard(g: Guard) -> str:
    if g.is_bottom:
        return "none"
    return " or ".join("{" + ", ".join(format_atom(a) for a in b.atoms) + "}" for b in g.boxes)


def _level(p: Policy) -> int:
    if isinstance(p, Binary):
        return _LEVEL[type(p)]
    if isinstance(p, (Neg, Det, Scope)):
        return _UNARY_LEVEL
    return _ATOM_LEVEL


def _wrap(p: Policy, min_level: int) -> str:
    s = print_policy(p)
    return s if _level(p) >= min_level else f"({s})"


def print_policy(p: Policy) -> str:
    """Render with the fewest parentheses the precedence table allows."""
    if isinstance(p, Empty):
        return "eps"
    if isinstance(p, Zero):
        return "0"
    if isinstance(p, One):
        return "1"
    if isinstance(p, Var):
        return p.name
    if isinstance(p, Rule):
        return f"<{format_guard(p.accept)}, {format_guard(p.deny)}>"
    if isinstance(p, Neg):
        return "~" + _wrap(p.body, _UNARY_LEVEL)
    if isinstance(p, Det):
        return "det " + _wrap(p.body, _UNARY_LEVEL)
    if isinstance(p, Scope):
        return f"{format_guard(p.guard)}: " + _wrap(p.body, _UNARY_LEVEL)
    if isinstance(p, Binary):
        lvl = _LEVEL[type(p)]
        tok = BINARY_TOKENS[type(p)]
        return f"{_wrap(p.left, lvl)} {tok} {_wrap(p.right, lvl + 1)}"
    raise TypeError(f"not a policy: {p!r}")


# --------------------------------------------------------------------------
# rewriting


def _restrict(g: Guard, p: Policy, schema) -> Policy:
    """Push a scope guard into a scope-free term."""
    if isinstance(p, Empty):
        return p
    if isinstance(p, One):
        return Rule(g, BOTTOM)
    if isinstance(p, Zero):
        return Rule(BOTTOM, g)
    if isinstance(p, Rule):
        return Rule(guard_combine("and", g, p.accept, schema=schema),
                    guard_combine("and", g, p.deny, schema=schema))
    if isinstance(p, Neg):
        return Neg(_restrict(g, p.body, schema))
    if isinstance(p, Det):
        return Det(_restrict(g, p.body, schema))
    if isinstance(p, Binary):
        return type(p)(_restrict(g, p.left, schema), _restrict(g, p.right, schema))
    if isinstance(p, Scope):
        return _restrict(guard_combine("and", g, p.guard, schema=schema), p.body, schema)
    # metavariables stay scoped
    return Scope(g, p)


def scope_expand(p: Policy, schema: AttributeSchema) -> Policy:
    """Eliminate every ``Scope`` node by pushing its guard down to the rules."""
    if isinstance(p, Scope):
        return _restrict(p.guard, scope_expand(p.body, schema), schema)
    if isinstance(p, Binary):
        return type(p)(scope_expand(p.left, schema), scope_expand(p.right, schema))
    if isinstance(p, Neg):
        return Neg(scope_expand(p.body, schema))
    if isinstance(p, Det):
        return Det(scope_expand(p.body, schema))
    return p


def has_scope(p: Policy) -> bool:
    return isinstance(p, Scope) or any(has_scope(c) for c in children(p))


# -- set expressions and the construction that realizes them


@dataclass(frozen=True)
class SetExpr:
    pass


@dataclass(frozen=True)
class Leaf(SetExpr):
    name: str  # "A", "D", "A'", "D'"

    def __post_init__(self):
        if self.name not in ("A", "D", "A'", "D'"):
            raise ValueError(f"unknown set leaf {self.name!r}")


@dataclass(frozen=True)
class Union(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Inter(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Diff(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Compl(SetExpr):
    body: SetExpr


A, D, A2, D2 = Leaf("A"), Leaf("D"), Leaf("A'"), Leaf("D'")


def s2p(p: Policy, q: Policy, f: SetExpr, one: Policy = ONE) -> Policy:
    """A policy accepting exactly ``f`` (over the meanings of p and q), denying nothing."""
    if isinstance(f, Leaf):
        base = {"A": p, "D": Neg(p), "A'": q, "D'": Neg(q)}[f.name]
        return Par(base, one)
    if isinstance(f, Union):
        return Choice(s2p(p, q, f.left, one), s2p(p, q, f.right, one))
    if isinstance(f, Inter):
        return Par(s2p(p, q, f.left, one), s2p(p, q, f.right, one))
    if isinstance(f, Diff):
        return Par(Choice(s2p(p, q, f.left, one), Neg(s2p(p, q, f.right, one))), one)
    if isinstance(f, Compl):
        return Choice(one, Neg(s2p(p, q, f.body, one)))
    raise TypeError(f"not a set expression: {f!r}")


def s2p_pair(p: Policy, q: Policy, f: SetExpr, g: SetExpr, one: Policy = ONE) -> Policy:
    """Accept ``f`` and deny ``g``; exact when ``f`` and ``g`` are disjoint."""
    return Choice(s2p(p, q, f, one), Neg(s2p(p, q, g, one)))


# set formulas of the derived operators, in terms of the operands' meanings
MINUS_SETS = (Diff(A, Union(A2, D2)), Diff(D, Union(A2, D2)))
SEQ_SETS = (Union(A, Diff(A2, D)), Union(D, Diff(D2, A)))
POV_SETS = (Union(A, A2), Union(Diff(D, A2), Diff(D2, A)))

CORE_ONE = Rule(TOP, BOTTOM)
CORE_ZERO = Rule(BOTTOM, TOP)
CORE_EPS = Rule(BOTTOM, BOTTOM)


def desugar_core(p: Policy, schema: AttributeSchema) -> Policy:
    """Rewrite into rules, ``~``, ``det``, ``&&``, ``+`` and ``(-)`` only."""
    return _core(scope_expand(p, schema))


def _core(p: Policy) -> Policy:
    if isinstance(p, Empty):
        return CORE_EPS
    if isinstance(p, Zero):
        return CORE_ZERO
    if isinstance(p, One):
        return CORE_ONE
    if isinstance(p, (Rule, Var)):
        return p
    if isinstance(p, Neg):
        return Neg(_core(p.body))
    if isinstance(p, Det):
        return Det(_core(p.body))
    if isinstance(p, (Par, Choice, Ominus)):
        return type(p)(_core(p.left), _core(p.right))
    left, right = _core(p.left), _core(p.right)
    if isinstance(p, Minus):
        return s2p_pair(left, right, *MINUS_SETS, one=CORE_ONE)
    if isinstance(p, Seq):
        return s2p_pair(left, right, *SEQ_SETS, one=CORE_ONE)
    if isinstance(p, Pov):
        return s2p_pair(left, right, *POV_SETS, one=CORE_ONE)
    if isinstance(p, Dov):
        return Neg(s2p_pair(Neg(left), Neg(right), *POV_SETS, one=CORE_ONE))
    raise TypeError(f"cannot desugar {p!r}")


CORE_NODES = (Rule, Neg, Det, Par, Choice, Ominus)


def is_core(p: Policy) -> bool:
    # metavariables count as core so patterns can be desugared too
    return isinstance(p, CORE_NODES + (Var,)) and all(is_core(c) for c in children(p))


# -- n-ary combinators

_FOLD = {"pov": Pov, "dov": Dov, "fa": Seq, "par": Par, "choice": Choice}


def combine_nary(alg: str, policies: Sequence[Policy]) -> Policy:
    if alg not in _FOLD:
        raise ValueError(f"unknown combinator {alg!r}")
    if not policies:
        raise ValueError(f"{alg} needs at least one policy")
    cls = _FOLD[alg]
    return reduce(cls, policies)


def ooa_nary(policies: Sequence[Policy]) -> Policy:
    """Only-one-applicable: each policy survives only where no other applies."""
    if not policies:
        raise ValueError("only-one-applicable needs at least one policy")
    if len(policies) == 1:
        return policies[0]
    terms = []
    for j, pj in enumerate(policies):
        others = [pi for i, pi in enumerate(policies) if i != j]
        terms.append(Ominus(pj, combine_nary("choice", others)))
    return combine_nary("choice", terms)

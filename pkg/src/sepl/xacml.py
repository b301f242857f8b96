"""A small XACML 3.0 subset: parsing and translation to policy terms.

Element names are matched case-insensitively with namespace prefixes
dropped, so both the bare vocabulary and OASIS-namespaced documents load.
Algorithm, MatchId and category identifiers may be full URNs; only the
part after the last ``:`` is significant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence, Union as TUnion
from xml.parsers import expat

from .errors import SchemaError, UnknownAlgorithm, XacmlError
from .policy import (ONE, ZERO, Det, Policy, Rule, Scope, Seq, combine_nary, ooa_nary)
from .schema import BOTTOM, TOP, Atom, AttributeSchema, Box, Guard, check_atom, guard_combine

RULE_ALGS = ("deny-overrides", "permit-overrides", "first-applicable",
             "ordered-permit-overrides", "deny-unless-permit", "permit-unless-deny")
POLICY_ALGS = RULE_ALGS + ("only-one-applicable",)
MATCH_IDS = {"string-equal": "eq", "integer-equal": "eq",
             "integer-greater-than": "gt", "string-regexp-match": "regexp"}
BOOLEAN_FUNCS = ("and", "or", "not")

_INERT = {"description", "obligation", "obligations", "advice", "advices",
          "obligationexpressions", "adviceexpressions"}


# --------------------------------------------------------------------------
# raw element tree


@dataclass
class Node:
    tag: str
    attrs: dict
    line: int
    column: int
    children: list = field(default_factory=list)
    text: str = ""

    def attr(self, name, default=None):
        lname = name.lower()
        for k, v in self.attrs.items():
            if _local(k).lower() == lname:
                return v
        return default

    def kids(self, *tags):
        return [c for c in self.children if c.tag in tags]


def _local(name: str) -> str:
    # expat without namespace processing reports "prefix:Local"
    return name.rsplit(":", 1)[-1]


def _suffix(ident: str) -> str:
    return ident.strip().rsplit(":", 1)[-1]


def _read_tree(text: str, source=None) -> Node:
    parser = expat.ParserCreate()
    stack: list = []
    root: list = []

    def start(name, attrs):
        node = Node(_local(name).lower(), dict(attrs), parser.CurrentLineNumber,
                    parser.CurrentColumnNumber + 1)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(name):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(text.encode("utf-8") if isinstance(text, str) else text, True)
    except expat.ExpatError as exc:
        raise XacmlError(f"malformed XML: {expat.ErrorString(exc.code)}",
                         exc.lineno, exc.offset + 1, source) from None
    return root[0]


# --------------------------------------------------------------------------
# document model


@dataclass(frozen=True)
class Designator:
    category: str
    attribute_id: str
    data_type: str = "string"
    must_be_present: bool = False

    @property
    def key(self) -> str:
        return f"{self.category}.{self.attribute_id}"


@dataclass(frozen=True)
class Match:
    match_id: str
    value: str
    designator: Designator
    line: int = 0
    column: int = 0


@dataclass
class Target:
    any_of: list = field(default_factory=list)  # list[list[list[Match]]]

    @property
    def empty(self) -> bool:
        return not self.any_of


@dataclass(frozen=True)
class CondAtom:
    match_id: str
    key: str
    value: str
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class CondOp:
    op: str  # and | or | not
    args: tuple


@dataclass
class XRule:
    id: str
    effect: str  # Permit | Deny
    target: Target | None = None
    condition: object = None
    description: str | None = None
    line: int = 0
    column: int = 0


@dataclass
class XPolicy:
    id: str
    version: str | None
    alg: str
    target: Target
    rules: list
    description: str | None = None
    extras: list = field(default_factory=list)
    line: int = 0
    column: int = 0


@dataclass
class XPolicySet:
    id: str
    version: str | None
    alg: str
    target: Target
    children: list
    description: str | None = None
    extras: list = field(default_factory=list)
    line: int = 0
    column: int = 0


@dataclass
class XacmlDoc:
    root: TUnion[XPolicySet, XPolicy]
    source: str | None = None


class _Reader:
    def __init__(self, source=None):
        self.source = source

    def error(self, node: Node, msg, cls=XacmlError):
        return cls(msg, node.line, node.column, self.source)

    def require(self, node: Node, name: str) -> str:
        value = node.attr(name)
        if value is None:
            raise self.error(node, f"<{node.tag}> is missing attribute {name!r}")
        return value

    def header(self, node: Node, *allowed):
        desc, extras, target, rest = None, [], None, []
        for c in node.children:
            if c.tag == "description":
                desc = c.text.strip()
            elif c.tag in _INERT:
                extras.append(c.tag)
            elif c.tag == "target":
                if target is not None:
                    raise self.error(c, f"<{node.tag}> has more than one <Target>")
                target = self.target(c)
            elif c.tag in allowed:
                rest.append(c)
            else:
                raise self.error(c, f"element <{c.tag}> is not allowed inside <{node.tag}>")
        return desc, extras, target, rest

    def alg(self, node: Node, attr: str, allowed: Sequence[str]) -> str:
        raw = self.require(node, attr)
        alg = _suffix(raw)
        if alg not in allowed:
            if alg in POLICY_ALGS:
                raise self.error(node, f"{alg} cannot combine rules", UnknownAlgorithm)
            raise self.error(node, f"unknown combining algorithm {raw!r}", UnknownAlgorithm)
        return alg

    def policy_set(self, node: Node) -> XPolicySet:
        desc, extras, target, kids = self.header(node, "policyset", "policy")
        if not kids:
            raise self.error(node, "<PolicySet> contains no policies")
        children = [self.policy_set(k) if k.tag == "policyset" else self.policy(k) for k in kids]
        return XPolicySet(self.require(node, "PolicySetId"), node.attr("Version"),
                          self.alg(node, "PolicyCombiningAlgId", POLICY_ALGS),
                          target or Target(), children, desc, extras, node.line, node.column)

    def policy(self, node: Node) -> XPolicy:
        desc, extras, target, kids = self.header(node, "rule")
        if not kids:
            raise self.error(node, "<Policy> must contain at least one <Rule>")
        alg = self.alg(node, "RuleCombiningAlgId", RULE_ALGS)
        return XPolicy(self.require(node, "PolicyId"), node.attr("Version"), alg,
                       target or Target(), [self.rule(k) for k in kids], desc, extras,
                       node.line, node.column)

    def rule(self, node: Node) -> XRule:
        effect = self.require(node, "Effect")
        if effect not in ("Permit", "Deny"):
            raise self.error(node, f"Effect must be Permit or Deny, got {effect!r}")
        desc, _, target, kids = self.header(node, "condition")
        if len(kids) > 1:
            raise self.error(kids[1], "<Rule> has more than one <Condition>")
        cond = self.condition(kids[0]) if kids else None
        return XRule(self.require(node, "RuleId"), effect, target, cond, desc,
                     node.line, node.column)

    def target(self, node: Node) -> Target:
        any_of = []
        for a in node.children:
            if a.tag != "anyof":
                raise self.error(a, f"element <{a.tag}> is not allowed inside <target>")
            alls = []
            for b in a.children:
                if b.tag != "allof":
                    raise self.error(b, f"element <{b.tag}> is not allowed inside <anyof>")
                matches = []
                for m in b.children:
                    if m.tag != "match":
                        raise self.error(m, f"element <{m.tag}> is not allowed inside <allof>")
                    matches.append(self.match(m))
                if not matches:
                    raise self.error(b, "<AllOf> needs at least one <Match>")
                alls.append(matches)
            if not alls:
                raise self.error(a, "<AnyOf> needs at least one <AllOf>")
            any_of.append(alls)
        return Target(any_of)

    def match_id(self, node: Node, raw: str) -> str:
        mid = _suffix(raw)
        if mid not in MATCH_IDS:
            raise self.error(node, f"unsupported MatchId {raw!r}")
        return mid

    def designator(self, node: Node) -> Designator:
        mbp = (node.attr("MustBePresent") or "false").strip().lower()
        return Designator(_suffix(self.require(node, "Category")),
                          _suffix(self.require(node, "AttributeId")),
                          _suffix(node.attr("DataType") or "string"), mbp == "true")

    def match(self, node: Node) -> Match:
        mid = self.match_id(node, self.require(node, "MatchId"))
        values = node.kids("attributevalue")
        designators = node.kids("attributedesignator")
        other = [c for c in node.children if c.tag not in ("attributevalue", "attributedesignator")]
        if other:
            raise self.error(other[0], f"element <{other[0].tag}> is not allowed inside <match>")
        if len(values) != 1 or len(designators) != 1:
            raise self.error(node, "<Match> needs one <AttributeValue> and one <AttributeDesignator>")
        return Match(mid, values[0].text.strip(), self.designator(designators[0]),
                     node.line, node.column)

    def condition(self, node: Node):
        if node.children:
            if len(node.children) != 1 or node.children[0].tag != "apply":
                raise self.error(node, "<Condition> must hold a single <Apply> or a textual expression")
            return self.apply(node.children[0])
        return _CondParser(node.text, node, self).parse()

    def apply(self, node: Node):
        fid = _suffix(self.require(node, "FunctionId"))
        if fid in BOOLEAN_FUNCS:
            args = tuple(self.apply(c) for c in node.children)
            if fid == "not" and len(args) != 1:
                raise self.error(node, "not takes exactly one argument")
            if not args:
                raise self.error(node, f"{fid} needs arguments")
            return CondOp(fid, args)
        mid = self.match_id(node, fid)
        key = value = None
        for c in node.children:
            if c.tag == "attributevalue" and value is None:
                value = c.text.strip()
            elif c.tag == "attributedesignator" and key is None:
                key = self.designator(c).key
            elif (c.tag == "apply" and key is None
                  and _suffix(c.attr("FunctionId") or "").endswith("one-and-only")
                  and len(c.children) == 1 and c.children[0].tag == "attributedesignator"):
                key = self.designator(c.children[0]).key
            else:
                raise self.error(c, f"unexpected <{c.tag}> in {fid} application")
        if key is None or value is None:
            raise self.error(node, f"{fid} needs an attribute designator and a value")
        return CondAtom(mid, key, value, node.line, node.column)


class _CondParser:
    """``and`` / ``or`` / ``not`` over ``matchId(key, value)`` applications."""

    _TOKEN = re.compile(r'\s*(?:(?P<p>[(),])|(?P<s>"(?:[^"\\]|\\.)*")|(?P<w>[^\s(),"]+))')

    def __init__(self, text, node, reader):
        self.node, self.reader = node, reader
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = self._TOKEN.match(text, pos)
            if not m:
                raise self.err(f"unexpected character {text[pos]!r}")
            tok = m.group("p") or m.group("w") or m.group("s")[1:-1]
            self.toks.append(tok)
            pos = m.end()
        self.i = 0

    def err(self, msg):
        return self.reader.error(self.node, f"condition: {msg}")

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise self.err("unexpected end of expression")
        self.i += 1
        return tok

    def expect(self, tok):
        got = self.next()
        if got != tok:
            raise self.err(f"expected {tok!r}, found {got!r}")

    def parse(self):
        if not self.toks:
            raise self.err("empty condition")
        e = self.disj()
        if self.peek() is not None:
            raise self.err(f"unexpected {self.peek()!r}")
        return e

    def disj(self):
        args = [self.conj()]
        while self.peek() == "or":
            self.i += 1
            args.append(self.conj())
        return args[0] if len(args) == 1 else CondOp("or", tuple(args))

    def conj(self):
        args = [self.neg()]
        while self.peek() == "and":
            self.i += 1
            args.append(self.neg())
        return args[0] if len(args) == 1 else CondOp("and", tuple(args))

    def neg(self):
        if self.peek() == "not":
            self.i += 1
            return CondOp("not", (self.neg(),))
        if self.peek() == "(":
            self.i += 1
            e = self.disj()
            self.expect(")")
            return e
        name = self.next()
        mid = self.reader.match_id(self.node, name)
        self.expect("(")
        key = self.next()
        self.expect(",")
        value = self.next()
        self.expect(")")
        return CondAtom(mid, key, value, self.node.line, self.node.column)


def parse_xacml(text: str, source=None) -> XacmlDoc:
    node = _read_tree(text, source)
    reader = _Reader(source)
    if node.tag == "policyset":
        root = reader.policy_set(node)
    elif node.tag == "policy":
        root = reader.policy(node)
    else:
        raise reader.error(node, f"root element must be <PolicySet> or <Policy>, not <{node.tag}>")
    return XacmlDoc(root, source)


# --------------------------------------------------------------------------
# translation


def expand_alg(alg: str, policies: Sequence[Policy]) -> Policy:
    """Combine translated children with the term for a combining algorithm."""
    if not policies:
        raise ValueError(f"{alg} needs at least one policy")
    alg = _suffix(alg)
    if alg in ("permit-overrides", "ordered-permit-overrides"):
        return combine_nary("pov", policies)
    if alg == "deny-overrides":
        return combine_nary("dov", policies)
    if alg == "first-applicable":
        return combine_nary("fa", policies)
    if alg == "only-one-applicable":
        return ooa_nary(policies)
    if alg == "deny-unless-permit":
        return Seq(Det(combine_nary("pov", policies)), ZERO)
    if alg == "permit-unless-deny":
        return Seq(Det(combine_nary("dov", policies)), ONE)
    raise UnknownAlgorithm(f"unknown combining algorithm {alg!r}")


class _Translator:
    def __init__(self, schema: AttributeSchema, source=None):
        self.schema, self.source = schema, source

    def located(self, exc, line, column):
        return SchemaError(exc.message, line, column, self.source)

    def atom(self, match_id, key, raw, line, column) -> Atom:
        try:
            attr = self.schema.attribute(key)
            pred = MATCH_IDS[match_id]
            value = raw if pred == "regexp" else attr.coerce(raw)
            return check_atom(Atom(key, pred, value), self.schema)
        except SchemaError as exc:
            raise self.located(exc, line, column) from None

    def target(self, t: Target | None) -> Guard:
        g = TOP
        if t is None:
            return g
        for alls in t.any_of:
            boxes = [b for b in (self.all_of(m) for m in alls) if b is not None]
            g = guard_combine("and", g, Guard(tuple(dict.fromkeys(boxes))), schema=self.schema)
        return g

    def all_of(self, matches) -> Box | None:
        g = TOP
        for m in matches:
            a = self.atom(m.match_id, m.designator.key, m.value, m.line, m.column)
            g = guard_combine("and", g, Guard((Box((a,)),)), schema=self.schema)
        # two matches on one attribute can contradict each other
        return g.boxes[0] if g.boxes else None

    def condition(self, c) -> Guard:
        if c is None:
            return TOP
        if isinstance(c, CondAtom):
            return Guard((Box((self.atom(c.match_id, c.key, c.value, c.line, c.column),)),))
        args = [self.condition(a) for a in c.args]
        if c.op == "not":
            return guard_combine("not", args[0], schema=self.schema)
        g = args[0]
        for other in args[1:]:
            g = guard_combine(c.op, g, other, schema=self.schema)
        return g

    def rule(self, r: XRule) -> Policy:
        phi = guard_combine("and", self.target(r.target), self.condition(r.condition),
                            schema=self.schema)
        return Rule(phi, BOTTOM) if r.effect == "Permit" else Rule(BOTTOM, phi)

    def node(self, n) -> Policy:
        if isinstance(n, XPolicy):
            body = expand_alg(n.alg, [self.rule(r) for r in n.rules])
        else:
            body = expand_alg(n.alg, [self.node(c) for c in n.children])
        return Scope(self.target(n.target), body)


def translate(doc: XacmlDoc, schema: AttributeSchema) -> Policy:
    return _Translator(schema, doc.source).node(doc.root)


def translate_children(doc: XacmlDoc, schema: AttributeSchema) -> list:
    """The root's direct components, each under the root target."""
    tr = _Translator(schema, doc.source)
    root = doc.root
    guard = tr.target(root.target)
    if isinstance(root, XPolicy):
        return [Scope(guard, tr.rule(r)) for r in root.rules]
    return [Scope(guard, tr.node(c)) for c in root.children]


def component_ids(doc: XacmlDoc) -> list:
    root = doc.root
    return [c.id for c in (root.rules if isinstance(root, XPolicy) else root.children)]

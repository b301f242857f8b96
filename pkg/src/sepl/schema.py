"""Finite attribute schemas, attribute constraints and requests.

A guard is a disjunction of boxes; a box constrains each attribute at most
once and leaves the rest at their full domain.  Every constraint denotes a
finite subset of its attribute's domain, which is what makes whole-domain
analysis exact.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (CapExceeded, DuplicateAttribute, EmptyDomain, SchemaError,
                     SyntaxError_)
from .kernel import F, T, U, TriValue, tv_and, tv_or

log = logging.getLogger(__name__)

DEFAULT_POINT_CAP = 10 ** 6
DEFAULT_BOX_CAP = 4096


def point_cap_from_env() -> int:
    raw = os.environ.get("SEPL_POINT_CAP")
    if not raw:
        return DEFAULT_POINT_CAP
    try:
        return int(raw)
    except ValueError:
        raise SchemaError(f"SEPL_POINT_CAP is not an integer: {raw!r}") from None


@dataclass(frozen=True)
class Attribute:
    key: str
    kind: str  # "enum" | "int"
    values: tuple

    @property
    def size(self) -> int:
        return len(self.values)

    def index_of(self, value) -> int:
        return self._index[value]

    @property
    def _index(self):
        return _value_index(self)

    def coerce(self, raw):
        """Turn a textual value into a domain value, or raise SchemaError."""
        if self.kind == "int":
            if isinstance(raw, bool):
                raise SchemaError(f"{self.key}: expected an integer, got {raw!r}")
            try:
                value = int(raw)
            except (TypeError, ValueError):
                raise SchemaError(f"{self.key}: expected an integer, got {raw!r}") from None
        else:
            value = str(raw)
        return value

    def check(self, value):
        if value not in self._index:
            raise SchemaError(f"value {value!r} is outside the domain of {self.key}")
        return value


@lru_cache(maxsize=None)
def _value_index(attr: Attribute):
    return {v: i for i, v in enumerate(attr.values)}


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple
    cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        seen = set()
        for a in self.attributes:
            if a.key in seen:
                raise DuplicateAttribute(f"duplicate attribute {a.key!r}")
            if not a.values:
                raise EmptyDomain(f"attribute {a.key!r} has an empty domain")
            seen.add(a.key)

    @property
    def keys(self) -> tuple:
        return tuple(a.key for a in self.attributes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.attributes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def attribute(self, key: str) -> Attribute:
        try:
            return _attr_index(self)[key]
        except KeyError:
            raise SchemaError(f"unknown attribute {key!r}") from None

    def position(self, key: str) -> int:
        self.attribute(key)
        return self.keys.index(key)

    def __contains__(self, key):
        return key in _attr_index(self)

    def require_cap(self, cap: int | None = None):
        cap = self.cap if cap is None else cap
        if self.size > cap:
            raise CapExceeded(f"schema has {self.size} points, over the cap of {cap}")

    def points(self) -> Iterator[tuple]:
        """All fully-bound points in lexicographic (declaration) order."""
        self.require_cap()
        return itertools.product(*(a.values for a in self.attributes))

    def point_index(self, point: Sequence) -> int:
        idx = 0
        for a, v in zip(self.attributes, point):
            idx = idx * a.size + a.index_of(v)
        return idx

    def point_at(self, index: int) -> tuple:
        out = []
        for a in reversed(self.attributes):
            index, r = divmod(index, a.size)
            out.append(a.values[r])
        return tuple(reversed(out))

    def request_for(self, point: Sequence) -> "Request":
        return Request(dict(zip(self.keys, point)))


@lru_cache(maxsize=None)
def _attr_index(schema: AttributeSchema):
    return {a.key: a for a in schema.attributes}


# --------------------------------------------------------------------------
# schema and request files

_KEY = r"[A-Za-z_][\w.\-:/@]*"
_ATTR_LINE = re.compile(rf"^attribute\s+({_KEY})\s*:\s*(.*)$")
_ENUM_BODY = re.compile(r"^enum\s*\{(.*)\}\s*$")
_INT_BODY = re.compile(r"^int\s*\[\s*(-?\d+)\s*,\s*(-?\d+)\s*\]\s*$")


def _strip_comment(line: str) -> str:
    # '#' inside a double-quoted value is not a comment
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _split_values(body: str) -> list:
    values = []
    for raw in _csv_split(body):
        raw = raw.strip()
        if not raw:
            continue
        if len(raw) >= 2 and raw[0] == raw[-1] == '"':
            raw = raw[1:-1]
        values.append(raw)
    return values


def _csv_split(body: str) -> list:
    parts, cur, quoted = [], [], False
    for ch in body:
        if ch == '"':
            quoted = not quoted
        if ch == "," and not quoted:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_schema(text: str, cap: int | None = None, source=None) -> AttributeSchema:
    """Parse the line-oriented schema format.

    ::

        attribute role : enum { r1, r2, r3 }
        attribute hour : int [0, 23]
    """
    cap = point_cap_from_env() if cap is None else cap
    attrs: list[Attribute] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line)
        if not line:
            continue
        m = _ATTR_LINE.match(line)
        if not m:
            raise SyntaxError_("malformed schema line", lineno, source=source)
        key, body = m.group(1), m.group(2).strip()
        if key in seen:
            raise DuplicateAttribute(
                f"duplicate attribute {key!r} (first declared on line {seen[key]})",
                lineno, source=source)
        if (em := _ENUM_BODY.match(body)) is not None:
            values = _split_values(em.group(1))
            if len(set(values)) != len(values):
                raise SchemaError(f"repeated value in the domain of {key!r}", lineno, source=source)
            attr = Attribute(key, "enum", tuple(values))
        elif (im := _INT_BODY.match(body)) is not None:
            lo, hi = int(im.group(1)), int(im.group(2))
            attr = Attribute(key, "int", tuple(range(lo, hi + 1)))
        else:
            raise SyntaxError_(f"malformed domain for {key!r}", lineno, source=source)
        if not attr.values:
            raise EmptyDomain(f"attribute {key!r} has an empty domain", lineno, source=source)
        seen[key] = lineno
        attrs.append(attr)
        if math.prod(a.size for a in attrs) > cap:
            raise CapExceeded(f"line {lineno}: schema exceeds the point cap of {cap}")
    return AttributeSchema(tuple(attrs), cap)


class _Unknown:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNKNOWN"

    def __str__(self):
        return "?"

    def __reduce__(self):
        return (_Unknown, ())


UNKNOWN = _Unknown()


@dataclass(frozen=True)
class Request:
    """An environment: attribute key -> domain value or UNKNOWN."""

    bindings: Mapping = field(default_factory=dict)

    def get(self, key):
        return self.bindings.get(key, UNKNOWN)

    def is_fully_bound(self, schema: AttributeSchema) -> bool:
        return all(self.get(k) is not UNKNOWN for k in schema.keys)

    def point(self, schema: AttributeSchema) -> tuple:
        missing = [k for k in schema.keys if self.get(k) is UNKNOWN]
        if missing:
            raise SchemaError(f"request leaves {', '.join(missing)} unbound")
        return tuple(self.bindings[k] for k in schema.keys)

    def __hash__(self):
        return hash(tuple(sorted((k, str(v)) for k, v in self.bindings.items())))


def make_request(schema: AttributeSchema, bindings: Mapping) -> Request:
    out = {}
    for key, raw in bindings.items():
        attr = schema.attribute(key)
        if raw is UNKNOWN or raw == "?":
            out[key] = UNKNOWN
        else:
            out[key] = attr.check(attr.coerce(raw))
    return Request(out)


def parse_request(text: str, schema: AttributeSchema, source=None) -> Request:
    """Parse ``key = value`` / ``key = ?`` lines.

    Keys absent from the file read as unknown; a warning names them.
    """
    bindings = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line)
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise SyntaxError_("expected 'key = value'", lineno, source=source)
        key, raw = key.strip(), raw.strip()
        if len(raw) >= 2 and raw[0] == raw[-1] == '"':
            raw = raw[1:-1]
        if key in bindings:
            raise SchemaError(f"attribute {key!r} bound twice", lineno, source=source)
        try:
            attr = schema.attribute(key)
            bindings[key] = UNKNOWN if raw == "?" else attr.check(attr.coerce(raw))
        except SchemaError as exc:
            raise SchemaError(exc.message, lineno, source=source) from None
    missing = [k for k in schema.keys if k not in bindings]
    if missing:
        log.warning("request does not bind %s; treating as unknown", ", ".join(missing))
    return Request(bindings)


# --------------------------------------------------------------------------
# atoms, boxes, guards

PREDICATES = ("in", "eq", "neq", "lt", "le", "gt", "ge", "regexp", "any", "none")
_COMPARISONS = {"lt", "le", "gt", "ge"}


@dataclass(frozen=True)
class Atom:
    key: str
    pred: str
    arg: object = None

    def __post_init__(self):
        if self.pred not in PREDICATES:
            raise SchemaError(f"unknown predicate {self.pred!r}")
        if self.pred == "in":
            if not isinstance(self.arg, frozenset):
                object.__setattr__(self, "arg", frozenset(self.arg))
            if not self.arg:
                # one spelling for the empty constraint
                object.__setattr__(self, "pred", "none")
                object.__setattr__(self, "arg", None)


@dataclass(frozen=True)
class Box:
    atoms: tuple = ()

    def __post_init__(self):
        keys = [a.key for a in self.atoms]
        if len(set(keys)) != len(keys):
            raise SchemaError(f"box constrains an attribute twice: {keys}")

    def atom_for(self, key):
        for a in self.atoms:
            if a.key == key:
                return a
        return None


@dataclass(frozen=True)
class Guard:
    boxes: tuple = ()

    @property
    def is_bottom(self) -> bool:
        return not self.boxes


TOP = Guard((Box(),))
BOTTOM = Guard(())


def box(**constraints) -> Box:
    """Shorthand for equality boxes: ``box(role="r1")``."""
    return Box(tuple(Atom(k.replace("__", "."), "eq", v) for k, v in constraints.items()))


def check_atom(atom: Atom, schema: AttributeSchema) -> Atom:
    attr = schema.attribute(atom.key)
    if atom.pred in _COMPARISONS:
        if attr.kind != "int":
            raise SchemaError(f"comparison {atom.pred!r} on enumerated attribute {atom.key!r}")
        if not isinstance(atom.arg, int) or isinstance(atom.arg, bool):
            raise SchemaError(f"comparison on {atom.key!r} needs an integer, got {atom.arg!r}")
    elif atom.pred in ("eq", "neq"):
        attr.check(atom.arg)
    elif atom.pred == "in":
        for v in atom.arg:
            attr.check(v)
    elif atom.pred == "regexp":
        try:
            re.compile(atom.arg)
        except (re.error, TypeError) as exc:
            raise SchemaError(f"bad regular expression {atom.arg!r}: {exc}") from None
    return atom


def check_guard(g: Guard, schema: AttributeSchema) -> Guard:
    for b in g.boxes:
        for a in b.atoms:
            check_atom(a, schema)
    return g


def atom_to_set(atom: Atom, schema: AttributeSchema) -> frozenset:
    return _atom_set(atom, schema.attribute(atom.key))


@lru_cache(maxsize=65536)
def _atom_set(atom: Atom, attr: Attribute) -> frozenset:
    p, v = atom.pred, atom.arg
    if p in _COMPARISONS and attr.kind != "int":
        raise SchemaError(f"comparison {p!r} on enumerated attribute {attr.key!r}")
    dom = attr.values
    if p == "any":
        return frozenset(dom)
    if p == "none":
        return frozenset()
    if p == "in":
        return frozenset(x for x in dom if x in v)
    if p == "eq":
        return frozenset(x for x in dom if x == v)
    if p == "neq":
        return frozenset(x for x in dom if x != v)
    if p == "lt":
        return frozenset(x for x in dom if x < v)
    if p == "le":
        return frozenset(x for x in dom if x <= v)
    if p == "gt":
        return frozenset(x for x in dom if x > v)
    if p == "ge":
        return frozenset(x for x in dom if x >= v)
    if p == "regexp":
        rx = re.compile(v)
        return frozenset(x for x in dom if rx.fullmatch(str(x)))
    raise SchemaError(f"unknown predicate {p!r}")


def atom_eval(atom: Atom, binding, schema: AttributeSchema) -> TriValue:
    attr = schema.attribute(atom.key)
    s = _atom_set(atom, attr)
    if binding is UNKNOWN:
        if len(s) == attr.size:
            return T
        if not s:
            return F
        return U
    return T if binding in s else F


def box_eval(b: Box, r: Request, schema: AttributeSchema) -> TriValue:
    out = T
    for a in b.atoms:
        out = tv_and(out, atom_eval(a, r.get(a.key), schema))
        if out is F:
            break
    return out


def guard_eval(g: Guard, r: Request, schema: AttributeSchema) -> TriValue:
    out = F
    for b in g.boxes:
        out = tv_or(out, box_eval(b, r, schema))
        if out is T:
            break
    return out


def atom_mask(atom: Atom, schema: AttributeSchema) -> np.ndarray:
    attr = schema.attribute(atom.key)
    s = _atom_set(atom, attr)
    return np.fromiter((v in s for v in attr.values), dtype=bool, count=attr.size)


def box_region(b: Box, schema: AttributeSchema) -> np.ndarray:
    schema.require_cap()
    region = np.ones(schema.shape, dtype=bool)
    n = len(schema.attributes)
    for a in b.atoms:
        pos = schema.position(a.key)
        shape = [1] * n
        shape[pos] = schema.attributes[pos].size
        region &= atom_mask(a, schema).reshape(shape)
    return region.reshape(-1)


def guard_region(g: Guard, schema: AttributeSchema) -> np.ndarray:
    """Boolean mask over the schema's points, lexicographic order."""
    schema.require_cap()
    out = np.zeros(schema.size, dtype=bool)
    for b in g.boxes:
        out |= box_region(b, schema)
    return out


def region_points(mask: np.ndarray, schema: AttributeSchema) -> list:
    return [schema.point_at(int(i)) for i in np.flatnonzero(mask)]


# --------------------------------------------------------------------------
# guard algebra


def atom_from_set(key: str, values: Iterable, schema: AttributeSchema) -> Atom:
    attr = schema.attribute(key)
    vals = frozenset(values)
    if len(vals) == attr.size:
        return Atom(key, "any")
    if not vals:
        return Atom(key, "none")
    if len(vals) == 1:
        return Atom(key, "eq", next(iter(vals)))
    if len(vals) == attr.size - 1:
        (missing,) = set(attr.values) - vals
        return Atom(key, "neq", missing)
    return Atom(key, "in", vals)


def _merge_boxes(b1: Box, b2: Box, schema: AttributeSchema) -> Box | None:
    atoms = {a.key: a for a in b1.atoms}
    order = [a.key for a in b1.atoms]
    for a in b2.atoms:
        if a.key in atoms:
            prev = atoms[a.key]
            if prev == a:
                continue
            both = atom_to_set(prev, schema) & atom_to_set(a, schema)
            atoms[a.key] = atom_from_set(a.key, both, schema)
        else:
            atoms[a.key] = a
            order.append(a.key)
    merged = tuple(atoms[k] for k in order)
    if any(not atom_to_set(a, schema) for a in merged):
        return None
    return Box(merged)


def _and(g1: Guard, g2: Guard, schema, box_cap) -> Guard:
    boxes = []
    for b1 in g1.boxes:
        for b2 in g2.boxes:
            m = _merge_boxes(b1, b2, schema)
            if m is not None and m not in boxes:
                boxes.append(m)
                if len(boxes) > box_cap:
                    raise CapExceeded(f"guard conjunction exceeds {box_cap} boxes")
    return Guard(tuple(boxes))


def _not_box(b: Box, schema) -> Guard:
    boxes = []
    for a in b.atoms:
        attr = schema.attribute(a.key)
        rest = frozenset(attr.values) - atom_to_set(a, schema)
        if rest:
            boxes.append(Box((atom_from_set(a.key, rest, schema),)))
    return Guard(tuple(boxes))


def guard_combine(op: str, g1: Guard, g2: Guard | None = None, schema: AttributeSchema = None,
                  box_cap: int = DEFAULT_BOX_CAP) -> Guard:
    """Pointwise and/or/not of guards, kept in DNF."""
    if schema is None:
        raise TypeError("guard_combine needs the schema")
    if op == "and":
        return _and(g1, g2, schema, box_cap)
    if op == "or":
        boxes = list(g1.boxes)
        boxes.extend(b for b in g2.boxes if b not in boxes)
        return Guard(tuple(boxes))
    if op == "not":
        out = TOP
        for b in g1.boxes:
            out = _and(out, _not_box(b, schema), schema, box_cap)
            if out.is_bottom:
                break
        return out
    raise ValueError(f"unknown guard operator {op!r}")

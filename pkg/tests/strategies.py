"""Hypothesis strategies over a small fixed schema."""

from hypothesis import strategies as st

from sepl.policy import (EPS, ONE, ZERO, Choice, Compl, Det, Diff, Dov, Inter, Leaf,
                         Minus, Neg, Ominus, Par, Pov, Rule, Scope, Seq, Union)
from sepl.schema import Atom, Box, Guard, Request, UNKNOWN, parse_schema

SCHEMA = parse_schema("""
attribute role: enum {r1, r2, r3}
attribute hour: int [0, 4]
attribute file: enum {secret.txt, public.txt}
""")


@st.composite
def atoms(draw, key=None):
    attr = SCHEMA.attribute(key) if key else draw(st.sampled_from(SCHEMA.attributes))
    preds = ["eq", "neq", "in", "any", "none"]
    if attr.kind == "int":
        preds += ["lt", "le", "gt", "ge"]
    else:
        preds += ["regexp"]
    pred = draw(st.sampled_from(preds))
    if pred in ("any", "none"):
        return Atom(attr.key, pred)
    if pred == "in":
        return Atom(attr.key, "in", frozenset(draw(st.sets(st.sampled_from(attr.values)))))
    if pred == "regexp":
        return Atom(attr.key, "regexp", draw(st.sampled_from(["r.*", "se.*", "p.*t", "r[12]"])))
    if pred in ("lt", "le", "gt", "ge"):
        return Atom(attr.key, pred, draw(st.integers(-1, 5)))
    return Atom(attr.key, pred, draw(st.sampled_from(attr.values)))


@st.composite
def boxes(draw):
    keys = draw(st.lists(st.sampled_from(SCHEMA.keys), unique=True, max_size=3))
    return Box(tuple(draw(atoms(k)) for k in keys))


guards = st.lists(boxes(), max_size=3, unique=True).map(lambda bs: Guard(tuple(bs)))
rules = st.builds(Rule, guards, guards)

_BINARY = (Seq, Pov, Dov, Par, Choice, Minus, Ominus)


def policies(max_leaves=8, scopes=True):
    leaves = st.one_of(st.sampled_from([EPS, ZERO, ONE]), rules)

    def extend(children):
        options = [st.builds(op, children, children) for op in _BINARY]
        options += [st.builds(Neg, children), st.builds(Det, children)]
        if scopes:
            options.append(st.builds(Scope, guards, children))
        return st.one_of(options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def det_free(max_leaves=8):
    leaves = st.one_of(st.sampled_from([EPS, ZERO, ONE]), rules)
    return st.recursive(
        leaves,
        lambda c: st.one_of([st.builds(op, c, c) for op in _BINARY]
                            + [st.builds(Neg, c), st.builds(Scope, guards, c)]),
        max_leaves=max_leaves)


points = st.tuples(*(st.sampled_from(a.values) for a in SCHEMA.attributes))
partial_requests = st.tuples(*(st.sampled_from(a.values + (UNKNOWN,)) for a in SCHEMA.attributes)) \
    .map(lambda vals: Request(dict(zip(SCHEMA.keys, vals))))

setexprs = st.recursive(
    st.sampled_from([Leaf("A"), Leaf("D"), Leaf("A'"), Leaf("D'")]),
    lambda c: st.one_of(st.builds(Union, c, c), st.builds(Inter, c, c),
                        st.builds(Diff, c, c), st.builds(Compl, c)),
    max_leaves=6)

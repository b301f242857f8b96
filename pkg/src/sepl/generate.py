"""Seeded random policies, guards, requests and set expressions.

Used by the law checker and by the test-suite; every generator takes a
``random.Random`` so runs are reproducible from a seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .policy import (EPS, ONE, ZERO, Choice, Compl, Det, Diff, Dov, Inter, Leaf,
                     Minus, Neg, Ominus, Par, Pov, Rule, Scope, Seq, Union)
from .schema import BOTTOM, UNKNOWN, Atom, AttributeSchema, Box, Guard, Request

BINARY_OPS = (Seq, Pov, Dov, Par, Choice, Minus, Ominus)
UNARY_OPS = (Neg, Det)


@dataclass
class PolicyShape:
    depth: int = 5
    constants: bool = True
    scopes: bool = True
    leaf_prob: float = 0.3
    max_boxes: int = 2
    max_atoms: int = 2


def random_atom(rng: random.Random, schema: AttributeSchema, key=None) -> Atom:
    attr = schema.attribute(key) if key else rng.choice(schema.attributes)
    preds = ["eq", "eq", "in", "neq"]
    if attr.kind == "int":
        preds += ["lt", "gt", "le", "ge"]
    pred = rng.choice(preds)
    if pred == "in":
        k = rng.randint(1, max(1, attr.size - 1))
        return Atom(attr.key, "in", frozenset(rng.sample(attr.values, k)))
    return Atom(attr.key, pred, rng.choice(attr.values))


def random_box(rng, schema, max_atoms=2) -> Box:
    n = rng.randint(1, min(max_atoms, len(schema.attributes)))
    keys = rng.sample(schema.keys, n)
    return Box(tuple(random_atom(rng, schema, k) for k in keys))


def random_guard(rng, schema, max_boxes=2, max_atoms=2) -> Guard:
    n = rng.randint(0, max_boxes) if rng.random() < 0.2 else rng.randint(1, max_boxes)
    boxes = []
    for _ in range(n):
        b = random_box(rng, schema, max_atoms)
        if b not in boxes:
            boxes.append(b)
    return Guard(tuple(boxes))


def random_rule(rng, schema, shape: PolicyShape | None = None) -> Rule:
    shape = shape or PolicyShape()
    g1 = random_guard(rng, schema, shape.max_boxes, shape.max_atoms)
    g2 = random_guard(rng, schema, shape.max_boxes, shape.max_atoms) if rng.random() < 0.5 else BOTTOM
    if rng.random() < 0.5:
        g1, g2 = g2, g1
    return Rule(g1, g2)


def random_policy(rng: random.Random, schema: AttributeSchema, depth: int | None = None,
                  shape: PolicyShape | None = None):
    shape = shape or PolicyShape()
    depth = shape.depth if depth is None else depth
    if depth <= 1 or rng.random() < shape.leaf_prob:
        if shape.constants and rng.random() < 0.2:
            return rng.choice((EPS, ZERO, ONE))
        return random_rule(rng, schema, shape)
    roll = rng.random()
    if roll < 0.2:
        return rng.choice(UNARY_OPS)(random_policy(rng, schema, depth - 1, shape))
    if shape.scopes and roll < 0.3:
        g = random_guard(rng, schema, shape.max_boxes, shape.max_atoms)
        return Scope(g, random_policy(rng, schema, depth - 1, shape))
    op = rng.choice(BINARY_OPS)
    return op(random_policy(rng, schema, depth - 1, shape),
              random_policy(rng, schema, depth - 1, shape))


def random_request(rng, schema, unknown_prob=0.3) -> Request:
    return Request({a.key: (UNKNOWN if rng.random() < unknown_prob else rng.choice(a.values))
                    for a in schema.attributes})


_LEAVES = (Leaf("A"), Leaf("D"), Leaf("A'"), Leaf("D'"))


def random_setexpr(rng: random.Random, depth: int = 3):
    if depth <= 1 or rng.random() < 0.3:
        return rng.choice(_LEAVES)
    roll = rng.random()
    if roll < 0.15:
        return Compl(random_setexpr(rng, depth - 1))
    op = rng.choice((Union, Inter, Diff))
    return op(random_setexpr(rng, depth - 1), random_setexpr(rng, depth - 1))

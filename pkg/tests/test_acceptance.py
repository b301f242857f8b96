"""Acceptance gate: eight end-to-end criteria at their stated tolerances.

Run under pytest, or directly with ``python tests/test_acceptance.py`` to
get one PASS/FAIL line per criterion.
"""

import itertools
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from sepl import analysis  # noqa: E402
from sepl.generate import PolicyShape, random_policy, random_setexpr  # noqa: E402
from sepl.kernel import Decision, DecisionPair, TriValue, classify  # noqa: E402
from sepl.policy import Diff, Rule, Scope, Seq, Var, print_policy  # noqa: E402
from sepl.schema import (BOTTOM, UNKNOWN, Atom, Box, Guard, Request,  # noqa: E402
                         parse_request, parse_schema)
from sepl.semantics import (combine_pair, decide, eval_abs, eval_rel,  # noqa: E402
                            eval_term)
from sepl.xacml import expand_alg, parse_xacml, translate  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

RESULTS = {}

SCHEMA3 = parse_schema("""
attribute role: enum {r1, r2, r3, r4}
attribute hour: int [0, 3]
attribute res: enum {a, b, c}
""")


def record(n, ok, detail):
    RESULTS[n] = (ok, detail)
    return ok, detail


def corpus(n=500, seed=2024, depth=5):
    rng = random.Random(seed)
    return [random_policy(rng, SCHEMA3, depth, PolicyShape(depth=depth)) for _ in range(n)]


def full_requests(schema):
    return [schema.request_for(pt) for pt in schema.points()]


# ---------------------------------------------------------------- criterion 1


def conformance_matrix(alg, oracle=None):
    oracle = oracle or oracles.ORACLES[alg]
    term = expand_alg(alg, [Var("P1"), Var("P2")])
    mismatches = []
    for e1, e2 in itertools.product(oracles.ENCODINGS, repeat=2):
        got = classify(eval_term(term, {"P1": _pair(e1), "P2": _pair(e2)})).value
        want = oracle([oracles.CLASS[e1], oracles.CLASS[e2]])
        if got not in want:
            mismatches.append((e1, e2, got, sorted(want)))
    return mismatches


def _pair(e):
    return DecisionPair(TriValue(e[0]), TriValue(e[1]))


def criterion_1():
    start = time.perf_counter()
    failures = {alg: conformance_matrix(alg) for alg in oracles.ORACLES}
    elapsed = time.perf_counter() - start
    bad = {a: len(m) for a, m in failures.items() if m}
    ok = not bad and elapsed < 1.0
    return record(1, ok, f"mismatches {bad or 'none'} over 6x64 cells in {elapsed:.3f}s")


# ---------------------------------------------------------------- criterion 2


def criterion_2():
    got = combine_pair("pov", DecisionPair(TriValue.U, TriValue.F),
                       DecisionPair(TriValue.F, TriValue.T))
    ok = got == DecisionPair(TriValue.U, TriValue.U) and classify(got) is Decision.INDETERMINATE_PD
    return record(2, ok, f"(?,F) pov (F,T) = {got} -> {classify(got)}")


# ---------------------------------------------------------------- criterion 3


def criterion_3():
    start = time.perf_counter()
    requests = full_requests(SCHEMA3)
    mismatches = 0
    for p in corpus():
        m = eval_abs(p, SCHEMA3)
        for i, r in enumerate(requests):
            if eval_rel(p, r, SCHEMA3) != m.pair_at(i):
                mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30
    return record(3, ok, f"{mismatches} mismatches, 500 policies x {len(requests)} requests, "
                         f"{elapsed:.1f}s")


# ---------------------------------------------------------------- criterion 4


def criterion_4():
    requests = full_requests(SCHEMA3)
    rng = random.Random(7)
    partial = [Request({a.key: (UNKNOWN if rng.random() < 0.4 else rng.choice(a.values))
                        for a in SCHEMA3.attributes}) for _ in range(20)]
    violations = 0
    for p in corpus():
        m = eval_abs(p, SCHEMA3)
        violations += int(np.count_nonzero((m.accept.values == 2) & (m.deny.values == 2)))
        for r in requests + partial:
            if decide(p, r, SCHEMA3) is Decision.CONFLICT:
                violations += 1
    return record(4, violations == 0, f"{violations} (T,T) points or CONFLICT decisions")


# ---------------------------------------------------------------- criterion 5


def criterion_5():
    start = time.perf_counter()
    rng = random.Random(99)
    mismatches = 0
    for _ in range(200):
        p = random_policy(rng, SCHEMA3, 3)
        q = random_policy(rng, SCHEMA3, 3)
        f = random_setexpr(rng, 3)
        g = Diff(random_setexpr(rng, 3), f)
        mp, mq = eval_abs(p, SCHEMA3), eval_abs(q, SCHEMA3)
        want_a = analysis.setexpr_region(f, mp, mq)
        want_d = analysis.setexpr_region(g, mp, mq)
        out = eval_abs(analysis.semantics_to_policy(p, q, f, g, SCHEMA3), SCHEMA3)
        if not (np.array_equal(out.accept.mask(), want_a)
                and np.array_equal(out.deny.mask(), want_d)):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30
    return record(5, ok, f"{mismatches} mismatches over 200 (f, g) pairs in {elapsed:.1f}s")


# ---------------------------------------------------------------- criterion 6

DOCUMENTED = {
    "5": ({"P1": "1", "P2": "0", "P3": "1"}, "(F,F)", "(T,F)"),
    "12": ({"P1": "1", "P2": "0"}, "(T,F)", "(F,F)"),
    "14": ({"P1": "1", "P2": "0"}, "(T,F)", "(F,F)"),
}


def law_profile(schema, samples=200, seed=0):
    config = analysis.SamplingConfig(samples=samples, seed=seed)
    wrong = []
    for law in analysis.LAWS:
        v = analysis.check_law(law, schema, config)
        if law.id in DOCUMENTED:
            inst, lhs, rhs = DOCUMENTED[law.id]
            got = ({k: print_policy(x) for k, x in v.instantiation.items()}
                   if v.instantiation else None)
            if (v.status, got, str(v.lhs_pair), str(v.rhs_pair)) != ("counterexample", inst, lhs, rhs):
                wrong.append(f"law {law.id}: {v.status} {got} {v.lhs_pair} {v.rhs_pair}")
        elif v.status != "pass":
            inst = analysis.describe_instantiation(v.instantiation)
            wrong.append(f"law {law.id}: counterexample {inst}: {v.lhs_pair} vs {v.rhs_pair}")
    return wrong


def criterion_6():
    schema_path = DATA / "laws.schema"
    wrong = law_profile(parse_schema(schema_path.read_text()))
    proc = subprocess.run([sys.executable, "-m", "sepl", "laws", "--schema", str(schema_path)],
                          capture_output=True, text=True)
    cli_consistent = (proc.returncode == 0) == (not wrong)
    ok = not wrong and cli_consistent
    detail = "; ".join(wrong) if wrong else "profile met"
    return record(6, ok, f"{detail}; laws exit {proc.returncode}")


# ---------------------------------------------------------------- criterion 7


def criterion_7():
    start = time.perf_counter()
    schema = parse_schema((DATA / "secret.schema").read_text())
    doc = parse_xacml((DATA / "secret.xml").read_text())
    p = translate(doc, schema)
    phi = Guard((Box((Atom("resource.resource-id", "eq", "secret.txt"),)),))
    p1 = Rule(BOTTOM, Guard((Box((Atom("action.action-id", "eq", "write"),)),)))
    p2 = Rule(BOTTOM, Guard((Box((Atom("access-subject.subject-id", "eq", "Alice"),
                                  Atom("action.action-id", "eq", "read"))),)))
    shape_ok = p == Scope(phi, Seq(p1, p2))
    expected = {"alice_read": Decision.DENY, "bob_write": Decision.DENY,
                "bob_read": Decision.NOT_APPLICABLE}
    got = {k: decide(p, parse_request((DATA / f"{k}.req").read_text(), schema), schema)
           for k in expected}
    other = [decide(p, schema.request_for(pt), schema) for pt in schema.points()
             if dict(zip(schema.keys, pt))["resource.resource-id"] != "secret.txt"]
    elapsed = time.perf_counter() - start
    ok = (shape_ok and got == expected and set(other) == {Decision.NOT_APPLICABLE}
          and elapsed < 1.0)
    return record(7, ok, f"shape {'ok' if shape_ok else 'WRONG'}, "
                         f"{ {k: str(v) for k, v in got.items()} }, "
                         f"other resource {sorted(map(str, set(other)))}, {elapsed:.3f}s")


# ---------------------------------------------------------------- criterion 8


def criterion_8():
    rng = random.Random(11)
    domains = [list(a.values) + [UNKNOWN] for a in SCHEMA3.attributes]
    requests = [Request(dict(zip(SCHEMA3.keys, vals))) for vals in itertools.product(*domains)]
    violations = 0
    for _ in range(100):
        ps = [random_policy(rng, SCHEMA3, 4) for _ in range(rng.randint(1, 3))]
        for alg in ("deny-unless-permit", "permit-unless-deny"):
            term = expand_alg(alg, ps)
            for r in requests:
                if not decide(term, r, SCHEMA3).is_definite:
                    violations += 1
    return record(8, violations == 0,
                  f"{violations} non-definite decisions over 100 policies x {len(requests)} requests")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("n", range(1, 9))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    assert ok, detail


def main():
    failed = 0
    for n, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        failed += not ok
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

import itertools
from pathlib import Path

import pytest

import oracles
from sepl.errors import SchemaError, UnknownAlgorithm, XacmlError
from sepl.kernel import DecisionPair, TriValue, classify
from sepl.policy import (ONE, ZERO, Choice, Det, Dov, Ominus, Pov, Rule, Scope, Seq, Var,
                         children, print_policy)
from sepl.schema import BOTTOM, TOP, Atom, Box, Guard, parse_schema
from sepl.semantics import eval_term
from sepl.xacml import expand_alg, parse_xacml, translate

DATA = Path(__file__).resolve().parents[1] / "data"
SECRET = (DATA / "secret.xml").read_text()
SCHEMA = parse_schema("""
attribute access-subject.subject-id: enum {Alice, Bob}
attribute action.action-id: enum {read, write}
attribute resource.resource-id: enum {secret.txt, public.txt}
attribute environment.hour: int [0, 23]
""")


def match(value, category, attr, mid="string-equal"):
    return f"""<Match MatchId="{mid}"><AttributeValue>{value}</AttributeValue>
      <AttributeDesignator Category="{category}" AttributeId="{attr}"
        DataType="string" MustBePresent="false"/></Match>"""


def target(*matches):
    return "<Target><AnyOf><AllOf>" + "".join(matches) + "</AllOf></AnyOf></Target>"


def policy(rules, alg="first-applicable", tgt="<Target/>", pid="P"):
    return (f'<Policy PolicyId="{pid}" Version="2.0" RuleCombiningAlgId="{alg}">'
            f"{tgt}{rules}</Policy>")


def rule(effect, tgt="", cond="", rid="R"):
    return f'<Rule RuleId="{rid}" Effect="{effect}">{tgt}{cond}</Rule>'


def eq(key, value):
    return Guard((Box((Atom(key, "eq", value),)),))


def test_table5_parse():
    doc = parse_xacml(SECRET)
    p = doc.root
    assert (p.id, p.version, p.alg) == ("SimplePolicy1", "1.0", "first-applicable")
    assert len(p.target.any_of) == 1 and len(p.rules) == 2
    assert [r.effect for r in p.rules] == ["Deny", "Deny"]
    assert [r.id for r in p.rules] == ["SimpleRule1", "SimpleRule2"]
    assert "secret.txt" in p.description
    assert len(p.rules[1].target.any_of) == 2


def test_table5_translation():
    p = translate(parse_xacml(SECRET), SCHEMA)
    both = Guard((Box((Atom("access-subject.subject-id", "eq", "Alice"),
                       Atom("action.action-id", "eq", "read"))),))
    assert p == Scope(eq("resource.resource-id", "secret.txt"),
                      Seq(Rule(BOTTOM, eq("action.action-id", "write")), Rule(BOTTOM, both)))


def test_permit_rule_and_empty_target():
    doc = parse_xacml(policy(rule("Permit", target(match("read", "action", "action-id")))))
    assert translate(doc, SCHEMA) == Scope(TOP, Rule(eq("action.action-id", "read"), BOTTOM))


def test_urns_and_namespaces():
    ns = "urn:oasis:names:tc:xacml:3.0:core:schema:wd-17"
    text = f"""<x:Policy xmlns:x="{ns}" PolicyId="P" Version="1"
        RuleCombiningAlgId="urn:oasis:names:tc:xacml:1.0:rule-combining-algorithm:first-applicable">
      <x:Target/>
      <x:Rule RuleId="R" Effect="Deny"><x:Target><x:AnyOf><x:AllOf>
        <x:Match MatchId="urn:oasis:names:tc:xacml:1.0:function:string-equal">
          <x:AttributeValue DataType="http://www.w3.org/2001/XMLSchema#string">write</x:AttributeValue>
          <x:AttributeDesignator
            Category="urn:oasis:names:tc:xacml:3.0:attribute-category:action"
            AttributeId="urn:oasis:names:tc:xacml:1.0:action:action-id"
            DataType="http://www.w3.org/2001/XMLSchema#string" MustBePresent="true"/>
        </x:Match></x:AllOf></x:AnyOf></x:Target></x:Rule></x:Policy>"""
    doc = parse_xacml(text)
    assert doc.root.alg == "first-applicable"
    m = doc.root.rules[0].target.any_of[0][0][0]
    assert m.designator.key == "action.action-id" and m.designator.must_be_present
    assert translate(doc, SCHEMA) == Scope(TOP, Rule(BOTTOM, eq("action.action-id", "write")))


def test_integer_greater_than():
    doc = parse_xacml(policy(rule("Permit", target(
        match("17", "environment", "hour", "integer-greater-than")))))
    r = translate(doc, SCHEMA).body
    assert r.accept == Guard((Box((Atom("environment.hour", "gt", 17),)),))


def test_policy_set():
    text = f"""<PolicySet PolicySetId="S" Version="1" PolicyCombiningAlgId="only-one-applicable">
      {policy(rule("Permit"), pid="A")}
      {policy(rule("Deny"), pid="B")}
    </PolicySet>"""
    doc = parse_xacml(text)
    assert [c.id for c in doc.root.children] == ["A", "B"]
    p = translate(doc, SCHEMA)
    a, b = Scope(TOP, Rule(TOP, BOTTOM)), Scope(TOP, Rule(BOTTOM, TOP))
    assert p == Scope(TOP, Choice(Ominus(a, b), Ominus(b, a)))


@pytest.mark.parametrize("cond", [
    "<Condition>string-equal(action.action-id, read) and not string-equal("
    "access-subject.subject-id, Bob)</Condition>",
    """<Condition><Apply FunctionId="urn:oasis:names:tc:xacml:1.0:function:and">
         <Apply FunctionId="string-equal"><AttributeValue>read</AttributeValue>
           <AttributeDesignator Category="action" AttributeId="action-id"/></Apply>
         <Apply FunctionId="not"><Apply FunctionId="string-equal">
           <Apply FunctionId="string-one-and-only">
             <AttributeDesignator Category="access-subject" AttributeId="subject-id"/></Apply>
           <AttributeValue>Bob</AttributeValue></Apply></Apply>
       </Apply></Condition>""",
])
def test_conditions(cond):
    r = translate(parse_xacml(policy(rule("Permit", cond=cond))), SCHEMA).body
    assert r.accept == Guard((Box((Atom("action.action-id", "eq", "read"),
                                   Atom("access-subject.subject-id", "eq", "Alice"))),))


@pytest.mark.parametrize("text,exc,msg", [
    (policy(""), XacmlError, "at least one <Rule>"),
    (policy(rule("Permit"), alg="made-up"), UnknownAlgorithm, "unknown combining algorithm"),
    (policy(rule("Permit"), alg="only-one-applicable"), UnknownAlgorithm, "cannot combine rules"),
    (policy(rule("Permit", target(match("x", "action", "action-id", "string-less")))),
     XacmlError, "unsupported MatchId"),
    (policy(rule("Permit", "<Obstacle/>")), XacmlError, "not allowed"),
    (policy(rule("Maybe")), XacmlError, "Effect"),
    ("<Policy PolicyId='P'", XacmlError, "malformed XML"),
    (policy(rule("Permit", cond="<Condition>string-equal(a, b</Condition>")), XacmlError,
     "condition"),
])
def test_parse_errors(text, exc, msg):
    with pytest.raises(exc) as info:
        parse_xacml(text, source="bad.xml")
    assert msg in str(info.value)
    assert str(info.value).startswith("bad.xml:1:")


def test_error_line_numbers():
    text = SECRET.replace('RuleId= "SimpleRule2" Effect="Deny"', 'RuleId="SimpleRule2" Effect="Nope"')
    with pytest.raises(XacmlError) as info:
        parse_xacml(text)
    assert info.value.line == 34


@pytest.mark.parametrize("m", [
    match("Carol", "access-subject", "subject-id"),
    match("x", "subject", "role"),
    match("late", "environment", "hour", "integer-equal"),
])
def test_translation_errors(m):
    with pytest.raises(SchemaError) as info:
        translate(parse_xacml(policy(rule("Permit", target(m)))), SCHEMA)
    assert info.value.line == 1


def test_expand_alg_examples():
    p1, p2 = Var("P1"), Var("P2")
    assert expand_alg("first-applicable", [p1, p2]) == Seq(p1, p2)
    assert expand_alg("deny-unless-permit", [p1, p2]) == Seq(Det(Pov(p1, p2)), ZERO)
    assert expand_alg("permit-unless-deny", [p1, p2]) == Seq(Det(Dov(p1, p2)), ONE)
    assert expand_alg("only-one-applicable", [p1, p2]) == Choice(Ominus(p1, p2), Ominus(p2, p1))
    assert expand_alg("ordered-permit-overrides", [p1, p2]) == expand_alg("permit-overrides", [p1, p2])
    with pytest.raises(ValueError):
        expand_alg("first-applicable", [])
    with pytest.raises(UnknownAlgorithm):
        expand_alg("made-up", [p1])


ALLOWED = (Scope, Rule, Seq, Pov, Dov, Choice, Ominus, Det, type(ZERO), type(ONE))


def _nodes(p):
    yield p
    for c in children(p):
        yield from _nodes(c)


@pytest.mark.parametrize("alg", ["deny-overrides", "permit-overrides", "first-applicable",
                                 "ordered-permit-overrides", "deny-unless-permit",
                                 "permit-unless-deny", "only-one-applicable"])
def test_closed_image(alg):
    inner = policy(rule("Permit", rid="a") + rule("Deny", rid="b"), pid="in")
    text = (f'<PolicySet PolicySetId="S" Version="1" PolicyCombiningAlgId="{alg}">'
            f"{inner}{inner}</PolicySet>")
    p = translate(parse_xacml(text), SCHEMA)
    assert all(isinstance(n, ALLOWED) for n in _nodes(p))


def test_translation_prints_and_keeps_ids():
    doc = parse_xacml(policy(rule("Permit", rid="r-1"), pid="urn:example:p", alg="deny-overrides"))
    assert (doc.root.id, doc.root.version, doc.root.rules[0].id) == ("urn:example:p", "2.0", "r-1")
    assert print_policy(translate(doc, SCHEMA)) == "{}: <{}, none>"


# Encodings reachable from rule-built policies: (T,U) and (U,T) never occur.
REACHABLE = [e for e in oracles.ENCODINGS if e not in ((2, 1), (1, 2))]


def _matrix(alg, oracle, encodings):
    term = expand_alg(alg, [Var("P1"), Var("P2")])
    bad = []
    for e1, e2 in itertools.product(encodings, repeat=2):
        pair = lambda e: DecisionPair(TriValue(e[0]), TriValue(e[1]))
        got = classify(eval_term(term, {"P1": pair(e1), "P2": pair(e2)})).value
        if got not in oracle([oracles.CLASS[e1], oracles.CLASS[e2]]):
            bad.append((e1, e2, got))
    return bad


@pytest.mark.parametrize("alg", ["permit-overrides", "deny-overrides", "only-one-applicable",
                                 "deny-unless-permit", "permit-unless-deny"])
def test_conformance_on_reachable_encodings(alg):
    assert _matrix(alg, oracles.ORACLES[alg], REACHABLE) == []


def test_first_applicable_matches_extended_indeterminate():
    fa = oracles.possible_worlds(oracles.first_applicable)
    assert _matrix("first-applicable", fa, oracles.ENCODINGS) == []


def test_dup_pud_literal_on_all_encodings():
    for alg in ("deny-unless-permit", "permit-unless-deny"):
        assert _matrix(alg, oracles.ORACLES[alg], oracles.ENCODINGS) == []

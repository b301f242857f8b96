"""Command-line entry point: ``sepl <subcommand> ...``.

Exit codes: 0 success, 1 input error (with location), 2 usage error,
3 a check that ran but failed (incomplete or conflicting policy, law
profile mismatch).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import analysis
from .errors import CapExceeded, InputError, SeplError
from .policy import Binary, Policy, Scope, parse_policy, print_policy
from .schema import AttributeSchema, parse_request, parse_schema
from .semantics import decide, eval_rel
from .xacml import component_ids, parse_xacml, translate, translate_children

FORMAT_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_USAGE, EXIT_CHECK = 0, 1, 2, 3


@dataclass
class CommandConfig:
    command: str
    inputs: list = field(default_factory=list)
    schema: str | None = None
    request: str | None = None
    output: str | None = None
    format: str = "text"
    metric: str = "hamming"
    samples: int = 200
    seed: int = 0

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "CommandConfig":
        inputs = [getattr(ns, k) for k in ("policy", "left", "right") if getattr(ns, k, None)]
        return cls(ns.command, inputs, ns.schema, getattr(ns, "request", None),
                   getattr(ns, "output", None), ns.format, getattr(ns, "metric", "hamming"),
                   getattr(ns, "samples", 200), getattr(ns, "seed", 0))


class Output:
    """Either plain text lines or a versioned stream of JSON records."""

    def __init__(self, fmt: str, command: str, stream=None):
        self.fmt, self.stream = fmt, stream or sys.stdout
        if fmt == "structured":
            self._emit({"format": "sepl", "version": FORMAT_VERSION, "command": command})

    def _emit(self, record):
        self.stream.write(json.dumps(record, sort_keys=True) + "\n")

    def record(self, kind: str, text: str | None = None, **fields):
        if self.fmt == "structured":
            self._emit({"kind": kind, **fields})
        elif text is not None:
            self.stream.write(text + "\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", source=path) from None


def load_schema(path: str) -> AttributeSchema:
    return parse_schema(_read(path), source=path)


def load_policy(path: str, schema: AttributeSchema) -> Policy:
    text = _read(path)
    if path.lower().endswith(".xml"):
        return translate(parse_xacml(text, path), schema)
    return parse_policy(text, schema, source=path, allow_vars=False)


def load_components(path: str, schema: AttributeSchema, policy: Policy):
    """Named top-level components, used for the pairwise overlap report."""
    if path.lower().endswith(".xml"):
        doc = parse_xacml(_read(path), path)
        return component_ids(doc), translate_children(doc, schema)
    guard, body = None, policy
    while isinstance(body, Scope):
        guard, body = body.guard, body.body
    parts = _flatten(body, type(body)) if isinstance(body, Binary) else [body]
    if guard is not None:
        parts = [Scope(guard, p) for p in parts]
    return [f"#{i + 1}" for i in range(len(parts))], parts


def _flatten(p, cls):
    if type(p) is cls:
        return _flatten(p.left, cls) + [p.right]
    return [p]


def _point(schema: AttributeSchema, point) -> dict:
    return dict(zip(schema.keys, point))


def _fmt_point(schema, point) -> str:
    return "{" + ", ".join(f"{k}={v}" for k, v in zip(schema.keys, point)) + "}"


def _decimal(x: Fraction) -> str:
    s = f"{float(x):.6f}".rstrip("0").rstrip(".")
    return s or "0"


# --------------------------------------------------------------------------
# subcommands


def cmd_translate(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    p = translate(parse_xacml(_read(cfg.inputs[0]), cfg.inputs[0]), schema)
    text = print_policy(p)
    if cfg.output:
        Path(cfg.output).write_text(text + "\n", encoding="utf-8")
        out.record("written", None, path=cfg.output)
    else:
        out.record("policy", text, text=text)
    return EXIT_OK


def cmd_eval(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    p = load_policy(cfg.inputs[0], schema)
    req = parse_request(_read(cfg.request), schema, source=cfg.request)
    pair = eval_rel(p, req, schema)
    d = decide(p, req, schema)
    out.record("decision", str(d), decision=str(d), accept=str(pair.accept), deny=str(pair.deny))
    return EXIT_OK


def _region(out, schema, kind, label, summary):
    pts = [_point(schema, w) for w in summary.samples]
    text = f"{label}: {summary.count} point(s)"
    if summary.samples:
        text += "; e.g. " + ", ".join(_fmt_point(schema, w) for w in summary.samples)
    out.record(kind, text, size=summary.count, witnesses=pts)


def cmd_analyze(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    path = cfg.inputs[0]
    p = load_policy(path, schema)
    report = analysis.incompleteness(p, schema)
    names, parts = load_components(path, schema, p)
    pairwise = analysis.conflict_report(parts, schema)
    out.record("domain", f"domain: {schema.size} point(s)", size=schema.size)
    _region(out, schema, "not_applicable", "not applicable", report.not_applicable)
    _region(out, schema, "indeterminate", "indeterminate", report.indeterminate)
    _region(out, schema, "conflict", "conflict (accept and deny)", report.conflict)
    for o in pairwise.overlaps:
        a, b = names[o.left], names[o.right]
        text = (f"overlap {a} / {b}: {o.overlap.count} point(s), "
                f"{o.conflicting.count} with opposite decisions")
        out.record("overlap", text, left=a, right=b, size=o.overlap.count,
                   conflicting=o.conflicting.count,
                   witnesses=[_point(schema, w) for w in o.overlap.samples])
    complete = report.complete
    conflict_free = report.conflict_free and pairwise.conflict_free
    out.record("summary", f"complete: {'yes' if complete else 'no'}; "
                          f"conflict-free: {'yes' if conflict_free else 'no'}",
               complete=complete, conflict_free=conflict_free)
    return EXIT_OK if complete and conflict_free else EXIT_CHECK


def cmd_compare(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    p, q = (load_policy(x, schema) for x in cfg.inputs)
    rep = analysis.compare(p, q, schema)
    out.record("relation", str(rep.relation), relation=str(rep.relation),
               applicability_disjoint=rep.applicability_disjoint)
    for name, pts in rep.witnesses.items():
        out.record("witness", None, inclusion=name, witnesses=[_point(schema, w) for w in pts])
    return EXIT_OK


def cmd_distance(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    p, q = (load_policy(x, schema) for x in cfg.inputs)
    d = analysis.distance(p, q, schema, cfg.metric)
    out.record("distance", _decimal(d), metric=cfg.metric, value=_decimal(d),
               exact=f"{d.numerator}/{d.denominator}")
    return EXIT_OK


def cmd_laws(cfg: CommandConfig, out: Output) -> int:
    schema = load_schema(cfg.schema)
    config = analysis.SamplingConfig(samples=cfg.samples, seed=cfg.seed)
    ok = True
    for law in analysis.LAWS:
        v = analysis.check_law(law, schema, config)
        ok &= v.as_expected
        mark = "ok" if v.as_expected else "UNEXPECTED"
        fields = dict(id=law.id, status=v.status, expected=law.expected, checked=v.checked,
                      lhs=law.lhs, rhs=law.rhs)
        text = f"law {law.id}: {law.lhs} = {law.rhs}: {v.status} [{mark}]"
        if v.status == "counterexample":
            inst = analysis.describe_instantiation(v.instantiation)
            text += (f"\n    at {inst or '(no variables)'}, point {_fmt_point(schema, v.point)}:"
                     f" lhs {v.lhs_pair}, rhs {v.rhs_pair}")
            fields.update(instantiation={k: print_policy(x) for k, x in v.instantiation.items()},
                          point=_point(schema, v.point), lhs_pair=str(v.lhs_pair),
                          rhs_pair=str(v.rhs_pair))
        out.record("law", text, **fields)
    out.record("summary", f"profile: {'as expected' if ok else 'MISMATCH'}", as_expected=ok)
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {"translate": cmd_translate, "eval": cmd_eval, "analyze": cmd_analyze,
            "compare": cmd_compare, "distance": cmd_distance, "laws": cmd_laws}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepl", description="Policy algebra toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and details")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--schema", required=True, help="attribute schema file")
        sp.add_argument("--format", choices=("text", "structured"), default="text")
        return sp

    sp = add("translate", "convert an XACML document to policy syntax")
    sp.add_argument("policy", help="XACML file")
    sp.add_argument("-o", "--output", help="write the policy here instead of stdout")

    sp = add("eval", "decide one request")
    sp.add_argument("policy", help=".sepl or .xml policy")
    sp.add_argument("--request", required=True, help="request file")

    sp = add("analyze", "report gaps, indeterminacy and conflicts")
    sp.add_argument("policy")

    for name, help_ in (("compare", "order two policies"),
                        ("distance", "measure how far apart two policies are")):
        sp = add(name, help_)
        sp.add_argument("left")
        sp.add_argument("right")
        if name == "distance":
            sp.add_argument("--metric", choices=("hamming", "jaccard"), default="hamming")

    sp = add("laws", "check the algebraic law catalog")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR,
                        format="%(levelname)s: %(message)s")
    cfg = CommandConfig.from_args(ns)
    out = Output(cfg.format, cfg.command)
    try:
        return COMMANDS[cfg.command](cfg, out)
    except (InputError, CapExceeded, SeplError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

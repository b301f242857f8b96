"""Print the 8x8 decision matrix of each combining algorithm.

Cells show the decision class produced by the algebraic expansion; a
trailing ``!`` marks disagreement with the literal XACML prose and ``~``
marks cells only the extended-Indeterminate reading accepts.

    python scripts/conformance_matrix.py [--alg first-applicable]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import oracles  # noqa: E402
from sepl.kernel import DecisionPair, TriValue, classify  # noqa: E402
from sepl.policy import Var  # noqa: E402
from sepl.semantics import eval_term  # noqa: E402
from sepl.xacml import expand_alg  # noqa: E402

SHORT = {"PERMIT": "P", "DENY": "D", "NOT_APPLICABLE": "NA", "INDETERMINATE_P": "IP",
         "INDETERMINATE_D": "ID", "INDETERMINATE_PD": "IPD"}


def label(e):
    return "(" + ",".join("F?T"[v] for v in e) + ")"


def matrix(alg):
    term = expand_alg(alg, [Var("P1"), Var("P2")])
    literal = oracles.ORACLES[alg]
    worlds = oracles.possible_worlds(literal)
    rows, bad = [], 0
    for e1 in oracles.ENCODINGS:
        row = []
        for e2 in oracles.ENCODINGS:
            pair = lambda e: DecisionPair(TriValue(e[0]), TriValue(e[1]))
            got = classify(eval_term(term, {"P1": pair(e1), "P2": pair(e2)})).value
            ds = [oracles.CLASS[e1], oracles.CLASS[e2]]
            mark = ""
            if got not in literal(ds):
                bad += 1
                mark = "~" if got in worlds(ds) else "!"
            row.append(SHORT[got] + mark)
        rows.append(row)
    return rows, bad


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alg", choices=sorted(oracles.ORACLES))
    args = ap.parse_args()
    algs = [args.alg] if args.alg else list(oracles.ORACLES)
    for alg in algs:
        rows, bad = matrix(alg)
        print(f"\n{alg}: {bad} cell(s) differ from the literal prose")
        print(" " * 8 + "".join(f"{label(e):>7}" for e in oracles.ENCODINGS))
        for e, row in zip(oracles.ENCODINGS, rows):
            print(f"{label(e):>8}" + "".join(f"{c:>7}" for c in row))


if __name__ == "__main__":
    main()

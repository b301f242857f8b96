"""Check the algebraic law catalog over several seeds and schemas.

    python scripts/law_catalog.py --samples 200 --seeds 0 1 2
"""

import argparse
from pathlib import Path

from sepl.analysis import LAWS, SamplingConfig, check_law, describe_instantiation
from sepl.schema import parse_schema

DATA = Path(__file__).resolve().parents[1] / "data"


def main():
    ap = argparse.ArgumentParser(description="law catalog sweep")
    ap.add_argument("--schema", default=str(DATA / "laws.schema"))
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    schema = parse_schema(Path(args.schema).read_text())
    for law in LAWS:
        verdicts = [check_law(law, schema, SamplingConfig(args.samples, seed)) for seed in args.seeds]
        statuses = {v.status for v in verdicts}
        first = next((v for v in verdicts if v.status == "counterexample"), None)
        line = f"{law.id:>5}  {law.lhs:<22} = {law.rhs:<22} {'/'.join(sorted(statuses)):<15}"
        line += f" expected {law.expected}"
        if first:
            line += f"  [{describe_instantiation(first.instantiation)}: {first.lhs_pair} vs {first.rhs_pair}]"
        print(line)


if __name__ == "__main__":
    main()

"""Run all four integrals on every catalog entry and print the implication-lattice table."""

import argparse
import json
import sys

from gaugelab import catalog as cat
from gaugelab import runner


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=None, help="default: each entry's own")
    ap.add_argument("--json", help="also write all reports to this file")
    args = ap.parse_args(argv)
    methods = ("henstock", "mcshane", "birkhoff", "pettis")
    print(f"{'entry':<20}" + "".join(f"{m:>10}" for m in methods) + "   lattice")
    docs, worst = [], 0
    for name in cat.names():
        doc = runner.compare(name, args.tol)
        docs.append(doc)
        flags = "".join(f"{'yes' if doc['converged'][m] else 'no':>10}" for m in methods)
        note = "ok" + (" (vacuous)" if doc["vacuous"] else "") if doc["lattice_ok"] else \
            "VIOLATED: " + "; ".join(doc["lattice_violations"])
        print(f"{name:<20}{flags}   {note}")
        worst = max(worst, 0 if doc["lattice_ok"] else 1)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(docs, fh, indent=2)
    return worst


if __name__ == "__main__":
    sys.exit(main())

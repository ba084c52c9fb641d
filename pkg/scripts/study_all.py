"""Write a convergence-study CSV for every catalog entry and gauge method.

    python3 scripts/study_all.py --out results/studies --levels 6
"""

import argparse
import sys

from gaugelab import catalog as cat
from gaugelab import runner


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/studies")
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--methods", default="henstock,mcshane,birkhoff")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    for name in cat.names():
        for method in args.methods.split(","):
            cfg = runner.RunConfig(command="study", example=name, method=method,
                                   max_levels=args.levels, seed=args.seed, out=args.out)
            out = runner.run(cfg)
            print(f"{out.code}  {out.message}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

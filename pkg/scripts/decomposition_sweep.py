"""Closure defects of Gamma = f + G over entries, selections and modes."""

import argparse
import sys

from gaugelab import catalog as cat
from gaugelab import selections as sl


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-5)
    ap.add_argument("--entries", default="growing_interval,scaled_square,rotating_segment")
    args = ap.parse_args(argv)
    failed = 0
    print(f"{'entry':<18}{'selection':<10}{'mode':<18}{'closure':>10}{'zero':>6}  passed")
    for name in args.entries.split(","):
        G = cat.get(name).multifunction
        for kind in ("steiner", "extreme"):
            for mode in ("h-to-ms", "hcal-to-birkhoff", "vh-to-birkhoff"):
                r = sl.decomposition_verify(G, kind, mode, args.tol)
                print(f"{name:<18}{kind:<10}{mode:<18}{r.closure_defect:>10.2e}"
                      f"{r.zero_fraction:>6.2f}  {r.passed}")
                failed += r.passed is not True
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``gaugelab <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys

from . import runner


class _Parser(argparse.ArgumentParser):
    # argparse's own exit code 2 would read as non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(runner.EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gaugelab", description=__doc__)
    ap.add_argument("command", choices=runner.COMMANDS)
    ap.add_argument("--example")
    ap.add_argument("--method", help="henstock, henstock-step, mcshane, birkhoff or pettis")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--max-levels", type=int, dest="max_levels")
    ap.add_argument("--directions", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--selection", help="steiner, extreme or extreme:u1,u2")
    ap.add_argument("--mode", help="h-to-ms (alias hk-to-ms), hcal-to-birkhoff, vh-to-birkhoff")
    ap.add_argument("--set", help="union of intervals, e.g. 0:0.25,0.5:1")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--out", help="output directory, or a .json path")
    ap.add_argument("--config", help="ini file with a [run] section")
    ap.add_argument("--print", action="store_true", dest="print_json",
                    help="print the JSON result to stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "print_json")}
    try:
        file_cfg = runner.load_config(args.config) if args.config else {}
        file_cfg.pop("command", None)
        cfg = runner.merge(file_cfg, flags)
    except (runner.ConfigError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return runner.EXIT_INVALID
    out = runner.run(cfg)
    stream = sys.stderr if out.code == runner.EXIT_INVALID else sys.stdout
    print(out.message, file=stream)
    if args.print_json:
        print(json.dumps(out.doc, indent=2))
    return out.code


if __name__ == "__main__":
    sys.exit(main())

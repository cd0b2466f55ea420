"""Command line entry point: ``subdyn run`` and ``subdyn study``."""

import argparse
import os
import sys

from .errors import SchemaError, SubdynError
from .scenario import dumps, run_scenario
from .study import refinement_study, to_csv


def _parser():
    p = argparse.ArgumentParser(prog="subdyn", description="Submeasure dynamics on finite models.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or builtin")
    run.add_argument("scenario", help="path to a scenario JSON file, or one of: blowup, cremona, "
                                      "picard, goldenmean, fullshift, battery")
    run.add_argument("--delta", type=float)
    run.add_argument("--tol", type=float)
    run.add_argument("--n-max", type=int, dest="n_max")
    run.add_argument("--cap", type=int)
    run.add_argument("--words-L", type=int, dest="words_L")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--fibers", type=int, help="fiber size for the blowup builtin")
    run.add_argument("--symbols", type=int, help="alphabet size for the fullshift builtin")
    run.add_argument("--points", type=int, help="space size for the picard builtin")

    study = sub.add_parser("study", help="refinement study across resolutions")
    study.add_argument("scenario", help="picard, fullshift, blowup, or a scenario JSON file")
    study.add_argument("--resolutions", required=True, help="comma separated, e.g. 3,4,5")
    study.add_argument("--out", required=True, help="CSV output path")
    return p


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            overrides = {k: getattr(args, k) for k in ("delta", "tol", "n_max", "cap", "words_L", "seed")}
            report, artifacts = run_scenario(args.scenario, overrides, fibers=args.fibers,
                                             symbols=args.symbols, points=args.points)
            text = dumps(report)
            if args.out:
                _write(args.out, text)
                stem = os.path.splitext(args.out)[0]
                for idx, res in sorted(artifacts.items()):
                    _write(f"{stem}.exp{idx}.trace.csv", res.trace_csv())
            else:
                sys.stdout.write(text)
            if not report["passed"]:
                for fail in report.get("failures", []):
                    print(f"assertion failed: {fail}", file=sys.stderr)
            return 0 if report["passed"] else 1
        resolutions = [float(r) if "." in r else int(r) for r in args.resolutions.split(",") if r]
        _write(args.out, to_csv(refinement_study(args.scenario, resolutions)))
        return 0
    except SchemaError as exc:
        print(f"schema error at {exc.pointer or '/'}: {exc}", file=sys.stderr)
        return 2
    except (SubdynError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

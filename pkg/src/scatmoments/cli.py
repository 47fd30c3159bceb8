"""``scatter`` command line: run presets or config sweeps, fit slopes.

Exit status is 0 only when every check passes.  On failure a JSON object
``{"status": "fail", "failures": [...]}`` is printed to stderr.
"""

import argparse
import json
import os
import sys

from .experiments import DEFAULT_SEED, PRESETS, ConfigError, run_config, run_preset
from .fitting import TooFewPointsError, fit_slope

EXIT_FAIL = 1
EXIT_USAGE = 2


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="scatter", description="Scattering moment experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a JSON config")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="path to a JSON experiment config")
    run.add_argument("--seed", type=_seed, default=None, help=f"master seed (preset default {DEFAULT_SEED})")
    run.add_argument("--out", default=None, help="output directory (default: current directory)")

    fit = sub.add_parser("fit", help="log-log slope of estimate against scale")
    fit.add_argument("--csv", required=True)
    fit.add_argument("--where", default="", help='row filter, e.g. "process=poisson, p=1"')
    fit.add_argument("--max-rel-se", type=float, default=0.2)
    return parser


def _fail(payload, code=EXIT_FAIL):
    print(json.dumps(dict(status="fail", **payload), sort_keys=True), file=sys.stderr)
    return code


def _cmd_run(args):
    if args.preset:
        result = run_preset(args.preset, DEFAULT_SEED if args.seed is None else args.seed)
        out = args.out or "."
    else:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            return _fail({"failures": [{"pointer": "", "message": str(err)}]}, EXIT_USAGE)
        name = os.path.splitext(os.path.basename(args.config))[0]
        try:
            result = run_config(cfg, seed=args.seed, name=cfg.get("name", name) if isinstance(cfg, dict) else name)
        except ConfigError as err:
            return _fail({"failures": [{"pointer": p, "message": m} for p, m in err.errors]}, EXIT_USAGE)
        out = args.out or (cfg.get("output") if isinstance(cfg, dict) else None) or "."
    csv_path, sum_path = result.write(out)
    print(json.dumps({"status": "pass" if result.passed else "fail", "csv": csv_path, "summary": sum_path}))
    if not result.passed:
        return _fail({"experiment": result.name, "failures": result.failures})
    return 0


def _cmd_fit(args):
    try:
        fit = fit_slope(args.csv, args.where, max_rel_se=args.max_rel_se)
    except (TooFewPointsError, KeyError, ValueError, OSError) as err:
        return _fail({"failures": [{"message": str(err)}]})
    print(json.dumps(fit.as_dict(), indent=2))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_fit(args)


if __name__ == "__main__":
    sys.exit(main())

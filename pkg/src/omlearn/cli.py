"""Command-line entry point: ``omlearn {run,compare,check-bounds,check-lemmas}``.

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
A failed check exits 1 only when ``--strict`` is given.
"""

import argparse
import json
import sys

from .config import PRESETS, build_config, load_config
from .exceptions import InputError, NumericError, ParameterError
from . import runner

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _add_config_args(p):
    p.add_argument("--config", help="YAML/JSON experiment config")
    p.add_argument("--preset", default="default", choices=sorted(PRESETS))
    p.add_argument("--T", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--family")
    p.add_argument("--dim", type=int)
    p.add_argument("--domain-radius", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--b1", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--n-seeds", type=int, help="shorthand for --seeds 0 .. N-1")
    p.add_argument("--inner-mode", choices=["exact", "sampled"])
    p.add_argument("--batch-size", type=int)
    p.add_argument("--stream", dest="stream_file", help="replay tasks from a stream file")
    p.add_argument("--output-dir", "-o")
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-baselines", action="store_true")


def _config_from_args(args):
    overrides = {
        key: getattr(args, key)
        for key in ("T", "m", "family", "dim", "domain_radius", "alpha", "eta", "b1", "sigma",
                    "delta", "seeds", "inner_mode", "batch_size", "stream_file", "output_dir", "jobs")
        if getattr(args, key) is not None
    }
    if args.n_seeds is not None:
        overrides["seeds"] = list(range(args.n_seeds))
    if args.no_baselines:
        overrides["baselines"] = []
    if args.config:
        return load_config(args.config, args.preset, overrides)
    return build_config(args.preset, None, overrides)


def cmd_run(args):
    config = _config_from_args(args)
    summaries = runner.run_experiment(config)
    for s in summaries:
        print(f"seed={s['seed']} R_m(T)={s['regret']:.6g} bound={s['bound']:.6g} "
              f"mean_test_loss={json.dumps(s['mean_test_loss'])}")
    print(f"wrote {len(summaries)} run(s) to {config.output_dir}")
    return EXIT_OK


def cmd_compare(args):
    header, rows = runner.compare(args.dirs, args.out)
    if args.out is None:
        print(",".join(header))
        for row in rows:
            print(",".join(runner._fmt(v) for v in row))
    else:
        print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_check_bounds(args):
    report = runner.check_bounds(args.run_dir, args.delta)
    for r in report["runs"]:
        print(f"seed={r['seed']} R_m(T)={r['regret']:.6g} bound={r['bound']:.6g} "
              f"{'VIOLATED' if r['violated'] else 'ok'}")
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{status}: violation fraction {report['violation_fraction']:.3f} "
          f"(allowed {report['delta']}) over {report['n_runs']} run(s)")
    return EXIT_CHECK_FAILED if args.strict and not report["passed"] else EXIT_OK


def cmd_check_lemmas(args):
    config = _config_from_args(args)
    report = runner.check_lemmas(config, args.run_dir, n_draws=args.draws, seed=args.check_seed)
    print(json.dumps(report, indent=2, default=float))
    passed = report["lemma2"]["passed"] and report["lemma4"]["passed"]
    if "lemma3" in report:
        passed = passed and not report["lemma3"]["exceeded"]
    return EXIT_CHECK_FAILED if args.strict and not passed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="omlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the online meta-learner and baselines")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate per-round test loss across run directories")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check-bounds", help="compare local regret with the high-probability bound")
    p.add_argument("run_dir")
    p.add_argument("--delta", type=float)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_check_bounds)

    p = sub.add_parser("check-lemmas", help="Monte-Carlo checks of the supporting lemmas")
    p.add_argument("run_dir", nargs="?", help="run directory whose traces feed the telescoping check")
    _add_config_args(p)
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--check-seed", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_check_lemmas)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

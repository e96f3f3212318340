"""Command line interface: run experiments, validate, inspect presets."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys


def _apply_thread_cap() -> None:
    """Honor LSM_THREADS by capping BLAS pools before numpy loads."""
    threads = os.environ.get("LSM_THREADS")
    if not threads:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, threads)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true",
                        help="log at INFO level")
    parser = argparse.ArgumentParser(
        prog="passivelsm",
        description="Sound-soft obstacle reconstruction from passive "
        "cross-correlation measurements by the linear sampling method.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="run an experiment and write outputs")
    p_run.add_argument("--preset", help="preset name, e.g. kite-C or setup2(800)")
    p_run.add_argument("--config", help="INI config file (overrides the preset)")
    p_run.add_argument("--seed", type=int, help="master seed override")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config entry (repeatable)")

    p_val = sub.add_parser("validate", parents=[common],
                           help="run a verification suite")
    p_val.add_argument("--suite", default="all",
                       help="suite name (default: all)")
    p_val.add_argument("--out", help="write the JSON report here")

    p_info = sub.add_parser("info", parents=[common],
                            help="print a resolved preset config")
    p_info.add_argument("--preset", required=True)
    return parser


def _load_config(args):
    from . import pipeline

    if args.config:
        with open(args.config) as fh:
            cfg = pipeline.ExperimentConfig.from_ini(fh.read())
    elif args.preset:
        cfg = pipeline.preset(args.preset)
    else:
        raise SystemExit("run requires --preset or --config")
    for item in args.overrides:
        key, _, value = item.partition("=")
        if not _ or not key.strip():
            raise SystemExit(f"malformed --set {item!r}; expected SECTION.KEY=VALUE")
        cfg.apply_override(key.strip(), value.strip())
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    _apply_thread_cap()
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "run":
        from . import pipeline

        cfg = _load_config(args)
        try:
            manifest = pipeline.run(cfg, args.out)
        except pipeline.PipelineError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {args.out} (delta={manifest.delta:.6e})")
        return 0

    if args.command == "validate":
        from . import validate

        try:
            report = validate.run_suite(args.suite)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for entry in report["results"]:
            tag = "PASS" if entry["passed"] else "FAIL"
            print(f"{tag} criterion {entry['cid']:2d} [{entry['name']}] "
                  f"({entry['seconds']:.1f}s)")
        text = json.dumps(report, indent=2, default=str)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0

    if args.command == "info":
        from . import pipeline

        print(pipeline.preset(args.preset).to_ini(), end="")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())

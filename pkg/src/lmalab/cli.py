"""Command line entry point.

Exit codes: 0 when every configured check passed or was explicitly
skipped, 1 when any check failed, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .harness import (
    SCENARIOS,
    list_scenarios,
    load_config_file,
    resolve_config,
    run_scenario,
)
from .reports import FAIL, PASS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmalab",
        description="numerical laboratory for degenerate-operator potential estimates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its report")
    run_p.add_argument("scenario", help="scenario id (see: lmalab list)")
    run_p.add_argument("--config", default=None, help="YAML file with config overrides")
    run_p.add_argument("--out", default=None, help="output directory for report.json and tables/")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    sub.add_parser("list", help="print the scenario catalog")

    val_p = sub.add_parser("validate", help="check a config file without running anything")
    val_p.add_argument("scenario", help="scenario id the config applies to")
    val_p.add_argument("--config", default=None, help="YAML file with config overrides")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for name, anchor in list_scenarios():
            print(f"{name:28s} {anchor}")
        return 0

    try:
        overrides = load_config_file(args.config) if getattr(args, "config", None) else {}
        cfg = resolve_config(
            args.scenario,
            overrides,
            out_dir=getattr(args, "out", None),
            seed=getattr(args, "seed", None),
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"config ok: scenario {cfg.scenario}, dim {cfg.dim}, resolution {cfg.resolution}")
        return 0

    bundle = run_scenario(cfg)
    for rep in bundle.reports:
        marker = "PASS" if rep.status == PASS else ("FAIL" if rep.status == FAIL else "SKIP")
        extra = "" if rep.status in (PASS, FAIL) else f" ({rep.status})"
        print(f"[{marker}] {rep.check_id}: min_constant={rep.min_constant!r}{extra}")
    summary = bundle.summary()
    print(
        f"{cfg.scenario}: {summary['pass']} passed, {summary['fail']} failed, "
        f"{summary['skipped']} skipped -> {cfg.out_dir}/report.json"
    )
    return 1 if bundle.failed else 0


if __name__ == "__main__":
    sys.exit(main())

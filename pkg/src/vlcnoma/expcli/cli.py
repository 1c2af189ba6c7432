"""``simulate`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, apply_overrides, defaults_text, parse_config
from .output import emit_csv, emit_plotdata
from .sweep import SweepError, run_sweep

log = logging.getLogger("vlcnoma")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Run NOMA-VLC sweeps over user counts, tuning scenarios and power allocations.",
    )
    p.add_argument("--config", help="INI config file; omitted keys take their defaults")
    p.add_argument("--seed", type=int, help="base seed of the sweep")
    p.add_argument("--users", help="user counts, e.g. 2..8 or 2,4,6")
    p.add_argument("--scenario", action="append", help="none|angle|fov|fov-ho (repeatable)")
    p.add_argument("--alloc", action="append", help="static:<alpha>|grpa (repeatable)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--print-config", action="store_true", help="print all defaults and exit")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.print_config:
        sys.stdout.write(defaults_text())
        return 0
    try:
        spec = parse_config(args.config)
        spec = apply_overrides(
            spec,
            seed=args.seed,
            users=args.users,
            scenarios=args.scenario,
            allocations=args.alloc,
            out=args.out,
            jobs=args.jobs,
        )
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return 2

    def progress(done, total):
        if done == total or done % 50 == 0:
            log.info("%d/%d points", done, total)

    try:
        rows = run_sweep(spec, progress)
        csv_path = emit_csv(rows, spec.out_dir / "results.csv")
        plots = emit_plotdata(rows, spec.out_dir)
    except (SweepError, OSError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s (%d rows) and %d plot-data files", csv_path, len(rows), len(plots))
    return 0


if __name__ == "__main__":
    sys.exit(main())

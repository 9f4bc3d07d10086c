"""Command-line entry point: ``dcgle run CONFIG [--out DIR] [--scenario NAME] ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .artifacts import FIGURE_TAGS, emit_plot_script, write_artifact
from .config import SCENARIOS, parse_config
from .errors import ConfigError, DcgleError
from .scenarios import ScenarioFailure, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

log = logging.getLogger("dcgle")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcgle", description="Plane waves of the delayed cubic-quintic CGLE.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("config", help="path to a sectioned key=value config")
    r.add_argument("--out", help="output directory (overrides [run] out)")
    r.add_argument("--scenario", choices=SCENARIOS, help="override [run] scenario")
    r.add_argument("--threads", type=int, default=1, help="worker processes for grid scenarios")
    r.add_argument("--certify-roots", action="store_true", help="argument-principle check of rightmost roots")
    r.add_argument("--plot-scripts", action="store_true", help="also write a matplotlib script per artifact")
    r.add_argument("-v", "--verbose", action="store_true")
    return ap


def _write(arts, out, plots):
    for a in arts:
        path = write_artifact(a, out)
        log.info("wrote %s (%d rows)", path, len(a.rows))
        if plots and a.tag in FIGURE_TAGS:
            with open(path[:-4] + "_plot.py", "w", newline="\n", encoding="utf-8") as fh:
                fh.write(emit_plot_script(a, a.tag))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        if args.scenario:
            cfg.scenario = args.scenario
        if args.out:
            cfg.out = args.out
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (OSError, ConfigError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        arts = run_scenario(cfg, threads=args.threads, certify_roots=args.certify_roots)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioFailure as e:
        _write(e.artifacts, cfg.out, False)
        print(f"numerical failure at {e.node}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except DcgleError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(arts, cfg.out, args.plot_scripts)
    for a in arts:
        print(os.path.join(cfg.out, a.name + ".csv"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

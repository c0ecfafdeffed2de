"""Command line entry point: ``tucppo {run,sweep,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiment
from .config import ALGORITHMS, ConfigError, load_config


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"--set {item}: expected KEY=VALUE"])
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tucppo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "one seeded run with curves, snapshots and heatmaps"),
                        ("sweep", "multi-seed r sweep with CI / error-bar / violin tables"),
                        ("validate", "parse and range-check a config file")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--preset", choices=["desk"])
        if name != "validate":
            p.add_argument("--seed", type=int, metavar="U64")
            p.add_argument("--out", metavar="DIR")
            p.add_argument("--algo", choices=ALGORITHMS)
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override any config key (value parsed as JSON)")
        if name == "sweep":
            p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = _parse_set(getattr(args, "set", None))
        for flag, key in (("seed", "seed"), ("out", "out"), ("algo", "algorithm")):
            value = getattr(args, flag, None)
            if value is not None:
                overrides[key] = value
        if args.command == "validate" and args.config is None:
            raise ConfigError(["config: validate needs --config PATH"])
        cfg = load_config(args.config, overrides, args.preset)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(cfg.to_json())
        return 0
    try:
        if args.command == "run":
            outcome = experiment.run(cfg)
            print(f"{cfg.algorithm} r={cfg.r} seed={outcome.seed} "
                  f"final_coop_fraction={outcome.final_coop_fraction!r} -> {cfg.out}")
        else:
            res = experiment.sweep(cfg, workers=args.workers)
            for label, rows in res["summaries"].items():
                for s in rows:
                    print(f"{label} r={s.r} mean={s.mean:.4f} std={s.std:.4f} "
                          f"ci=[{s.ci_low:.4f}, {s.ci_high:.4f}]")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

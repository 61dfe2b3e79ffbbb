"""``lebrep`` command line: represent, diagnose, sweep, replay."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import apply_overrides, load_config, load_preset, preset_names
from .experiments import replay, run_diagnose, run_represent, run_sweep

log = logging.getLogger("lebrep")


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON experiment config")
    src.add_argument("--preset", help="name of a bundled preset")
    p.add_argument("--out", help="output directory (must exist)")
    p.add_argument("--seed", type=int, help="override the path seed (unsigned 64-bit)")
    p.add_argument("--paths", type=int, help="override the number of paths")
    p.add_argument("--grid", help="override the grid as N or N,q")
    p.add_argument("--workers", type=int, help="worker processes; outputs do not depend on it")


def _parse_values(text: str | None) -> list | None:
    if text is None:
        return None
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lebrep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("represent", help="build a rate process and report reproduction error"))
    _add_common(sub.add_parser("diagnose", help="run the configured regularity checks"))
    sw = sub.add_parser("sweep", help="one CSV row per parameter value")
    _add_common(sw)
    sw.add_argument("--parameter", choices=["gamma", "alpha", "p", "N"])
    sw.add_argument("--values", help="comma-separated values; empty string gives a header-only CSV")

    rp = sub.add_parser("replay", help="re-run a manifest and compare outputs bitwise")
    rp.add_argument("manifest")
    rp.add_argument("--out", help="directory for the replayed outputs (default: fresh temp dir)")
    rp.add_argument("--workers", type=int)

    sub.add_parser("presets", help="list bundled presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "presets":
        print("\n".join(preset_names()))
        return 0
    if args.command == "replay":
        bad = replay(args.manifest, args.out, args.workers)
        if bad:
            print("mismatch: " + ", ".join(bad))
            return 1
        print("all outputs reproduced bitwise")
        return 0

    try:
        cfg = load_config(args.config) if args.config else load_preset(args.preset)
        cfg = apply_overrides(cfg, seed=args.seed, paths=args.paths, grid=args.grid, out=args.out,
                              workers=args.workers)
        if args.command == "represent":
            result = run_represent(cfg)
        elif args.command == "diagnose":
            result = run_diagnose(cfg)
        else:
            result = run_sweep(cfg, args.parameter, _parse_values(args.values))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log.info(json.dumps({k: v for k, v in result.items() if k != "reports"}, indent=2, default=str))
    print("wrote " + ", ".join(result["files"]) + f" to {cfg.output.directory}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

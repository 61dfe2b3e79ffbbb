"""Run bundled presets and print the headline numbers of each.

Each preset writes into <root>/<preset>/.  Scale overrides make quick passes
possible, e.g. ``--paths 500 --grid 4096,2``.
"""

import argparse
import json
import time
from pathlib import Path

from lebrep.config import apply_overrides, load_preset, preset_names
from lebrep.experiments import run_diagnose, run_represent, run_sweep


def headline(name: str, result: dict) -> str:
    if "summary" in result and not result.get("reports"):
        s = result["summary"]
        return f"rms_rel={s['rms_rel']:.3e} alpha={s['alpha']}"
    if "verdicts" in result:
        return "; ".join(f"{r[0]}={r[1]}:{r[2]} {r[3]}" for r in result["verdicts"])
    if "rows" in result:
        return f"{len(result['rows'])} sweep rows"
    parts = []
    for check, rep in result.get("reports", {}).items():
        if "verdict" in rep:
            parts.append(f"{check}: {rep['verdict']} slope={rep['slope']:.4f}")
        else:
            keys = [k for k in ("max_sum_error", "max_discrepancy", "difference", "weight_mean") if k in rep]
            parts.append(f"{check}: " + ", ".join(f"{k}={rep[k]:.3e}" for k in keys))
    return "; ".join(parts)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("presets", nargs="*", help="default: all")
    ap.add_argument("--root", default="out")
    ap.add_argument("--paths", type=int)
    ap.add_argument("--grid")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--mode", choices=["diagnose", "represent", "sweep"], default="diagnose")
    args = ap.parse_args()
    summary = {}
    for name in args.presets or preset_names():
        out = Path(args.root) / name
        out.mkdir(parents=True, exist_ok=True)
        cfg = apply_overrides(load_preset(name), out=str(out), paths=args.paths, grid=args.grid,
                              workers=args.workers)
        runner = {"diagnose": run_diagnose, "represent": run_represent, "sweep": run_sweep}[args.mode]
        if args.mode == "sweep" and cfg.sweep is None:
            continue
        t0 = time.perf_counter()
        result = runner(cfg)
        dt = time.perf_counter() - t0
        line = headline(name, result)
        summary[name] = {"seconds": round(dt, 1), "headline": line}
        print(f"{name:24s} {dt:7.1f}s  {line}", flush=True)
    (Path(args.root) / "run_summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()

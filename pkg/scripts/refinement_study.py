"""Reproduction error of a rate construction across nested grids.

All grids observe the same Brownian paths (the coarse ones drop nodes), so
successive ratios are not blurred by independent sampling noise.
"""

import argparse
from pathlib import Path

from lebrep.config import apply_overrides, load_preset
from lebrep.experiments import run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="timeaverage-canonical")
    ap.add_argument("--exponents", default="10,11,12,13,14", help="grid sizes as powers of two")
    ap.add_argument("--paths", type=int)
    ap.add_argument("--out", default="out/refinement")
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    cfg = apply_overrides(load_preset(args.preset), out=args.out, paths=args.paths)
    values = [2 ** int(e) for e in args.exponents.split(",")]
    res = run_sweep(cfg, "N", values)
    h = res["header"]
    prev = None
    print(f"{'N':>7} {'rms_abs':>12} {'rms_rel':>12} {'ratio':>8}")
    for row in res["rows"]:
        rms, rel = row[h.index("rms_abs")], row[h.index("rms_rel")]
        ratio = "" if prev is None else f"{prev / rms:8.4f}"
        print(f"{row[h.index('N')]:>7} {rms:12.4e} {rel:12.4e} {ratio}")
        prev = rms


if __name__ == "__main__":
    main()

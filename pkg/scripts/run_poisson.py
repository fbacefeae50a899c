#!/usr/bin/env python3
"""Reproduce the Poisson coverage experiment (steady 1D source -> field map).

Runs the full pipeline (data, surrogates, calibration, reports, figures)
from configs/poisson.json.  Artifacts land under runs/poisson unless --out
is given; rerunning reuses everything that already exists.
"""
import argparse
import json
import sys
from pathlib import Path

from stcp import cli

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "poisson.json"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None, help="artifact directory (default runs/poisson)")
    ap.add_argument("--seed", type=int, default=None, help="override the master seed")
    ap.add_argument("--workers", type=int, default=None, help="solver worker processes")
    args = ap.parse_args()

    argv = ["run", "--config", str(CONFIG)]
    if args.out is not None:
        argv += ["--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    if args.workers is not None:
        argv += ["--workers", str(args.workers)]
    rc = cli.main(argv)
    if rc != 0:
        return rc

    out = Path(args.out) if args.out else Path("runs/poisson")
    for rep in sorted(out.glob("reports/validate-*.json")):
        doc = json.loads(rep.read_text())
        lo, hi = doc["beta"]["lo"], doc["beta"]["hi"]
        print(
            f"{doc['method']}: coverage {doc['mean_coverage']:.4f} "
            f"(99% band [{lo:.4f}, {hi:.4f}]), tightness {doc['tightness']:.4f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

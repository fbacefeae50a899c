#!/usr/bin/env python3
"""Reproduce the 2D wave coverage experiments: matched, then half-speed.

Two back-to-back runs into the same artifact directory.  The matched run
(configs/wave.json) trains the surrogates and validates on waves with the
training propagation speed; the half-speed run (configs/wave_halfspeed.json)
keeps the training data and models but regenerates calibration/validation
waves at speed 0.5.  Because calibration also sees the shifted speed,
coverage holds there too -- the shift shows up as wider bands, not as
undercoverage.

Reports use fixed names and are rewritten by the second run, so headline
coverages are printed after each; flipping back just re-derives reports
from cached artifacts.
"""
import argparse
import json
import sys
from pathlib import Path

from stcp import cli

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _headlines(out: Path, label: str) -> None:
    print(f"--- {label} ---")
    for rep in sorted(out.glob("reports/validate-*.json")):
        doc = json.loads(rep.read_text())
        lo, hi = doc["beta"]["lo"], doc["beta"]["hi"]
        print(
            f"{doc['method']}: coverage {doc['mean_coverage']:.4f} "
            f"(99% band [{lo:.4f}, {hi:.4f}]), tightness {doc['tightness']:.4f}"
        )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/wave", help="shared artifact directory")
    ap.add_argument("--seed", type=int, default=None, help="override the master seed")
    ap.add_argument("--workers", type=int, default=None, help="solver worker processes")
    args = ap.parse_args()

    common = ["--out", args.out]
    if args.seed is not None:
        common += ["--seed", str(args.seed)]
    if args.workers is not None:
        common += ["--workers", str(args.workers)]

    rc = cli.main(["run", "--config", str(CONFIG_DIR / "wave.json")] + common)
    if rc != 0:
        return rc
    _headlines(Path(args.out), "matched speed")

    rc = cli.main(["run", "--config", str(CONFIG_DIR / "wave_halfspeed.json")] + common)
    if rc != 0:
        return rc
    _headlines(Path(args.out), "half speed (shared models)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Detector P_D versus SPR at the QPSK comparison settings (SNR 6 dB, p_fa 0.04, N=128).

Usage: python scripts/compare_qpsk.py [--mapper 4QAM] [--trials N] [--seed S]
"""

import argparse
import dataclasses
from pathlib import Path

from ermon.harness import emit_csv, presets, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--mapper", default="QPSK", choices=("QPSK", "4QAM"))
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="results/compare_qpsk.csv")
    args = ap.parse_args()
    spec = presets()["compare-qpsk"]
    spec = dataclasses.replace(spec, frame=dataclasses.replace(spec.frame, mapper=args.mapper))
    if args.trials:
        spec = dataclasses.replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_csv(run_experiment(spec), args.out)


if __name__ == "__main__":
    main()

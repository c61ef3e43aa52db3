"""Run the `ablation` preset and write results/ablation.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "ablation.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["ablation", "--out", str(out), *sys.argv[1:]]))

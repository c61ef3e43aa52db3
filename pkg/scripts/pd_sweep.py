"""Run the `pd-sweep` preset and write results/pd_sweep.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "pd_sweep.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["pd-sweep", "--out", str(out), *sys.argv[1:]]))

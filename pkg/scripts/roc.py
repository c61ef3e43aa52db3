"""Run the `roc` preset and write results/roc.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "roc.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["roc", "--out", str(out), *sys.argv[1:]]))

"""Run the `fading` preset and write results/fading_mimo.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "fading_mimo.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["fading", "--out", str(out), *sys.argv[1:]]))

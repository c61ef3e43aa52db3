"""Run the `latency` preset and write results/latency.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "latency.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["latency", "--out", str(out), *sys.argv[1:]]))

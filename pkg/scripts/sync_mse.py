"""Run the `sync-mse` preset and write results/sync_mse.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "sync_mse.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["sync-mse", "--out", str(out), *sys.argv[1:]]))

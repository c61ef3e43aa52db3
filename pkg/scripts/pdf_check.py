"""Run the `pdf-check` preset and write results/pdf_check.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "pdf_check.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["pdf-check", "--out", str(out), *sys.argv[1:]]))

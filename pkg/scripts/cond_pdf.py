"""Run the `cond-pdf` preset and write results/cond_pdf.csv; extra arguments go to the CLI."""

import sys
from pathlib import Path

from ermon.cli import main

if __name__ == "__main__":
    out = Path("results") / "cond_pdf.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["cond-pdf", "--out", str(out), *sys.argv[1:]]))

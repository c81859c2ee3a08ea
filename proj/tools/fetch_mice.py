#!/usr/bin/env python3
"""Fetch the Mice Protein Expression dataset and convert it to CSV.

Downloads the OpenML ARFF copy (dataset 40966, the UCI original re-hosted),
keeps the 77 protein expression columns plus the class column, and writes
data/mice_protein.csv with missing values marked as NA. Standard library
only; needs outbound network access.

Usage: fetch_mice.py [output.csv]
"""
import re
import sys
import urllib.request

ARFF_URL = "https://api.openml.org/data/download/17928620/phpchCuL5"
DROP = {"MouseID", "Genotype", "Treatment", "Behavior"}
LABEL = "class"


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "data/mice_protein.csv"
    print(f"downloading {ARFF_URL} ...", file=sys.stderr)
    raw = urllib.request.urlopen(ARFF_URL, timeout=120).read().decode("utf-8", "replace")

    names = []
    data_lines = []
    in_data = False
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            data_lines.append(line)
            continue
        low = line.lower()
        if low.startswith("@attribute"):
            m = re.match(r"@attribute\s+'?([^\s']+)'?\s", line, re.IGNORECASE)
            names.append(m.group(1))
        elif low.startswith("@data"):
            in_data = True

    keep = [i for i, n in enumerate(names) if n not in DROP and n != LABEL]
    label_idx = names.index(LABEL)

    def clean(cell: str) -> str:
        cell = cell.strip().strip("'\"")
        return "NA" if cell in ("?", "") else cell

    with open(out, "w") as f:
        f.write(",".join(names[i] for i in keep) + f",{LABEL}\n")
        n = 0
        for line in data_lines:
            cells = [clean(c) for c in line.split(",")]
            if len(cells) != len(names):
                continue
            f.write(",".join(cells[i] for i in keep) + f",{cells[label_idx]}\n")
            n += 1
    print(f"wrote {out}: {n} rows, {len(keep)} protein columns + {LABEL}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Dump scikit-learn's bundled digits dataset (1797x64, 10 classes) to CSV.

No network access needed; the data ships inside scikit-learn. Used by the
offline real-data integration test.

Usage: export_digits.py [output.csv]
"""
import sys


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "data/digits.csv"
    try:
        from sklearn.datasets import load_digits
    except ImportError:
        print("scikit-learn not available; skipping digits export", file=sys.stderr)
        return 1
    d = load_digits()
    with open(out, "w") as f:
        f.write(",".join(f"p{i}" for i in range(d.data.shape[1])) + ",label\n")
        for row, y in zip(d.data, d.target):
            f.write(",".join(f"{v:g}" for v in row) + f",d{y}\n")
    print(f"wrote {out}: {d.data.shape[0]} rows, {d.data.shape[1]} features")
    return 0


if __name__ == "__main__":
    sys.exit(main())

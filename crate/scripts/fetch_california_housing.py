#!/usr/bin/env python3
"""Download the California housing dataset into data/.

Writes data/california_housing.csv (8 numeric features plus the
median-house-value target) and data/california_housing.meta.json in
the sidecar format the tabfs loader expects. The acceptance benchmark
uses these files when present and otherwise falls back to a synthetic
surrogate.

Requires scikit-learn, which fetches and caches the raw data.
"""

import csv
import json
import pathlib
import sys


def main() -> int:
    try:
        from sklearn.datasets import fetch_california_housing
    except ImportError:
        print("scikit-learn is required: pip install scikit-learn", file=sys.stderr)
        return 1

    raw = fetch_california_housing()
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "data"
    out_dir.mkdir(exist_ok=True)

    csv_path = out_dir / "california_housing.csv"
    with csv_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(raw.feature_names) + ["MedHouseVal"])
        for features, target in zip(raw.data, raw.target):
            writer.writerow([repr(float(v)) for v in features] + [repr(float(target))])

    meta_path = out_dir / "california_housing.meta.json"
    meta_path.write_text(
        json.dumps({"target": "MedHouseVal", "task": "regression"}, indent=2) + "\n"
    )

    print(f"wrote {csv_path} ({len(raw.target)} rows) and {meta_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

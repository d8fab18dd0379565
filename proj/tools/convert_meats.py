#!/usr/bin/env python3
"""Convert the Tecator meat spectra shipped with the `rdatasets` package
(modeldata::meats, 215 samples) into the CSV layout read by `nnal`.

    pip install rdatasets
    python3 tools/convert_meats.py data/tecator.csv
"""
import sys

import rdatasets


def main(out_path: str) -> None:
    df = rdatasets.data("modeldata", "meats")
    channels = [f"x_{i:03d}" for i in range(1, 101)]
    header = ["id"] + [f"ch{i:03d}" for i in range(100)] + ["moisture", "fat", "protein"]
    with open(out_path, "w", newline="\n") as out:
        out.write(",".join(header) + "\n")
        for row_id, (_, row) in enumerate(df.iterrows()):
            fields = [str(row_id)] + [repr(float(row[c])) for c in channels]
            fields += [repr(float(row["water"])), repr(float(row["fat"])), repr(float(row["protein"]))]
            out.write(",".join(fields) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tecator.csv")

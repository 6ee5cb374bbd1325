#!/usr/bin/env python3
"""Regenerate data/uci/*.csv from the KEEL copies shipped in PyPI wheels.

    pip download --no-deps keel_ds==0.2.5 common_datasets==0.3.10 -d wheels/
    python3 tools/extract_uci.py wheels/*.whl --out data/uci

Each output row is the numeric features followed by the class label, comma
separated, no header. Banknote and Delft Pump are not carried by either wheel.
"""

import argparse
import pathlib
import sys
import zipfile

# output name -> (archive member suffix, label kept verbatim)
SOURCES = {
    "sonar.csv": "keel_ds/data/balanced/raw/sonar.dat",
    "scale.csv": "common_datasets/data/classification/balance/balance.dat",
    "survival.csv": "common_datasets/data/classification/haberman/haberman.dat",
}


def keel_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        yield ",".join(field.strip() for field in line.split(","))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheels", nargs="+", type=pathlib.Path)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/uci"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    found = {}
    for wheel in args.wheels:
        with zipfile.ZipFile(wheel) as zf:
            for name in zf.namelist():
                for out, member in SOURCES.items():
                    if name.endswith(member):
                        found[out] = zf.read(name).decode("utf-8")

    missing = sorted(set(SOURCES) - set(found))
    for out, text in sorted(found.items()):
        rows = list(keel_rows(text))
        (args.out / out).write_text("\n".join(rows) + "\n")
        print(f"{out}: {len(rows)} rows")
    if missing:
        print("missing: " + ", ".join(missing), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

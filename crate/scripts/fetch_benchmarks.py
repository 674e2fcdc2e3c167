#!/usr/bin/env python3
"""Fetch the classic NYSE benchmark markets and write them as relatives CSVs.

The series ship inside the `universal-portfolios` wheel as cumulative prices
starting from an implicit base of 1 with no date column. This script downloads
the wheel with pip, extracts the requested files and writes
`data/<name>.csv` with a `date` column of zero-padded day labels followed by
one column of daily price relatives per ticker.

    python3 scripts/fetch_benchmarks.py            # nyse_o and nyse_n
    python3 scripts/fetch_benchmarks.py djia tse
"""

import argparse
import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def download_wheel(dest):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:",
         "-d", str(dest), "universal-portfolios"],
        check=True,
    )
    wheels = sorted(pathlib.Path(dest).glob("universal_portfolios-*.whl"))
    if not wheels:
        sys.exit("no universal-portfolios wheel was downloaded")
    return wheels[-1]


def to_relatives(text):
    rows = list(csv.reader(io.StringIO(text)))
    names, body = rows[0], rows[1:]
    previous = [1.0] * len(names)
    out = []
    for row in body:
        prices = [float(v) for v in row]
        out.append([p / q for p, q in zip(prices, previous)])
        previous = prices
    return names, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("datasets", nargs="*", default=["nyse_o", "nyse_n"])
    parser.add_argument("--out", type=pathlib.Path, default=ROOT / "data")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = zipfile.ZipFile(download_wheel(tmp))
        for name in args.datasets:
            text = wheel.read(f"universal/data/{name}.csv").decode()
            names, relatives = to_relatives(text)
            target = args.out / f"{name}.csv"
            with open(target, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["date"] + names)
                for t, row in enumerate(relatives, start=1):
                    writer.writerow([f"d{t:06d}"] + [repr(v) for v in row])
            print(f"{target}: {len(relatives)} days x {len(names)} assets")


if __name__ == "__main__":
    main()

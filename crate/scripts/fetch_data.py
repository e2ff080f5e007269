#!/usr/bin/env python3
"""Download Arcene and MNIST and write them as CSV (one sample per row, label last).

Usage:
    python3 scripts/fetch_data.py --out data/external [--only arcene|mnist] [--digits 4,7,9]

Then point the acceptance target at the results:
    SLCE_ARCENE_CSV=data/external/arcene.csv
    SLCE_MNIST_TRAIN_CSV=data/external/mnist_train.csv
    SLCE_MNIST_TEST_CSV=data/external/mnist_test.csv

Arcene is the labeled train + validation portion (200 samples, labels -1/1).
Only the standard library is used.
"""

import argparse
import gzip
import os
import struct
import sys
import urllib.request

ARCENE = "https://archive.ics.uci.edu/ml/machine-learning-databases/arcene/"
ARCENE_FILES = {
    "train": ("ARCENE/arcene_train.data", "ARCENE/arcene_train.labels"),
    "valid": ("ARCENE/arcene_valid.data", "arcene_valid.labels"),
}
MNIST = "https://ossci-datasets.s3.amazonaws.com/mnist/"
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
    "test": ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
}


def fetch(url: str, cache: str) -> bytes:
    path = os.path.join(cache, url.rsplit("/", 1)[1])
    if not os.path.exists(path):
        print(f"downloading {url}", file=sys.stderr)
        with urllib.request.urlopen(url, timeout=120) as r, open(path + ".part", "wb") as f:
            f.write(r.read())
        os.replace(path + ".part", path)
    with open(path, "rb") as f:
        return f.read()


def write_csv(path: str, rows, labels, n_features: int) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(f"f{j}" for j in range(n_features)) + ",label\n")
        for row, label in zip(rows, labels):
            f.write(",".join(map(str, row)) + f",{label}\n")
    print(f"wrote {path}", file=sys.stderr)


def arcene(out: str, cache: str) -> None:
    rows, labels = [], []
    for data_name, label_name in ARCENE_FILES.values():
        data = fetch(ARCENE + data_name, cache).decode().split("\n")
        lab = fetch(ARCENE + label_name, cache).decode().split()
        part = [line.split() for line in data if line.strip()]
        if len(part) != len(lab):
            sys.exit(f"{data_name}: {len(part)} rows but {len(lab)} labels")
        rows += part
        labels += lab
    write_csv(os.path.join(out, "arcene.csv"), rows, labels, len(rows[0]))


def idx(blob: bytes):
    raw = gzip.decompress(blob)
    ndim = raw[3]
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    return dims, raw[4 + 4 * ndim :]


def mnist(out: str, cache: str, digits) -> None:
    for split, (img_name, lab_name) in MNIST_FILES.items():
        (n, h, w), pixels = idx(fetch(MNIST + img_name, cache))
        (m,), labels = idx(fetch(MNIST + lab_name, cache))
        if n != m:
            sys.exit(f"{img_name}: {n} images but {m} labels")
        size = h * w
        keep = [i for i in range(n) if digits is None or labels[i] in digits]
        rows = (pixels[i * size : (i + 1) * size] for i in keep)
        write_csv(os.path.join(out, f"mnist_{split}.csv"), rows, (labels[i] for i in keep), size)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="data/external")
    ap.add_argument("--only", choices=["arcene", "mnist"])
    ap.add_argument("--digits", help="comma-separated MNIST digits to keep, e.g. 4,7,9")
    args = ap.parse_args()
    cache = os.path.join(args.out, "raw")
    os.makedirs(cache, exist_ok=True)
    digits = {int(d) for d in args.digits.split(",")} if args.digits else None
    if args.only in (None, "arcene"):
        arcene(args.out, cache)
    if args.only in (None, "mnist"):
        mnist(args.out, cache, digits)


if __name__ == "__main__":
    main()

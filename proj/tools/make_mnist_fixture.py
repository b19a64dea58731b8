#!/usr/bin/env python3
"""Rebuild tests/data/mnist1k-{images-idx3,labels-idx1}-ubyte.

The fixture is 1000 real MNIST digits taken from the 5000-image sample that
ships inside the mlxtend wheel (mlxtend/data/data/mnist_5k.csv.gz: 784 pixel
columns then the label, 500 images per class). It keeps the first 100 images
of each class, interleaved by class (0, 1, ..., 9, 0, 1, ...), so every
prefix of the file is close to class-balanced.

    pip download --no-deps mlxtend -d /tmp/pkgs
    python3 tools/make_mnist_fixture.py /tmp/pkgs/mlxtend-*.whl tests/data
"""
import argparse
import gzip
import pathlib
import struct
import zipfile

PER_CLASS = 100


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel", help="mlxtend wheel file")
    ap.add_argument("outdir", type=pathlib.Path)
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as z:
        text = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    by_class = {}
    for line in text.splitlines():
        cells = line.split(",")
        by_class.setdefault(int(float(cells[-1])), []).append(bytes(int(float(v)) for v in cells[:-1]))

    picked = [(by_class[c][i], c) for i in range(PER_CLASS) for c in range(10)]
    args.outdir.mkdir(parents=True, exist_ok=True)
    with open(args.outdir / "mnist1k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(picked), 28, 28))
        for pixels, _ in picked:
            f.write(pixels)
    with open(args.outdir / "mnist1k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(picked)))
        f.write(bytes(label for _, label in picked))


if __name__ == "__main__":
    main()

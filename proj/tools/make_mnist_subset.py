#!/usr/bin/env python3
"""Write the 5000-image MNIST sample bundled with mlxtend as IDX files.

The sample holds 500 images per digit. The first 400 of each digit (in file
order) go to the training files and the remaining 100 to the test files.

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist-5k
"""
import argparse
import csv
import gzip
import io
import pathlib
import struct
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_CLASS = 400


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("wheel")
    ap.add_argument("out_dir")
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER)).decode("ascii")

    seen = [0] * 10
    train, test = [], []
    for row in csv.reader(io.StringIO(raw)):
        if not row:
            continue
        pixels = [int(float(v)) for v in row[:-1]]
        label = int(float(row[-1]))
        assert len(pixels) == 784 and all(0 <= p <= 255 for p in pixels)
        (train if seen[label] < TRAIN_PER_CLASS else test).append((pixels, label))
        seen[label] += 1

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [p for p, _ in train])
    write_labels(out / "train-labels-idx1-ubyte", [l for _, l in train])
    write_images(out / "t10k-images-idx3-ubyte", [p for p, _ in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [l for _, l in test])
    print(f"train={len(train)} test={len(test)} per-class={seen}")


if __name__ == "__main__":
    main()

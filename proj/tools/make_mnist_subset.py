#!/usr/bin/env python3
"""Rebuild data/mnist10k from the 10,000 MNIST digits bundled in the npm `mnist` package.

The package stores each pixel as round(byte / 255, 3); that rounding is
injective on 0..255, so the original bytes are recovered exactly.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist10k
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    images = bytearray()
    labels = bytearray()
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        if len(data) % 784:
            raise SystemExit(f"{digit}.json: length {len(data)} is not a multiple of 784")
        for v in data:
            b = round(v * 255)
            if not 0 <= b <= 255 or round(b / 255, 3) != round(v, 3):
                raise SystemExit(f"{digit}.json: value {v} is not a rounded byte")
            images.append(b)
        labels.extend([digit] * (len(data) // 784))
    n = len(labels)
    dst.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(dst / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images)
    with gzip.GzipFile(dst / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels)
    print(f"wrote {n} images to {dst}")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))

#!/usr/bin/env python3
"""Export the scikit-learn handwritten digits dataset to IDX files.

Regenerates data/digits/{train,test}-{images,labels}-idx?-ubyte, the
offline dataset used by the image-classification acceptance check when no
MNIST files are available. Values 0..16 are scaled to bytes 0..240.
"""
import argparse
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/digits", help="output directory")
    ap.add_argument("--train", type=int, default=1200, help="training sample count")
    args = ap.parse_args()

    digits = load_digits()
    images = (digits.images * 15.0).round().clip(0, 255)  # 0..16 -> 0..240
    labels = digits.target

    # Deterministic shuffle so train/test class mixes are comparable.
    rng = np.random.RandomState(20240501)
    order = rng.permutation(len(labels))
    images, labels = images[order], labels[order]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_train = args.train
    write_idx_images(out / "train-images-idx3-ubyte", images[:n_train])
    write_idx_labels(out / "train-labels-idx1-ubyte", labels[:n_train])
    write_idx_images(out / "test-images-idx3-ubyte", images[n_train:])
    write_idx_labels(out / "test-labels-idx1-ubyte", labels[n_train:])
    print(f"wrote {n_train} train / {len(labels) - n_train} test samples to {out}")


if __name__ == "__main__":
    main()

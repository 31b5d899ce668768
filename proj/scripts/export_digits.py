"""Export the UCI handwritten digits 1 and 4 (8x8 images, flattened) to CSV.

Writes tests/data/digits_1_4.csv (64 pixel columns, header px0..px63) and
tests/data/digits_1_4_labels.csv (one digit label per row, same order).
Requires scikit-learn, which ships the UCI digits data.
"""
import pathlib

import numpy as np
from sklearn.datasets import load_digits


def main() -> None:
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
    out.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    keep = np.isin(digits.target, [1, 4])
    values = digits.data[keep].astype(int)
    labels = digits.target[keep]
    header = ",".join(f"px{i}" for i in range(values.shape[1]))
    np.savetxt(out / "digits_1_4.csv", values, fmt="%d", delimiter=",", header=header, comments="")
    np.savetxt(out / "digits_1_4_labels.csv", labels, fmt="%d", header="digit", comments="")


if __name__ == "__main__":
    main()

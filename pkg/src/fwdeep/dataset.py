"""Points in the unit square labelled by whether they fall inside the unit circle."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fwdeep.errors import InvalidInputError, ParseError

DEFAULT_TRAIN_SEED = 42
DEFAULT_TEST_SEED = 43
DEFAULT_SIZE = 1000

CSV_HEADER = ("x1", "x2", "y")


def label(x: ArrayLike) -> NDArray[np.float64]:
    """+1 inside or on the unit circle, -1 outside. Works on ``(2,)`` or ``(n, 2)``."""
    x = np.asarray(x, dtype=np.float64)
    r2 = np.sum(x * x, axis=-1)
    return np.where(r2 <= 1.0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs ``x`` of shape ``(n, 2)`` with labels ``y`` in {-1, +1}, in generation order."""

    x: NDArray[np.float64]
    y: NDArray[np.float64]
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, indices: ArrayLike) -> Dataset:
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.x[idx], self.y[idx], self.seed)

    def equals(self, other: Dataset) -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


def generate(n: int = DEFAULT_SIZE, seed: int = DEFAULT_TRAIN_SEED) -> Dataset:
    """Draw ``n`` points uniformly from [0, 1]^2 with ``numpy.random.default_rng(seed)``."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 2))
    return Dataset(x, label(x), seed)


def save_csv(ds: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for (x1, x2), y in zip(ds.x, ds.y):
            writer.writerow((f"{x1:.17g}", f"{x2:.17g}", f"{int(y):d}"))


def load_csv(path: str | os.PathLike) -> Dataset:
    """Read a dataset written by :func:`save_csv`, validating every row."""
    path = os.fspath(path)
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}", path=path, line=1)
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", path=path, line=lineno)
            try:
                x1, x2 = float(row[0]), float(row[1])
                y = int(row[2])
            except ValueError as exc:
                raise ParseError(f"malformed row: {exc}", path=path, line=lineno) from None
            if y not in (-1, 1):
                raise ParseError(f"label must be -1 or +1, got {row[2]}", path=path, line=lineno)
            if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
                raise ParseError("coordinates must lie in [0, 1]", path=path, line=lineno)
            if label((x1, x2)) != y:
                raise ParseError(f"label {y} contradicts the circle rule", path=path, line=lineno)
            xs.append((x1, x2))
            ys.append(float(y))
    if not ys:
        raise InvalidInputError(f"{path}: dataset has no samples")
    return Dataset(np.array(xs, dtype=np.float64), np.array(ys, dtype=np.float64))

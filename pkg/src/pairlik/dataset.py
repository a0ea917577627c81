"""Dataset container and CSV ingestion.

CSV layout: a header row naming ``y``, optionally ``delta`` and the
covariate columns ``x1..xp``; UTF-8, LF or CRLF line endings.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "DataError", "read_csv_dataset", "write_csv_dataset"]


class DataError(ValueError):
    """Malformed input data (CSV layout, NaNs, bad censoring flags...)."""


@dataclass(frozen=True)
class Dataset:
    """Covariates ``x`` (n x p), responses ``y`` (n,), optional censoring
    indicators ``delta`` (n, values in {0,1}; 1 = event observed)."""

    x: np.ndarray
    y: np.ndarray
    delta: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.size:
            raise DataError(f"x has {x.shape[0]} rows but y has {y.size}")
        if x.shape[0] < 2:
            raise DataError("need at least two observations")
        if x.shape[1] < 1:
            raise DataError("need at least one covariate")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DataError("x and y must be finite (no NaN/Inf)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.delta is not None:
            d = np.asarray(self.delta, dtype=float).ravel()
            if d.size != y.size:
                raise DataError("delta length does not match y")
            if not np.all(np.isin(d, (0.0, 1.0))):
                raise DataError("delta entries must be 0 or 1")
            object.__setattr__(self, "delta", d)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def censored(self) -> bool:
        return self.delta is not None

    def drop_delta(self) -> "Dataset":
        return Dataset(self.x, self.y)


def read_csv_dataset(path_or_buffer) -> Dataset:
    """Read a dataset from CSV; raises DataError on malformed input."""
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty CSV")
    header = [c.strip() for c in rows[0]]
    if "y" not in header:
        raise DataError(f"CSV is missing required column 'y' (found {header})")
    xcols = sorted(
        (c for c in header if c.startswith("x") and c[1:].isdigit()),
        key=lambda c: int(c[1:]),
    )
    if not xcols:
        raise DataError("CSV has no covariate columns x1..xp")
    expected = [f"x{k}" for k in range(1, len(xcols) + 1)]
    if xcols != expected:
        raise DataError(f"covariate columns must be x1..xp, found {xcols}")
    known = {"y", "delta", *xcols}
    unknown = [c for c in header if c not in known]
    if unknown:
        raise DataError(f"unrecognized CSV columns: {unknown}")
    idx = {c: header.index(c) for c in header}

    def parse(cell: str, row_no: int, col: str) -> float:
        try:
            return float(cell)
        except ValueError:
            raise DataError(f"row {row_no}: cannot parse {col}={cell!r}") from None

    ys, xs, ds = [], [], []
    for r_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {r_no}: expected {len(header)} cells, got {len(row)}")
        ys.append(parse(row[idx["y"]], r_no, "y"))
        xs.append([parse(row[idx[c]], r_no, c) for c in xcols])
        if "delta" in idx:
            ds.append(parse(row[idx["delta"]], r_no, "delta"))
    return Dataset(np.array(xs), np.array(ys), np.array(ds) if ds else None)


def write_csv_dataset(path, data: Dataset) -> None:
    header = ["y"] + (["delta"] if data.censored else []) + [
        f"x{k}" for k in range(1, data.p + 1)
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(data.n):
            row = [repr(float(data.y[i]))]
            if data.censored:
                row.append(str(int(data.delta[i])))
            row.extend(repr(float(v)) for v in data.x[i])
            w.writerow(row)

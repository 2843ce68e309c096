"""Reading tabular inputs: numeric CSV files and cause-effect pair archives."""

import csv
import io
import math
import os
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InputError",
    "Table",
    "read_table",
    "parse_table",
    "PairRecord",
    "read_pair",
    "read_pair_meta",
    "load_pairs",
]


class InputError(ValueError):
    """Malformed or unusable input file."""


@dataclass
class Table:
    names: list
    values: np.ndarray

    def column(self, name):
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise InputError(f"missing column {name!r}") from None

    def without(self, *names):
        keep = [i for i, c in enumerate(self.names) if c not in names]
        return Table([self.names[i] for i in keep], self.values[:, keep])


def parse_table(text, min_rows=1, min_cols=1):
    """Parse comma-separated text with a header row into a float table.

    Every cell must parse as a finite float.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("empty file")
    names = [c.strip() for c in rows[0]]
    if len(set(names)) != len(names) or any(not c for c in names):
        raise InputError("header must name every column uniquely")
    width = len(names)
    data = np.empty((len(rows) - 1, width))
    for r, row in enumerate(rows[1:]):
        if len(row) != width:
            raise InputError(f"line {r + 2}: expected {width} fields, got {len(row)}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"line {r + 2}: non-numeric value {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise InputError(f"line {r + 2}: non-finite value {cell.strip()!r}")
            data[r, c] = v
    if data.shape[0] < min_rows:
        raise InputError(f"need at least {min_rows} data rows, got {data.shape[0]}")
    if width < min_cols:
        raise InputError(f"need at least {min_cols} columns, got {width}")
    return Table(names, data)


def read_table(path, min_rows=1, min_cols=1):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None
    return parse_table(text, min_rows, min_cols)


@dataclass
class PairRecord:
    """One cause-effect pair; ``x`` is the first column of the file."""

    pair_id: int
    x: np.ndarray
    y: np.ndarray
    direction: str | None
    weight: float = 1.0


def read_pair(path):
    """Two whitespace-separated numeric columns, no header."""
    try:
        data = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from None
    if data.shape[1] != 2:
        raise InputError(f"{path}: expected 2 columns, got {data.shape[1]}")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite values")
    return data[:, 0], data[:, 1]


def read_pair_meta(path):
    """Pair metadata: id, cause start/end, effect start/end, weight.

    Fields are separated by whitespace or commas; column ranges are 1-based.
    Returns ``{pair_id: (direction, weight)}`` where direction is ``"X->Y"``
    when the cause is column 1.  Pairs with multivariate ends are omitted.
    """
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = re.split(r"[\s,]+", line)
            try:
                pid, c0, c1, e0, e1 = (int(float(f)) for f in fields[:5])
                weight = float(fields[5])
            except (ValueError, IndexError):
                raise InputError(f"{path}:{n}: malformed metadata line") from None
            if c0 != c1 or e0 != e1:
                continue
            meta[pid] = ("X->Y" if c0 == 1 else "Y->X", weight)
    return meta


def load_pairs(directory, meta_file="pairmeta.txt"):
    """Load every ``pairNNNN.txt`` in ``directory`` that has univariate metadata."""
    meta = read_pair_meta(os.path.join(directory, meta_file))
    records = []
    for name in sorted(os.listdir(directory)):
        m = re.fullmatch(r"pair(\d+)\.txt", name)
        if not m or int(m.group(1)) not in meta:
            continue
        pid = int(m.group(1))
        x, y = read_pair(os.path.join(directory, name))
        direction, weight = meta[pid]
        records.append(PairRecord(pid, x, y, direction, weight))
    return records

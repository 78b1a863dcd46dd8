"""Dataset files, train/validation/test splits and run manifests.

Dense CSV
    One sample per line, response first, then the features. A first line
    whose leading token is not a number is taken as a header.
Sparse text
    ``label idx:val idx:val ...`` with 1-based, strictly increasing indices;
    a bare label is an all-zero row.

Numbers are written with Python's shortest round-trip representation so a
load/save cycle preserves every value.
"""
import datetime
import hashlib
import json
import math
import os
import platform
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .data import CLASSIFICATION, REGRESSION, Dataset, FeatureMatrix

__all__ = [
    "load_dense_csv",
    "save_dense_csv",
    "load_sparse",
    "save_sparse",
    "load_dataset",
    "split",
    "RunManifest",
    "file_digest",
]


class DataFormatError(ValueError):
    pass


def _infer_kind(y, kind):
    if kind is not None:
        return kind
    y = np.asarray(y)
    if y.size and np.all((y == 1.0) | (y == -1.0)):
        return CLASSIFICATION
    return REGRESSION


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_dense_csv(path, kind=None):
    """Read a dense CSV file into a :class:`Dataset`."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if not rows and width is None and not _is_number(cells[0]):
                width = len(cells)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                bad = next(c for c in cells if not _is_number(c))
                raise DataFormatError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    if width < 2:
        raise DataFormatError(f"{path}: need a response column and at least one feature")
    a = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        r = int(np.argwhere(~np.isfinite(a))[0][0])
        raise DataFormatError(f"{path}: non-finite value in data row {r + 1}")
    y = a[:, 0]
    return Dataset(FeatureMatrix(a[:, 1:]), y, _infer_kind(y, kind))


def save_dense_csv(ds, path, header=False):
    X = ds.features.dense_array()
    with open(path, "w", newline="\n") as fh:
        if header:
            fh.write(",".join(["y"] + [f"x{j}" for j in range(ds.d)]) + "\n")
        for yi, row in zip(ds.responses, X):
            fh.write(",".join(repr(float(v)) for v in (yi, *row)) + "\n")


def load_sparse(path, dims=None, kind=None):
    """Read the sparse ``label idx:val`` format; `dims` overrides d."""
    labels = []
    rows = []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            toks = line.split()
            if not toks or toks[0].startswith("#"):
                continue
            try:
                labels.append(float(toks[0]))
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad label {toks[0]!r}") from None
            row = []
            last = 0
            for tok in toks[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: malformed entry {tok!r}") from None
                if not sep:
                    raise DataFormatError(f"{path}:{lineno}: malformed entry {tok!r}")
                if j < 1:
                    raise DataFormatError(f"{path}:{lineno}: indices are 1-based, found {j}")
                if j <= last:
                    raise DataFormatError(f"{path}:{lineno}: indices must increase ({j} after {last})")
                if not math.isfinite(v):
                    raise DataFormatError(f"{path}:{lineno}: non-finite value")
                last = j
                row.append((j - 1, v))
            max_index = max(max_index, last)
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    d = max_index if dims is None else int(dims)
    if d < max_index:
        rows = [[(j, v) for j, v in r if j < d] for r in rows]
    return Dataset(FeatureMatrix.from_rows(rows, max(d, 1)), labels, _infer_kind(labels, kind))


def _label_repr(y):
    return f"{int(y):+d}" if float(y).is_integer() and abs(y) == 1 else repr(float(y))


def save_sparse(ds, path):
    m = ds.features.to_sparse().raw
    with open(path, "w", newline="\n") as fh:
        for i, yi in enumerate(ds.responses):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            entries = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(m.indices[lo:hi], m.data[lo:hi]))
            fh.write(_label_repr(yi) + (" " + entries if entries else "") + "\n")


def load_dataset(path, fmt="auto", dims=None, kind=None):
    """Dispatch on `fmt` ("csv", "sparse" or "auto" by file extension)."""
    if fmt == "auto":
        fmt = "csv" if str(path).lower().endswith(".csv") else "sparse"
    if fmt == "csv":
        return load_dense_csv(path, kind=kind)
    if fmt == "sparse":
        return load_sparse(path, dims=dims, kind=kind)
    raise ValueError(f"unknown data format {fmt!r}")


def split(ds, fractions=(0.5, 0.25, 0.25), seed=None):
    """Seeded shuffle, then contiguous train / validation / test cuts.

    Validation and test get ``floor(n * f)`` rows; train takes the rest.
    """
    if seed is None:
        raise ValueError("split requires an explicit seed")
    fr = [float(f) for f in fractions]
    if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError("fractions must be three positive numbers summing to 1")
    n = ds.n
    n_val = math.floor(n * fr[1] + 1e-9)
    n_test = math.floor(n * fr[2] + 1e-9)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"split of n={n} with fractions {fr} leaves an empty part")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    parts = np.split(perm, [n_train, n_train + n_val])
    return tuple(ds.subset(p) for p in parts)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp():
    # SOURCE_DATE_EPOCH pins the clock for reproducible outputs
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    else:
        t = datetime.datetime.now(tz=datetime.timezone.utc)
    return t.replace(microsecond=0).isoformat()


@dataclass
class RunManifest:
    """Everything needed to repeat a CLI run."""

    command: str
    argv: list
    config: dict
    seed: object = None
    inputs: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=_timestamp)
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__

    @classmethod
    def for_inputs(cls, command, argv, config, seed, paths):
        return cls(command, list(argv), config, seed, {str(p): file_digest(p) for p in paths if p})

    def write(self, path):
        with open(path, "w", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
            fh.write("\n")

"""The fitted predictor: weights, monotone link, optional standardization.

Models are stored as a small JSON document. Floats are written with
Python's shortest round-trip ``repr``, so ``load(save(m))`` reproduces every
field bit for bit. Field order::

    format, version, d, weights, link.knots, link.values,
    preprocessing.means, preprocessing.scales, shape
"""
import json

import numpy as np
import scipy.sparse as sp

from .data import FeatureMatrix, as_vector
from .lpav import MonotoneLink

__all__ = ["SimModel", "ModelFormatError", "save", "load", "FORMAT_NAME", "FORMAT_VERSION"]

FORMAT_NAME = "csisim-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


class SimModel:
    """Predict ``g(w . x_std)`` where ``x_std`` is the standardized row."""

    def __init__(self, weights, link, means=None, scales=None, shape=None):
        self.weights = as_vector(weights, "weights")
        if not isinstance(link, MonotoneLink):
            raise TypeError("link must be a MonotoneLink")
        self.link = link
        if (means is None) != (scales is None):
            raise ValueError("means and scales must be given together")
        self.means = None if means is None else as_vector(means, "means")
        self.scales = None if scales is None else as_vector(scales, "scales")
        if self.means is not None:
            if self.means.shape != self.weights.shape or self.scales.shape != self.weights.shape:
                raise ValueError("preprocessing statistics do not match the weight dimension")
            if np.any(self.scales <= 0):
                raise ValueError("scales must be positive")
        if shape is not None:
            shape = (int(shape[0]), int(shape[1]))
            if shape[0] * shape[1] != self.weights.size:
                raise ValueError(f"shape {shape} does not match d={self.weights.size}")
        self.shape = shape

    @property
    def d(self):
        return self.weights.size

    def with_preprocessing(self, means, scales):
        return SimModel(self.weights, self.link, means, scales, self.shape)

    def index(self, X):
        """The linear index ``w . x_std`` for a row or a batch of rows."""
        if isinstance(X, FeatureMatrix):
            X = X.raw
        single = not sp.issparse(X) and np.ndim(X) == 1
        if single:
            X = np.asarray(X, dtype=np.float64)[None, :]
        elif not sp.issparse(X):
            X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.d:
            raise ValueError(f"row dimension {X.shape[1]} does not match model dimension {self.d}")
        if self.means is None:
            idx = np.asarray(X @ self.weights, dtype=np.float64)
        else:
            # (x - mu)/sigma . w without densifying sparse rows
            v = self.weights / self.scales
            idx = np.asarray(X @ v, dtype=np.float64) - float(self.means @ v)
        return idx[0] if single else idx

    def predict(self, X):
        return self.link(self.index(X))

    def predict_class(self, X, threshold=0.0):
        """+1 where the prediction is >= threshold, else -1."""
        score = self.predict(X)
        if np.ndim(score) == 0:
            return 1 if score >= threshold else -1
        return np.where(score >= threshold, 1, -1)

    def __eq__(self, other):
        if not isinstance(other, SimModel):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return (
            np.array_equal(self.weights, other.weights)
            and self.link == other.link
            and same(self.means, other.means)
            and same(self.scales, other.scales)
            and self.shape == other.shape
        )

    def __repr__(self):
        return f"SimModel(d={self.d}, nnz={int(np.count_nonzero(self.weights))}, link={self.link!r})"


def _floats(a):
    return [float(x) for x in a]


def save(model):
    """Serialize to a UTF-8 JSON string."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "d": model.d,
        "weights": _floats(model.weights),
        "link": {"knots": _floats(model.link.knots), "values": _floats(model.link.values)},
        "preprocessing": None
        if model.means is None
        else {"means": _floats(model.means), "scales": _floats(model.scales)},
        "shape": None if model.shape is None else list(model.shape),
    }
    return json.dumps(doc, indent=1) + "\n"


def load(text):
    """Parse a document written by :func:`save`."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"corrupt model stream at position {exc.pos} (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a csisim model document")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"model format version {version} is not supported (this library reads version {FORMAT_VERSION})"
        )
    try:
        weights = doc["weights"]
        if len(weights) != doc["d"]:
            raise ModelFormatError(f"d={doc['d']} but {len(weights)} weights stored")
        link = MonotoneLink(doc["link"]["knots"], doc["link"]["values"])
        pre = doc["preprocessing"]
        means = scales = None
        if pre is not None:
            means, scales = pre["means"], pre["scales"]
        return SimModel(weights, link, means, scales, doc["shape"])
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model document is missing or has a malformed field: {exc}") from None


def save_file(model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(save(model))


def load_file(path):
    with open(path, encoding="utf-8") as fh:
        return load(fh.read())

"""Closed-form monotone links with exact antiderivatives.

These stand in for the learned link when it is known in advance (the
generalized-linear special case) and serve as ground-truth links for
synthetic data.
"""
import numpy as np

__all__ = ["KnownLink", "IDENTITY", "LOGISTIC", "get_link"]


class KnownLink:
    """A fixed link ``g`` together with ``Phi`` where ``Phi' = g``, ``Phi(0) = 0``."""

    def __init__(self, name, func, antiderivative):
        self.name = name
        self._func = func
        self._anti = antiderivative

    def __call__(self, t):
        return self._func(np.asarray(t, dtype=np.float64))

    def antiderivative(self, t):
        return self._anti(np.asarray(t, dtype=np.float64))

    def __repr__(self):
        return f"KnownLink({self.name})"


def _log_cosh(x):
    # log(cosh(x)) without overflow
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


IDENTITY = KnownLink("linear", lambda t: t, lambda t: 0.5 * t * t)

# 2 / (1 + exp(-t)) - 1 == tanh(t / 2); its integral from 0 is 2 log cosh(t / 2)
LOGISTIC = KnownLink("logistic", lambda t: np.tanh(t / 2.0), lambda t: 2.0 * _log_cosh(t / 2.0))

_BY_NAME = {"linear": IDENTITY, "logistic": LOGISTIC}


def get_link(name):
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; choose from {sorted(_BY_NAME)}") from None

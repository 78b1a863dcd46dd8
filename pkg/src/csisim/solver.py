"""Calibrated single-index fitting by alternating link refits and projected
gradient steps.

Each iteration refits the monotone link on the current projections ``X w``,
takes one gradient step on the calibrated loss plus ridge penalty, and
projects the result back onto the s-atom set::

    w_0 = P(X^T y)
    for t = 1..T:
        g_t = lpav(X w_{t-1}, y)
        w_t = P(w_{t-1} - eta * ((1/n) X^T (g_t(X w_{t-1}) - y) + lam * w_{t-1}))

The shipped link is refit on ``X w_T`` so that it matches the shipped
weights.
"""
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .data import Dataset, matvec, transpose_matvec
from .lpav import DEFAULT_TOL, lpav_fit
from .model import SimModel

__all__ = [
    "TrainConfig",
    "FitReport",
    "DivergenceError",
    "csi_fit",
    "calibrated_loss",
    "gradient",
]


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters for :func:`csi_fit`.

    `projector` is any object with ``project(w)`` and ``cardinality(w, tol)``
    from :mod:`csisim.atoms`; it carries the atom budget s. Setting `link`
    to a :class:`csisim.links.KnownLink` holds the link fixed instead of
    refitting it every iteration.
    """

    projector: Any
    eta: float = 1.0
    lam: float = 0.0
    T: int = 50
    lpav_tol: float = DEFAULT_TOL
    track_history: bool = False
    reference_w: Optional[np.ndarray] = None
    stop_tol: Optional[float] = None
    link: Any = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("step size eta must be > 0")
        if not self.lam >= 0:
            raise ValueError("ridge weight lambda must be >= 0")
        if self.T < 1:
            raise ValueError("iteration count T must be >= 1")

    @property
    def s(self):
        return self.projector.s


@dataclass(frozen=True)
class FitReport:
    model: SimModel
    objective_trace: np.ndarray
    iterations_run: int
    distance_trace: Optional[np.ndarray] = None
    initial_distance: Optional[float] = None
    initial_w: Optional[np.ndarray] = None
    history: Optional[list] = None
    lpav_seconds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_seconds: np.ndarray = field(default_factory=lambda: np.zeros(0))


def calibrated_loss(ds, w, g):
    """Mean of ``Phi(w.x_i) - y_i * w.x_i`` with ``Phi' = g`` and ``Phi(0) = 0``."""
    p = matvec(ds.features, w)
    return float(np.mean(g.antiderivative(p) - ds.responses * p))


def gradient(ds, w, g, lam=0.0):
    """``(1/n) X^T (g(X w) - y) + lam * w``."""
    w = np.asarray(w, dtype=np.float64)
    p = matvec(ds.features, w)
    r = g(p) - ds.responses
    return transpose_matvec(ds.features, r) / ds.n + lam * w


def _objective(ds, p, g, w, lam):
    return float(np.mean(g.antiderivative(p) - ds.responses * p)) + 0.5 * lam * float(w @ w)


def csi_fit(ds, cfg):
    """Run the calibrated single-index iteration and package the result.

    The objective trace holds, for each iteration t, the calibrated loss
    plus ridge penalty at ``w_t`` under the link refit on ``X w_t`` (or the
    fixed link, when one is configured). Per-iteration wall times of the
    link refit and of the gradient/projection step are reported separately.

    Raises
    ------
    DivergenceError
        If an iterate becomes non-finite (usually a step size that is too
        large); the message names the iteration.
    """
    # overflow surfaces as a DivergenceError below, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _csi_fit(ds, cfg)


def _csi_fit(ds, cfg):
    if not isinstance(ds, Dataset):
        raise TypeError("csi_fit expects a Dataset")
    if ds.n == 0:
        raise ValueError("dataset is empty")
    proj = cfg.projector
    if proj.d != ds.d:
        raise ValueError(f"projector dimension {proj.d} does not match data dimension {ds.d}")
    X, y, n = ds.features, ds.responses, ds.n
    ref = None if cfg.reference_w is None else np.asarray(cfg.reference_w, dtype=np.float64)

    def fit_link(p):
        return cfg.link if cfg.link is not None else lpav_fit(p, y, tol=cfg.lpav_tol)

    w = proj.project(transpose_matvec(X, y))
    w0 = w.copy()
    p = matvec(X, w)
    g = fit_link(p)

    objective, distance, history = [], [], []
    lpav_sec, step_sec = [], []
    for t in range(1, cfg.T + 1):
        t0 = time.perf_counter()
        r = g(p) - y
        w_tilde = w - cfg.eta * (transpose_matvec(X, r) / n + cfg.lam * w)
        w_new = proj.project(w_tilde)
        if not np.all(np.isfinite(w_new)):
            raise DivergenceError(f"iterate became non-finite at iteration {t}; reduce eta")
        p = matvec(X, w_new)
        t1 = time.perf_counter()
        g = fit_link(p)
        t2 = time.perf_counter()
        step_sec.append(t1 - t0)
        lpav_sec.append(t2 - t1)

        change = np.linalg.norm(w_new - w) / max(1.0, np.linalg.norm(w))
        w = w_new
        objective.append(_objective(ds, p, g, w, cfg.lam))
        if ref is not None:
            distance.append(float(np.linalg.norm(w - ref)))
        if cfg.track_history:
            history.append(w.copy())
        if cfg.stop_tol is not None and change < cfg.stop_tol:
            break

    # a fixed link is not a MonotoneLink; ship the data-calibrated refit
    shipped = g if cfg.link is None else lpav_fit(p, y, tol=cfg.lpav_tol)
    model = SimModel(w, shipped)
    return FitReport(
        model=model,
        objective_trace=np.array(objective),
        iterations_run=len(objective),
        distance_trace=None if ref is None else np.array(distance),
        initial_distance=None if ref is None else float(np.linalg.norm(w0 - ref)),
        initial_w=w0,
        history=history if cfg.track_history else None,
        lpav_seconds=np.array(lpav_sec),
        step_seconds=np.array(step_sec),
    )

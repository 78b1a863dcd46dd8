"""Synthetic single-index data and the iterate-convergence experiment.

All randomness comes from numpy's PCG64 generator seeded with SynthSpec.seed.
Draw order inside :func:`generate` is fixed: covariates (row-major),
support positions, nonzero values, then label noise. Independent runs in
:func:`convergence_experiment` get child streams from
``SeedSequence(seed).spawn(len(d_list))``.
"""
import io
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .atoms import SparseProjector
from .data import CLASSIFICATION, REGRESSION, Dataset, FeatureMatrix
from .lpav import MonotoneLink
from .solver import DivergenceError, TrainConfig, csi_fit

__all__ = [
    "SynthSpec",
    "logistic_link",
    "linear_link",
    "generate",
    "convergence_experiment",
    "ConvergenceResult",
    "write_trace_csv",
    "GENERATOR_NAME",
    "DEFAULT_D_LIST",
    "DEFAULT_ETAS",
]

GENERATOR_NAME = "numpy.random.PCG64"
DEFAULT_D_LIST = (400, 1600, 6400)
DEFAULT_ETAS = (0.25, 0.5, 1.0, 2.0)


def logistic_link(t):
    """``2 / (1 + exp(-t)) - 1``, i.e. ``tanh(t / 2)``; slope at most 1/2."""
    return np.tanh(np.asarray(t, dtype=np.float64) / 2.0)


def linear_link(t):
    return np.asarray(t, dtype=np.float64)


_LINKS = {"logistic": logistic_link, "linear": linear_link}


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic sparse single-index data set.

    ``noise="bernoulli"`` draws ``y = +1`` with probability
    ``(1 + g(w.x)) / 2``; ``noise="none"`` sets ``y = g(w.x)``.
    ``feature_std`` scales the Gaussian covariates (1.0 gives N(0, I)).
    """

    n: int
    d: int
    k: int
    seed: int
    link: Union[str, MonotoneLink] = "logistic"
    noise: str = "bernoulli"
    feature_std: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.k <= self.d:
            raise ValueError("need 0 <= k <= d")
        if self.noise not in ("bernoulli", "none"):
            raise ValueError(f"unknown noise mechanism {self.noise!r}")
        if isinstance(self.link, str) and self.link not in _LINKS:
            raise ValueError(f"unknown link {self.link!r}")
        if not self.feature_std > 0:
            raise ValueError("feature_std must be positive")

    def link_function(self):
        return _LINKS[self.link] if isinstance(self.link, str) else self.link


def generate(spec, rng=None):
    """Draw ``(dataset, w_star, g_star)`` for `spec`.

    `rng` overrides the generator built from ``spec.seed`` (used for
    spawned child streams).
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed)) if rng is None else rng
    g = spec.link_function()
    X = rng.standard_normal((spec.n, spec.d)) * spec.feature_std
    w_star = np.zeros(spec.d)
    support = rng.choice(spec.d, size=spec.k, replace=False)
    w_star[np.sort(support)] = rng.standard_normal(spec.k)
    mean = g(X @ w_star)
    if spec.noise == "bernoulli":
        prob = np.clip((1.0 + mean) / 2.0, 0.0, 1.0)
        y = np.where(rng.random(spec.n) < prob, 1.0, -1.0)
        kind = CLASSIFICATION
    else:
        y = mean
        kind = REGRESSION
    return Dataset(FeatureMatrix(X), y, kind), w_star, g


@dataclass(frozen=True)
class ConvergenceResult:
    d: int
    k: int
    s: int
    eta: float
    initial_distance: float
    distances: np.ndarray
    by_eta: dict

    @property
    def final_distance(self):
        return float(self.distances[-1])


def _run_one(d, seed_seq, n, lam, T, etas, sparsity_factor):
    k = max(1, int(round(math.sqrt(d))))
    s = min(d, sparsity_factor * k)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    ds, w_star, _ = generate(SynthSpec(n=n, d=d, k=k, seed=0), rng=rng)
    proj = SparseProjector(d, s)
    by_eta = {}
    for eta in etas:
        cfg = TrainConfig(projector=proj, eta=eta, lam=lam, T=T, reference_w=w_star)
        try:
            rep = csi_fit(ds, cfg)
        except DivergenceError:
            continue
        by_eta[eta] = rep
    if not by_eta:
        raise DivergenceError(f"every step size diverged for d={d}")
    # lowest final distance wins; ties go to the smaller step
    best = min(by_eta, key=lambda e: (by_eta[e].distance_trace[-1], e))
    rep = by_eta[best]
    return ConvergenceResult(
        d=d,
        k=k,
        s=s,
        eta=best,
        initial_distance=rep.initial_distance,
        distances=rep.distance_trace,
        by_eta={e: r.distance_trace for e, r in by_eta.items()},
    )


def convergence_experiment(d_list=DEFAULT_D_LIST, seed=0, n=500, lam=1e-3, T=50,
                           etas=DEFAULT_ETAS, sparsity_factor=5):
    """Track ``||w_t - w_star||`` over the iterations for each dimension.

    For each d: ``k = round(sqrt(d))``, ``s = 5k``, Gaussian covariates,
    logistic link with Bernoulli labels. Every step size in `etas` is run and
    the one with the lowest final distance is reported.
    """
    d_list = [int(d) for d in d_list]
    if any(d < 4 for d in d_list):
        raise ValueError("every dimension must be >= 4")
    children = np.random.SeedSequence(seed).spawn(len(d_list))
    return [_run_one(d, ss, n, lam, T, etas, sparsity_factor) for d, ss in zip(d_list, children)]


def write_trace_csv(results, fh=None):
    """Write ``d,t,distance`` rows (t = 1..T); returns the text if `fh` is None."""
    out = io.StringIO() if fh is None else fh
    out.write("d,t,distance\n")
    for res in results:
        for t, dist in enumerate(res.distances, 1):
            out.write(f"{res.d},{t},{float(dist)!r}\n")
    return out.getvalue() if fh is None else None

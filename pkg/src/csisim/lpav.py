"""Monotone, 1-Lipschitz least-squares fits of a univariate response.

Given projections ``p`` and responses ``y``, :func:`lpav_fit` solves::

    min_z  sum_i (z_i - y_i)^2
    s.t.   0 <= z_j - z_i <= p_j - p_i   whenever p_i <= p_j

and returns the fitted values as a :class:`MonotoneLink`, a piecewise-linear
function that interpolates between the sorted knots and is clamped outside
them.

After sorting, the pairwise constraints telescope into the chain
``0 <= z_{k+1} - z_k <= p_{k+1} - p_k``. The default solver runs a forward
dynamic program over the derivative of the partial cost-to-go, which is a
continuous increasing piecewise-linear function, then recovers the optimum
by a backward clipping pass. It is exact up to round-off and costs O(m^2)
in the number of distinct knots. A Dykstra alternating-projection solver
over the same chain is kept as an independent route.
"""
import numpy as np

from .data import as_vector

__all__ = [
    "MonotoneLink",
    "LPAVConvergenceError",
    "lpav_fit",
    "link_eval",
    "merge_ties",
    "kkt_residual",
]

DEFAULT_TOL = 1e-8


class LPAVConvergenceError(RuntimeError):
    pass


class MonotoneLink:
    """Piecewise-linear, non-decreasing, 1-Lipschitz function.

    Parameters
    ----------
    knots : array_like
        Strictly increasing knot locations.
    values : array_like
        Function values at the knots.
    check_tol : float
        Slack allowed on the monotone and Lipschitz checks, relative to the
        magnitude of the data, to absorb round-off from the solver.
    """

    def __init__(self, knots, values, check_tol=1e-9):
        knots = as_vector(knots, "knots")
        values = as_vector(values, "values")
        if knots.size == 0:
            raise ValueError("a link needs at least one knot")
        if knots.shape != values.shape:
            raise ValueError("knots and values differ in length")
        dk = np.diff(knots)
        if np.any(dk <= 0):
            raise ValueError("knots must be strictly increasing")
        dz = np.diff(values)
        slack = check_tol * (1.0 + np.max(np.abs(values)) + np.max(np.abs(knots)))
        if np.any(dz < -slack):
            raise ValueError("link values must be non-decreasing")
        if np.any(dz - dk > slack):
            raise ValueError("link must be 1-Lipschitz between knots")
        self.knots = knots
        self.values = values
        self._antiderivative = None

    def __call__(self, zeta):
        return link_eval(self, zeta)

    def __len__(self):
        return self.knots.size

    def __eq__(self, other):
        if not isinstance(other, MonotoneLink):
            return NotImplemented
        return np.array_equal(self.knots, other.knots) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return (
            f"MonotoneLink(m={self.knots.size}, range=[{self.values[0]:.4g}, {self.values[-1]:.4g}])"
        )

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.knots)

    def antiderivative(self, t):
        """Exact integral of the link from 0 to `t` (piecewise quadratic)."""
        if self._antiderivative is None:
            # integral from knots[0] up to each knot
            seg = 0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.knots)
            cum = np.concatenate(([0.0], np.cumsum(seg)))
            self._antiderivative = cum
        t = np.asarray(t, dtype=np.float64)
        out = self._integral_from_first(t)
        return out - self._integral_from_first(np.float64(0.0))

    def _integral_from_first(self, t):
        p, z, cum = self.knots, self.values, self._antiderivative
        t = np.asarray(t, dtype=np.float64)
        idx = np.clip(np.searchsorted(p, t, side="right") - 1, 0, p.size - 1)
        base = cum[idx]
        h = t - p[idx]
        if p.size > 1:
            slope = np.concatenate((self.slopes, [0.0]))[idx]
        else:
            slope = np.zeros_like(h)
        left = t < p[0]
        slope = np.where(left, 0.0, slope)
        return base + z[idx] * h + 0.5 * slope * h * h


def link_eval(g, zeta):
    """Evaluate the link: interpolate between knots, clamp outside them."""
    scalar = np.ndim(zeta) == 0
    out = np.interp(np.asarray(zeta, dtype=np.float64), g.knots, g.values)
    return float(out) if scalar else out


def merge_ties(p, y, weights=None):
    """Sort by `p` and merge equal projections into weighted knots.

    Returns ``(knots, targets, counts, order)`` where ``targets`` holds the
    weighted mean response at each distinct knot.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    order = np.argsort(p, kind="stable")
    ps, ys, ws = p[order], y[order], w[order]
    start = np.concatenate(([True], ps[1:] != ps[:-1]))
    starts = np.flatnonzero(start)
    counts = np.add.reduceat(ws, starts)
    targets = np.add.reduceat(ws * ys, starts) / counts
    return ps[starts], targets, counts, order


def kkt_residual(z, targets, counts, gaps):
    """Largest violation of the KKT conditions of the weighted chain problem.

    The multiplier of constraint k is the running sum of the objective
    gradient; a positive multiplier must sit on an active upper bound, a
    negative one on an active lower bound.
    """
    if z.size == 1:
        return abs(float(z[0] - targets[0]))
    r = counts * (z - targets)
    nu = np.cumsum(r)
    dz = np.diff(z)
    infeas = max(0.0, float(np.max(-dz)), float(np.max(dz - gaps)))
    slack = np.where(nu[:-1] > 0, gaps - dz, dz)
    comp = float(np.max(np.minimum(np.abs(nu[:-1]), np.abs(slack))))
    return max(infeas, comp, abs(float(nu[-1])))


def _zero_of(xs, vs, sl, sr):
    """Root of an increasing continuous piecewise-linear function."""
    if vs[0] >= 0.0:
        return xs[0] - vs[0] / sl
    if vs[-1] <= 0.0:
        return xs[-1] - vs[-1] / sr
    j = int(np.searchsorted(vs, 0.0))
    x0, x1, v0, v1 = xs[j - 1], xs[j], vs[j - 1], vs[j]
    return x0 + (x1 - x0) * (-v0) / (v1 - v0)


def _solve_chain_dp(targets, counts, gaps):
    m = targets.size
    # derivative of the cost-to-go, as breakpoints xs with values vs and
    # constant slopes sl / sr beyond the first / last breakpoint
    xs = np.array([targets[0]])
    vs = np.array([0.0])
    sl = sr = counts[0]
    mins = np.empty(m)
    for k in range(m - 1):
        mk = _zero_of(xs, vs, sl, sr)
        mins[k] = mk
        lo = xs < mk
        hi = xs > mk
        xs = np.concatenate((xs[lo], [mk, mk + gaps[k]], xs[hi] + gaps[k]))
        vs = np.concatenate((vs[lo], [0.0, 0.0], vs[hi]))
        c, t = counts[k + 1], targets[k + 1]
        vs = vs + c * (xs - t)
        sl += c
        sr += c
    z = np.empty(m)
    z[-1] = _zero_of(xs, vs, sl, sr)
    for k in range(m - 2, -1, -1):
        z[k] = min(max(mins[k], z[k + 1] - gaps[k]), z[k + 1])
    return z


def _project_pairs(z, counts, gaps, start):
    """Weighted projection onto the disjoint constraints (k, k+1), k = start, start+2, ..."""
    z = z.copy()
    a = np.arange(start, z.size - 1, 2)
    if a.size == 0:
        return z
    b = a + 1
    diff = z[b] - z[a]
    target = np.clip(diff, 0.0, gaps[a])
    excess = diff - target
    ca, cb = counts[a], counts[b]
    z[a] += cb / (ca + cb) * excess
    z[b] -= ca / (ca + cb) * excess
    return z


def _solve_chain_dykstra(targets, counts, gaps, tol, max_sweeps):
    x = targets.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for sweep in range(max_sweeps):
        y = _project_pairs(x + p, counts, gaps, 0)
        p = x + p - y
        x_new = _project_pairs(y + q, counts, gaps, 1)
        q = y + q - x_new
        x = x_new
        if sweep % 16 == 0 or sweep == max_sweeps - 1:
            if kkt_residual(x, targets, counts, gaps) < tol:
                return x
    raise LPAVConvergenceError(
        f"Dykstra chain solver did not reach tol={tol:g} in {max_sweeps} sweeps"
    )


def lpav_fit(p, y, tol=DEFAULT_TOL, method="dp"):
    """Fit the best monotone 1-Lipschitz function to ``(p_i, y_i)`` pairs.

    Parameters
    ----------
    p, y : array_like
        Projections and responses, same length n >= 1.
    tol : float
        Bound on the KKT residual of the returned solution, relative to the
        scale of the responses.
    method : {"dp", "dykstra"}
        Exact dynamic program (default) or iterative Dykstra projections.

    Returns
    -------
    MonotoneLink
        Knots are the distinct values of `p`; tied projections share the
        mean of their responses.
    """
    p = as_vector(p, "p")
    y = as_vector(y, "y")
    if p.shape != y.shape:
        raise ValueError(f"p has length {p.size} but y has length {y.size}")
    if p.size == 0:
        raise ValueError("lpav_fit needs at least one sample")
    if not tol > 0:
        raise ValueError("tol must be positive")
    knots, targets, counts, _ = merge_ties(p, y)
    m = knots.size
    if m == 1:
        return MonotoneLink(knots, targets)
    gaps = np.diff(knots)
    if method == "dp":
        z = _solve_chain_dp(targets, counts, gaps)
    elif method == "dykstra":
        z = _solve_chain_dykstra(targets, counts, gaps, tol, max_sweeps=10 * m * m + 100)
    else:
        raise ValueError(f"unknown LPAV method {method!r}")
    scale = 1.0 + float(np.max(np.abs(y))) * float(np.sum(counts)) / m
    res = kkt_residual(z, targets, counts, gaps)
    if res > tol * scale:
        raise LPAVConvergenceError(f"LPAV KKT residual {res:.3g} exceeds tol={tol:g}")
    return MonotoneLink(knots, z)

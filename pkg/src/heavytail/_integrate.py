"""Quadrature and tabulated-inversion helpers used by the model layer."""

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import EvaluationError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def integrate(f, a, b, *, rel_tol=1e-12, points=None, limit=400):
    """Adaptive quadrature of ``f`` over ``[a, b]`` with a policed tolerance.

    Raises EvaluationError (carrying the achieved relative tolerance) when
    the quadrature error estimate stays above ``100 * rel_tol`` even after a
    retry with a larger subdivision limit.
    """
    if points is not None and (np.isinf(a) or np.isinf(b)):
        points = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, a, b, epsabs=0.0, epsrel=rel_tol, limit=limit, points=points)
        scale = max(abs(val), 1e-300)
        if err > 100.0 * rel_tol * scale:
            val, err = quad(f, a, b, epsabs=0.0, epsrel=rel_tol, limit=4 * limit, points=points)
            scale = max(abs(val), 1e-300)
    if err > 100.0 * rel_tol * scale:
        raise EvaluationError(
            f"quadrature did not converge on [{a}, {b}]: "
            f"achieved relative tolerance {err / scale:.3e}",
            achieved_tol=err / scale,
        )
    return val


def integrate_split(f, lo, hi, *, rel_tol=1e-12, bottom_scale=1.0, top_scale=None):
    """Integrate over [lo, hi] with geometric ladders from both endpoints.

    Keeps power-law bulks near ``lo`` and exponentially rising edges near
    ``hi`` resolved when the interval spans many decades.
    """
    span = hi - lo
    if span <= 0.0:
        return 0.0
    edges = {lo, hi}
    s = float(bottom_scale)
    while s < span:
        edges.add(lo + s)
        s *= 4.0
    if top_scale is not None:
        s = float(top_scale)
        while s < span:
            edges.add(hi - s)
            s *= 4.0
    edges = sorted(edges)
    return sum(integrate(f, a, b, rel_tol=rel_tol)
               for a, b in zip(edges[:-1], edges[1:]))


def integrate_power_tail(f, x, *, rel_tol=1e-12):
    """Integral of ``f`` over [x, inf) for power-law-decaying ``f``.

    Maps to a finite interval through v = x/s, which adaptive quadrature
    handles far better than the built-in infinite transform on slow tails.
    """
    if not x > 0.0:
        raise ValueError("power-tail integration needs x > 0")
    return integrate(lambda s: f(x / s) * x / (s * s), 0.0, 1.0, rel_tol=rel_tol)


def panel_integrals(f, edges):
    """24-point Gauss-Legendre integral of ``f`` on each panel of ``edges``.

    ``f`` must accept a flat ndarray.  Returns one value per panel.
    """
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(x.ravel()).reshape(x.shape)
    return half * (vals @ _GL_WEIGHTS)


class TabulatedDensitySampler:
    """Inverse-transform sampler for an unnormalized 1-D density.

    The density is tabulated on an adaptively refined grid and treated as
    piecewise linear between knots.  Inversion is exact for the tabulated
    approximation; refinement keeps per-interval mass below ``mass_tol`` of
    the total and the midpoint density within ``shape_tol`` of the linear
    interpolant, so the sampled law tracks the true one closely.
    """

    def __init__(self, density, lo, hi, *, mass_tol=1e-4, shape_tol=1e-3,
                 init_knots=1024, log_spaced=False, max_rounds=80):
        if not hi > lo:
            raise ValueError(f"empty support [{lo}, {hi}]")
        if log_spaced:
            knots = lo + np.expm1(np.linspace(0.0, np.log1p(hi - lo), init_knots + 1))
            knots[0], knots[-1] = lo, hi
        else:
            knots = np.linspace(lo, hi, init_knots + 1)
        fv = np.asarray(density(knots), dtype=float)
        for _ in range(max_rounds):
            h = np.diff(knots)
            masses = 0.5 * h * (fv[1:] + fv[:-1])
            total = masses.sum()
            if total <= 0.0:
                raise EvaluationError("tabulated density has no mass")
            candidate = masses > max(1e-13 * total, 0.0)
            mids = 0.5 * (knots[1:] + knots[:-1])
            fm = np.zeros_like(mids)
            fm[candidate] = density(mids[candidate])
            lin = 0.5 * (fv[1:] + fv[:-1])
            bad_shape = candidate & (np.abs(fm - lin) > shape_tol * fm + 1e-12 * fv.max())
            bad_mass = masses > mass_tol * total
            split = bad_shape | bad_mass
            if not split.any():
                break
            knots = np.insert(knots, np.nonzero(split)[0] + 1, mids[split])
            fv = np.insert(fv, np.nonzero(split)[0] + 1, fm[split])
        h = np.diff(knots)
        masses = 0.5 * h * (fv[1:] + fv[:-1])
        self.knots = knots
        self.fv = fv
        self._h = h
        self._cum = np.concatenate(([0.0], np.cumsum(masses)))
        self.total_mass = self._cum[-1]

    def sample(self, rng, size=None):
        n = 1 if size is None else int(size)
        u = rng.random(n) * self.total_mass
        j = np.searchsorted(self._cum, u, side="right") - 1
        j = np.clip(j, 0, len(self._h) - 1)
        w = u - self._cum[j]
        f0 = self.fv[j]
        slope = (self.fv[j + 1] - f0) / self._h[j]
        # piecewise-linear density: invert f0*t + slope*t^2/2 = w
        disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * w, 0.0))
        denom = f0 + disc
        t = np.where(denom > 0.0, 2.0 * w / np.where(denom > 0.0, denom, 1.0), 0.0)
        out = self.knots[j] + np.minimum(t, self._h[j])
        return float(out[0]) if size is None else out

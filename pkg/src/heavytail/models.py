"""Heavy-tailed increment models and their sampling primitives.

Every model exposes the same surface: exact or quadrature-backed tail
evaluation, integrated tails, nominal sampling, conditional-on-large
sampling, and truncated exponential twisting.  All randomness enters
through an explicitly passed ``numpy.random.Generator``, so instances are
immutable and safe to share across threads.

Convention for thresholds: "jump" events and conditional samplers use the
closed inequality ``X >= c`` (weighted by ``tail_geq``), truncation uses the
strict ``X < u``.  The two coincide for continuous models and make the
estimators exactly unbiased on discrete models with atoms.
"""

import math

import numpy as np
from scipy import special

from ._integrate import (_GL_NODES, _GL_WEIGHTS, TabulatedDensitySampler,
                         integrate, integrate_power_tail, integrate_split)
from .errors import EvaluationError, SamplingError

__all__ = [
    "IncrementModel",
    "ParetoShifted",
    "PurePareto",
    "ProductLambdaLaplace",
    "QueueIncrement",
    "DiscreteToy",
    "TwistedTruncated",
    "tail",
    "integrated_tail",
    "g_beta_tail",
    "g_beta_integrated",
    "sample",
    "sample_conditional_tail",
    "make_twisted",
]

_CHUNK = 1 << 20


class TwistedTruncated:
    """Exponentially twisted version of ``base`` truncated to ``x < threshold_u``.

    ``log_mgf`` is the log of the twisted normalizer restricted to the
    truncation region; every sample is strictly below ``threshold_u``.
    """

    def __init__(self, base, threshold_u, theta, log_mgf, sample_fn):
        self.base = base
        self.threshold_u = float(threshold_u)
        self.theta = float(theta)
        self.log_mgf = float(log_mgf)
        self._sample_fn = sample_fn

    def sample(self, rng, size=None):
        out = self._sample_fn(rng, 1 if size is None else int(size))
        if not np.all(out < self.threshold_u):
            raise SamplingError("twisted sample reached the truncation point")
        return float(out[0]) if size is None else out


class IncrementModel:
    """Common surface for increment distributions; see module docstring."""

    kind = "abstract"
    alpha = math.nan
    mean_shift = 0.0
    support_left = -math.inf

    # -- tails ---------------------------------------------------------
    def tail(self, x):
        """Pr{X > x}."""
        x = np.asarray(x, dtype=float)
        out = self._tail_arr(np.atleast_1d(x))
        return float(out[0]) if x.ndim == 0 else out

    def tail_geq(self, x):
        """Pr{X >= x}; equals tail() for continuous models."""
        return self.tail(x)

    def tail_grid(self, x0, step, count):
        """Pr{X > x0 + j*step} for j = 0..count-1 (vectorized fast path)."""
        return self._tail_arr(x0 + step * np.arange(count, dtype=float))

    def tail_geq_grid(self, x0, step, count):
        return self.tail_grid(x0, step, count)

    def integrated_tail(self, x):
        """Integral of the tail from x to infinity."""
        raise NotImplementedError

    # -- sampling ------------------------------------------------------
    def sample(self, rng, size=None):
        """One draw (or ``size`` draws) from the nominal distribution."""
        raise NotImplementedError

    def sample_conditional_geq(self, threshold, rng, size=None):
        """Draws from the law of X conditioned on X >= threshold."""
        raise NotImplementedError

    # -- twisting ------------------------------------------------------
    def log_mgf_truncated(self, theta, u):
        """log of integral of exp(theta*x) over x < u under the model law."""
        raise NotImplementedError

    def make_twisted(self, u, theta):
        """Truncated twisted sampler with cached log normalizer."""
        raise NotImplementedError

    def _log_mgf_zero(self, u):
        mass = 1.0 - self.tail_geq(u)
        if mass <= 0.0:
            raise EvaluationError(f"no mass below truncation point {u}")
        return math.log(mass)

    def _tail_arr(self, x):
        raise NotImplementedError


class _ParetoFamily(IncrementModel):
    """Pareto-tailed variable V with tail (1 + t - v0)^(-alpha) on t >= v0.

    ``v0 = 0`` gives the shifted form (1+t)^(-alpha) on t >= 0, ``v0 = 1``
    the pure power form t^(-alpha) on t >= 1.  ``centered`` subtracts the
    mean so the increment has zero expectation.
    """

    _origin = 0.0

    def __init__(self, alpha, *, centered=True, force_quadrature=False):
        if not alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {alpha}")
        self.alpha = float(alpha)
        self.centered = bool(centered)
        self.force_quadrature = bool(force_quadrature)
        self.mean_shift = (self._origin + 1.0 / (alpha - 1.0)) if centered else 0.0
        self.support_left = self._origin - self.mean_shift

    def _v_tail(self, t):
        z = np.maximum(1.0 + t - self._origin, 1.0)
        return z ** -self.alpha

    def _v_density(self, v):
        z = 1.0 + v - self._origin
        return np.where(z < 1.0, 0.0, self.alpha * z ** -(self.alpha + 1.0))

    def _tail_arr(self, x):
        if self.force_quadrature:
            return np.array([self._tail_quad(float(xi)) for xi in x])
        return self._v_tail(x + self.mean_shift)

    def _tail_quad(self, x):
        t = x + self.mean_shift
        if t <= self._origin:
            return 1.0
        return integrate_power_tail(lambda v: float(self._v_density(np.asarray(v))), t)

    def integrated_tail(self, x):
        t = x + self.mean_shift
        base = 1.0 / (self.alpha - 1.0)
        if self.force_quadrature:
            if t >= self._origin and t > 0.0:
                return integrate_power_tail(lambda v: float(self._v_tail(v)), t)
            start = max(self._origin, 1e-9)
            return (start - t) + integrate_power_tail(lambda v: float(self._v_tail(v)), start)
        if t >= self._origin:
            return (1.0 + t - self._origin) ** (1.0 - self.alpha) * base
        return (self._origin - t) + base

    def sample(self, rng, size=None):
        v = self._origin + rng.pareto(self.alpha, size)
        return v - self.mean_shift

    def sample_conditional_geq(self, threshold, rng, size=None):
        t = max(threshold + self.mean_shift, self._origin)
        z = 1.0 + t - self._origin
        u = 1.0 - rng.random(size)
        v = self._origin - 1.0 + z * u ** (-1.0 / self.alpha)
        return v - self.mean_shift

    def _twist_log_density(self, theta):
        a, v0, m = self.alpha, self._origin, self.mean_shift
        la = math.log(a)

        def logf(v):
            return la - (a + 1.0) * np.log1p(v - v0) + theta * (v - m)

        return logf

    def log_mgf_truncated(self, theta, u):
        if theta < 0.0:
            raise ValueError("theta must be nonnegative")
        if theta == 0.0:
            return self._log_mgf_zero(u)
        hi = u + self.mean_shift
        if hi <= self._origin:
            raise EvaluationError(f"no mass below truncation point {u}")
        logf = self._twist_log_density(theta)

        def f(v):
            return np.exp(logf(np.asarray(v)))

        # power-law bulk near the support edge, exponential rise toward the
        # truncation point: ladder from both ends
        val = integrate_split(f, self._origin, hi, bottom_scale=1.0, top_scale=1.0 / theta)
        return math.log(val)

    def make_twisted(self, u, theta):
        log_mgf = self.log_mgf_truncated(theta, u)
        hi = u + self.mean_shift
        logf = self._twist_log_density(theta)
        sampler = TabulatedDensitySampler(
            lambda v: np.exp(logf(v)), self._origin, hi, log_spaced=True)
        m = self.mean_shift

        def draw(rng, n):
            return sampler.sample(rng, n) - m

        return TwistedTruncated(self, u, theta, log_mgf, draw)


class ParetoShifted(_ParetoFamily):
    """Tail (1+t)^(-alpha) on t >= 0, optionally centered to zero mean."""

    kind = "pareto_shifted"
    _origin = 0.0


class PurePareto(_ParetoFamily):
    """Tail t^(-alpha) on t >= 1, optionally centered to zero mean."""

    kind = "pure_pareto"
    _origin = 1.0


class ProductLambdaLaplace(IncrementModel):
    """Product X = Lambda * R with Pareto(alpha_lambda) Lambda and Laplace(1) R.

    Pr{Lambda > x} = min(1, x^-alpha_lambda) and R has density exp(-|x|)/2,
    independent of Lambda.  X is symmetric with zero mean and a regularly
    varying tail of index alpha_lambda.  The tail reduces to an incomplete
    gamma function:

        Pr{X > x} = (a/2) * x^-a * gamma_lower(a, x)  for x > 0, a = alpha_lambda,

    which the closed-form path evaluates through the regularized incomplete
    gamma; ``force_quadrature`` integrates Pr{R > x/lam} against the Pareto
    density instead.
    """

    kind = "product_lambda_laplace"

    def __init__(self, alpha_lambda=4.0, *, force_quadrature=False):
        if not alpha_lambda > 1.0:
            raise ValueError(f"alpha_lambda must exceed 1, got {alpha_lambda}")
        self.alpha = float(alpha_lambda)
        self.mean_shift = 0.0
        self.support_left = -math.inf
        self.force_quadrature = bool(force_quadrature)
        self._gamma_a = math.gamma(self.alpha)
        self._gamma_a1 = math.gamma(self.alpha - 1.0)

    def _positive_tail(self, x):
        a = self.alpha
        x = np.asarray(x, dtype=float)
        small = x < 1e-6
        xs = np.where(small, 1.0, x)
        main = 0.5 * a * self._gamma_a * special.gammainc(a, xs) * np.exp(-a * np.log(xs))
        series = 0.5 - 0.5 * a * x / (a + 1.0) + 0.25 * a * x * x / (a + 2.0)
        return np.where(small, series, main)

    def _tail_arr(self, x):
        if self.force_quadrature:
            return np.array([self._tail_quad(float(xi)) for xi in x])
        out = np.where(x > 0.0, self._positive_tail(np.abs(x)),
                       1.0 - self._positive_tail(np.abs(x)))
        return np.where(x == 0.0, 0.5, out)

    def _tail_quad(self, x):
        # integrate Pr{R > x/lam} against Lambda's density; the substitution
        # s = 1/lam turns the power tail into a finite smooth integral
        if x == 0.0:
            return 0.5
        ax = abs(x)
        a = self.alpha

        def f(s):
            return 0.5 * a * s ** (a - 1.0) * math.exp(-ax * s)

        val = integrate(f, 0.0, 1.0, points=[min(1.0, a / ax)])
        return val if x > 0.0 else 1.0 - val

    def integrated_tail(self, x):
        a = self.alpha
        if x <= 0.0:
            return self.integrated_tail(-x) - x
        if self.force_quadrature:
            return integrate_power_tail(lambda t: float(self._tail_arr(np.atleast_1d(t))[0]), x)
        if x < 1e-6:
            return 0.5 * a / (a - 1.0) - 0.5 * x + 0.25 * a * x * x / (a + 1.0)
        return 0.5 * a * self._gamma_a1 * special.gammainc(a - 1.0, x) * x ** (1.0 - a)

    def sample(self, rng, size=None):
        lam = 1.0 + rng.pareto(self.alpha, size)
        return lam * rng.laplace(0.0, 1.0, size)

    def sample_conditional_geq(self, threshold, rng, size=None):
        c = float(threshold)
        if c <= 0.0:
            return self._conditional_rejection(c, rng, size)
        a = self.alpha
        p_c = special.gammainc(a, c)
        if p_c <= 0.0:
            raise SamplingError(f"conditional tail underflow at threshold {c}")
        # Lambda | X >= c has tail gamma_lower(a, c/x)/gamma_lower(a, c);
        # given Lambda, the Laplace excess over c/Lambda is exactly Exp(1).
        u = rng.random(size)
        s = special.gammaincinv(a, u * p_c)
        lam = c / np.maximum(s, 1e-300)
        r = c / lam + rng.standard_exponential(size)
        return lam * r

    def _conditional_rejection(self, c, rng, size):
        n = 1 if size is None else int(size)
        out = np.empty(n)
        filled = 0
        while filled < n:
            cand = self.sample(rng, max(n - filled, 16) * 2)
            keep = cand[cand >= c]
            take = min(len(keep), n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return float(out[0]) if size is None else out

    @staticmethod
    def _laplace_trunc_mgf(s, c):
        """E[exp(s R) 1(R < c)] for Laplace(1) R, vectorized, s >= 0."""
        s = np.asarray(s, dtype=float)
        c = np.asarray(c, dtype=float)
        neg = c < 0.0
        left = np.where(neg, np.exp((1.0 + s) * np.minimum(c, 0.0)), 1.0) / (2.0 * (1.0 + s))
        d = s - 1.0
        cc = np.maximum(c, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.where(d != 0.0, np.expm1(d * cc) / np.where(d != 0.0, d, 1.0), cc) / 2.0
        return left + np.where(neg, 0.0, right)

    def _twist_marginal(self, theta, u):
        a = self.alpha

        def dens(lam):
            lam = np.asarray(lam, dtype=float)
            return a * lam ** -(a + 1.0) * self._laplace_trunc_mgf(theta * lam, u / lam)

        return dens

    def log_mgf_truncated(self, theta, u):
        if theta < 0.0:
            raise ValueError("theta must be nonnegative")
        if theta == 0.0:
            return self._log_mgf_zero(u)
        dens = self._twist_marginal(theta, u)

        def f(lam):
            return dens(np.asarray(lam))

        # power bulk at lambda = 1 and a far hump near u/(alpha+1); a
        # geometric ladder covers both, then the power tail beyond
        hi = max(100.0, 2.0 / theta, 4.0 * u / (self.alpha + 1.0))
        val = integrate_split(f, 1.0, hi, bottom_scale=0.25)
        val += integrate_power_tail(lambda lam: float(dens(np.asarray(lam))), hi)
        return math.log(val)

    def make_twisted(self, u, theta):
        log_mgf = self.log_mgf_truncated(theta, u)
        if theta == 0.0:
            # plain truncation: rejection against the nominal sampler
            mass = math.exp(log_mgf)
            if mass < 1e-3:
                raise SamplingError("truncated mass too small for rejection sampling")
            model = self

            def draw0(rng, n):
                out = np.empty(n)
                filled = 0
                while filled < n:
                    cand = np.atleast_1d(model.sample(rng, max(16, n - filled)))
                    keep = cand[cand < u]
                    take = min(len(keep), n - filled)
                    out[filled:filled + take] = keep[:take]
                    filled += take
                return out

            return TwistedTruncated(self, u, theta, log_mgf, draw0)

        dens = self._twist_marginal(theta, u)
        a = self.alpha
        # truncate Lambda where the marginal's power tail is negligible
        lam_max = math.exp((theta * u + 36.0 + math.log(1.0 / (2.0 * theta))) / (a + 1.0))
        lam_max = min(max(lam_max, 64.0), 1e12)
        sampler = TabulatedDensitySampler(dens, 1.0, lam_max, log_spaced=True)

        def draw(rng, n):
            lam = sampler.sample(rng, n)
            s = theta * lam
            c = u / lam
            d = s - 1.0
            m_left = 1.0 / (2.0 * (1.0 + s))
            with np.errstate(divide="ignore", invalid="ignore"):
                m_right = np.where(d != 0.0, np.expm1(d * c) / np.where(d != 0.0, d, 1.0), c) / 2.0
            w = rng.random(n) * (m_left + m_right)
            take_left = w <= m_left
            r = np.empty(n)
            wl = np.minimum(w[take_left] / m_left[take_left], 1.0)
            r[take_left] = np.log(np.maximum(wl, 1e-300)) / (1.0 + s[take_left])
            w2 = (w[~take_left] - m_left[~take_left]) / m_right[~take_left]
            dd = d[~take_left]
            cc = c[~take_left]
            with np.errstate(divide="ignore", invalid="ignore"):
                r2 = np.where(dd != 0.0,
                              np.log1p(w2 * np.expm1(dd * cc)) / np.where(dd != 0.0, dd, 1.0),
                              w2 * cc)
            r[~take_left] = r2
            return lam * r

        return TwistedTruncated(self, u, theta, log_mgf, draw)


class QueueIncrement(IncrementModel):
    """Zero-mean increment V - A + drift of a stable M/G/1-type walk.

    V has the shifted Pareto service tail (1+t)^(-service_alpha), A is
    exponential with rate ``rho / E[V]``, and ``drift = E[A] - E[V] > 0`` is
    the amount by which the nominal walk S_n - n*drift slopes downward.  The
    waiting-time tail of the queue equals the level-crossing probability of
    that walk.  Tail evaluation integrates the service tail against the
    exponential arrival, either pointwise (adaptive quadrature) or on
    arithmetic grids through a stable backward recursion.
    """

    kind = "queue_increment"

    def __init__(self, service_alpha=2.5, rho=0.5):
        if not service_alpha > 1.0:
            raise ValueError(f"service_alpha must exceed 1, got {service_alpha}")
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (0,1) for stability, got {rho}")
        self.alpha = float(service_alpha)
        self.rho = float(rho)
        self.mean_service = 1.0 / (service_alpha - 1.0)
        self.rate = rho / self.mean_service
        self.drift = 1.0 / self.rate - self.mean_service
        self.mean_shift = -self.drift
        self.support_left = -math.inf
        self._psi = integrate(
            lambda v: self.alpha * (1.0 + v) ** -(self.alpha + 1.0) * np.exp(-self.rate * v),
            0.0, np.inf)

    def _service_tail(self, t):
        z = 1.0 + np.asarray(t, dtype=float)
        return np.where(z <= 1.0, 1.0, z ** -self.alpha)

    def _tail_pos(self, y):
        # Pr{V - A > y} for y >= 0, integrating over the arrival
        lam, a = self.rate, self.alpha
        scale = (1.0 + y) ** -a

        def f(w):
            return lam * np.exp(-lam * w) * (1.0 + w / (1.0 + y)) ** -a

        return scale * integrate(f, 0.0, np.inf)

    def _tail_arr(self, x):
        y = x - self.drift
        out = np.empty_like(y)
        neg = y < 0.0
        out[neg] = 1.0 - np.exp(self.rate * y[neg]) * self._psi
        for i in np.nonzero(~neg)[0]:
            out[i] = self._tail_pos(float(y[i]))
        return out

    def tail_grid(self, x0, step, count):
        count = int(count)
        if count <= 0:
            return np.empty(0)
        y0 = x0 - self.drift
        if y0 < 0.0 or step <= 0.0:
            return self._tail_arr(x0 + step * np.arange(count, dtype=float))
        lam, a = self.rate, self.alpha
        # backward recursion H_j = I_j + e^(-lam*step) H_{j+1}, vectorized per
        # block through a discounted suffix sum; block length keeps the
        # discount powers above the underflow floor
        decay = math.exp(-lam * step)
        block_len = int(np.clip(math.floor(500.0 / max(lam * step, 1e-12)), 1, 65536))
        w_nodes = 0.5 * step * (_GL_NODES + 1.0)
        w_weights = lam * 0.5 * step * _GL_WEIGHTS * np.exp(-lam * w_nodes)
        powers = decay ** np.arange(block_len + 1, dtype=float)
        out = np.empty(count)
        carry = self._tail_pos(y0 + step * count)
        hi = count
        while hi > 0:
            lo = max(0, hi - block_len)
            y = y0 + step * np.arange(lo, hi, dtype=float)
            panel = ((1.0 + y[:, None] + w_nodes[None, :]) ** -a) @ w_weights
            n = hi - lo
            weighted = powers[:n] * panel
            suffix = np.cumsum(weighted[::-1])[::-1]
            out[lo:hi] = (suffix + powers[n] * carry) / powers[:n]
            carry = out[lo]
            hi = lo
        return out

    def integrated_tail(self, x):
        y = x - self.drift
        lam, a = self.rate, self.alpha
        base = 1.0 / (a - 1.0)

        def itail_v(t):
            t = np.asarray(t, dtype=float)
            pos = (1.0 + np.maximum(t, 0.0)) ** (1.0 - a) * base
            return np.where(t >= 0.0, pos, base - t)

        def f(w):
            return lam * np.exp(-lam * w) * itail_v(y + w)

        split = max(0.0, -y)
        if split > 0.0:
            return integrate(f, 0.0, split) + integrate(f, split, np.inf)
        return integrate(f, 0.0, np.inf)

    def sample(self, rng, size=None):
        v = rng.pareto(self.alpha, size)
        a = rng.exponential(1.0 / self.rate, size)
        return v - a + self.drift

    def sample_conditional_geq(self, threshold, rng, size=None):
        # exact via rejection: propose A nominal and V | V >= max(0, y + A),
        # accept with ratio of service tails (acceptance is near 1 for large y)
        y = float(threshold) - self.drift
        n = 1 if size is None else int(size)
        bound = float(self._service_tail(max(y, 0.0)))
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = max(n - filled, 16)
            a = rng.exponential(1.0 / self.rate, m)
            t = np.maximum(0.0, y + a)
            accept = rng.random(m) * bound <= self._service_tail(t)
            a = a[accept]
            t = t[accept]
            u = 1.0 - rng.random(len(a))
            v = (1.0 + t) * u ** (-1.0 / self.alpha) - 1.0
            x = v - a + self.drift
            take = min(len(x), n - filled)
            out[filled:filled + take] = x[:take]
            filled += take
        return float(out[0]) if size is None else out

    def _twist_log_marginal(self, theta, u):
        lam, a = self.rate, self.alpha
        vstar = u - self.drift
        la = math.log(a)

        def logf(v):
            v = np.asarray(v, dtype=float)
            pen = (lam + theta) * np.maximum(0.0, v - vstar)
            return la - (a + 1.0) * np.log1p(v) + theta * v - pen

        return logf, vstar

    def log_mgf_truncated(self, theta, u):
        if theta < 0.0:
            raise ValueError("theta must be nonnegative")
        if theta == 0.0:
            return self._log_mgf_zero(u)
        lam = self.rate
        logf, vstar = self._twist_log_marginal(theta, u)

        def f(v):
            return np.exp(logf(np.asarray(v)))

        # power bulk near 0, tilted hump just below vstar, exponential decay
        # beyond it
        val = integrate_split(f, 0.0, max(vstar, 0.0),
                              bottom_scale=1.0, top_scale=1.0 / theta)
        val += integrate(f, max(vstar, 0.0), np.inf)
        return theta * self.drift + math.log(lam / (lam + theta)) + math.log(val)

    def make_twisted(self, u, theta):
        log_mgf = self.log_mgf_truncated(theta, u)
        lam = self.rate
        drift = self.drift
        logf, vstar = self._twist_log_marginal(theta, u)
        vmax = max(vstar, 0.0) + 60.0 / lam
        sampler = TabulatedDensitySampler(
            lambda v: np.exp(logf(v)), 0.0, vmax, log_spaced=True)

        def draw(rng, n):
            v = sampler.sample(rng, n)
            a = np.maximum(0.0, v - vstar) + rng.exponential(1.0 / (lam + theta), n)
            return v - a + drift

        return TwistedTruncated(self, u, theta, log_mgf, draw)


class DiscreteToy(IncrementModel):
    """Finite-support toy increment used by the enumeration oracles."""

    kind = "discrete_toy"

    def __init__(self, points, probs):
        points = np.asarray(points, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if points.ndim != 1 or points.shape != probs.shape or len(points) == 0:
            raise ValueError("points and probs must be matching 1-D sequences")
        if np.any(probs <= 0.0):
            raise ValueError("all probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if len(np.unique(points)) != len(points):
            raise ValueError("support points must be distinct")
        order = np.argsort(points)
        self.points = points[order]
        self.probs = probs[order]
        self._cum = np.cumsum(self.probs)
        self._suffix = np.concatenate((np.cumsum(self.probs[::-1])[::-1], [0.0]))
        self.alpha = math.inf
        self.mean_shift = 0.0
        self.support_left = float(self.points[0])

    def _tail_arr(self, x):
        idx = np.searchsorted(self.points, x, side="right")
        return self._suffix[idx]

    def tail_geq(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, np.atleast_1d(x), side="left")
        out = self._suffix[idx]
        return float(out[0]) if x.ndim == 0 else out

    def tail_geq_grid(self, x0, step, count):
        return self.tail_geq(x0 + step * np.arange(count, dtype=float))

    def integrated_tail(self, x):
        return float(np.sum(self.probs * np.maximum(self.points - x, 0.0)))

    def sample(self, rng, size=None):
        idx = np.searchsorted(self._cum, rng.random(size), side="right")
        out = self.points[np.minimum(idx, len(self.points) - 1)]
        return out

    def sample_conditional_geq(self, threshold, rng, size=None):
        lo = np.searchsorted(self.points, threshold, side="left")
        if lo >= len(self.points):
            raise SamplingError(f"no support at or above threshold {threshold}")
        p = self.probs[lo:]
        cum = np.cumsum(p / p.sum())
        idx = lo + np.searchsorted(cum, rng.random(size), side="right")
        return self.points[np.minimum(idx, len(self.points) - 1)]

    def log_mgf_truncated(self, theta, u):
        if theta < 0.0:
            raise ValueError("theta must be nonnegative")
        mask = self.points < u
        if not mask.any():
            raise EvaluationError(f"no atoms below truncation point {u}")
        return float(special.logsumexp(np.log(self.probs[mask]) + theta * self.points[mask]))

    def make_twisted(self, u, theta):
        log_mgf = self.log_mgf_truncated(theta, u)
        mask = self.points < u
        pts = self.points[mask]
        w = np.exp(np.log(self.probs[mask]) + theta * pts - log_mgf)
        cum = np.cumsum(w / w.sum())

        def draw(rng, n):
            idx = np.searchsorted(cum, rng.random(n), side="right")
            return pts[np.minimum(idx, len(pts) - 1)]

        return TwistedTruncated(self, u, theta, log_mgf, draw)


# -- functional surface mirroring the operation contracts ----------------

def tail(model, x):
    return model.tail(x)


def integrated_tail(model, x):
    return model.integrated_tail(x)


def g_beta_tail(model, x, beta):
    """Thinned tail F̄(x) / x^(beta - alpha); requires beta > 2 and x > 0."""
    if not beta > 2.0:
        raise ValueError(f"beta must exceed 2, got {beta}")
    if not math.isfinite(model.alpha):
        raise ValueError("g-tails need a regularly varying model")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("g-tails are defined for x > 0 only")
    out = model.tail(x) / x ** (beta - model.alpha)
    return float(out) if x.ndim == 0 else out


def g_beta_integrated(model, x, beta):
    """Integral of the thinned tail from x to infinity."""
    if not beta > 2.0:
        raise ValueError(f"beta must exceed 2, got {beta}")
    if not math.isfinite(model.alpha):
        raise ValueError("g-tails need a regularly varying model")
    if not x > 0.0:
        raise ValueError("g-tails are defined for x > 0 only")
    if isinstance(model, PurePareto) and not model.centered and not model.force_quadrature \
            and x >= 1.0:
        # pure power tail: the thinned tail is u^-beta exactly
        return x ** (1.0 - beta) / (beta - 1.0)
    return integrate_power_tail(
        lambda v: float(model.tail(v)) * v ** (model.alpha - beta), x)


def sample(model, rng, size=None):
    return model.sample(rng, size)


def sample_conditional_tail(model, threshold, rng, size=None):
    if model.tail_geq(threshold) <= 0.0:
        raise SamplingError(f"tail underflow at threshold {threshold}")
    return model.sample_conditional_geq(threshold, rng, size)


def make_twisted(model, threshold_u, theta):
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    return model.make_twisted(threshold_u, theta)

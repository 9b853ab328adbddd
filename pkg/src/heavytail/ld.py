"""Estimate Pr{S_n > b} by splitting on whether some increment exceeds b.

The event is covered by two disjoint pieces: at least one increment at or
above b (dominant, sampled by forcing one uniformly chosen index into the
conditional tail), and all increments strictly below b (residual, sampled
from the truncated exponentially twisted law).  Each piece gets an exactly
unbiased likelihood-ratio estimator; one composite replication pairs one
draw of each.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeError
from .harness import EstimatorSample, run

__all__ = [
    "RegimeWarning",
    "LdProblem",
    "theta_n_b",
    "sample_Zdom",
    "sample_Zres",
    "zdom_value",
    "zres_value",
    "estimate_large_deviation",
]


class RegimeWarning(UserWarning):
    """The parameters sit outside the regime the efficiency guarantees need."""


@dataclass
class LdProblem:
    """Estimation target Pr{S_n > b} for n i.i.d. increments of ``model``."""

    model: object
    n: int
    b: float
    epsilon_regime: float = 0.1
    _ctx: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.b > 0.0 or not math.isfinite(self.b):
            raise ValueError("b must be positive and finite")
        if not self.epsilon_regime > 0.0:
            raise ValueError("epsilon_regime must be positive")
        if self.b <= self.n ** (self.beta + self.epsilon_regime):
            warnings.warn(
                f"b={self.b} is not above n^(beta+eps)={self.n ** (self.beta + self.epsilon_regime):.4g}; "
                "the single-jump approximation may be poor and the variance "
                "guarantees do not apply",
                RegimeWarning, stacklevel=3)

    @property
    def beta(self) -> float:
        return 1.0 / min(self.model.alpha, 2.0)

    def context(self):
        if self._ctx is None:
            self._ctx = _LdContext(self)
        return self._ctx


class _LdContext:
    """Per-(n, b) cache: twist parameter, log normalizer, twisted sampler."""

    def __init__(self, problem):
        model, n, b = problem.model, problem.n, problem.b
        self.n = n
        self.b = b
        self.theta = theta_n_b(problem)
        self.log_mgf = model.log_mgf_truncated(self.theta, b)
        self.twisted = model.make_twisted(b, self.theta)
        self.tail_geq_b = float(model.tail_geq(b))
        self.bound_dom = n * self.tail_geq_b
        # log of n*F(b)*exp(n*Lambda); the exp(n*Lambda) factor is computed,
        # not assumed O(1)
        self.log_bound_res = -self.theta * b + n * self.log_mgf


def theta_n_b(problem) -> float:
    """Twist rate -log(n*tail(b))/b; positive only for genuinely rare events."""
    nfb = problem.n * float(problem.model.tail(problem.b))
    if nfb >= 1.0:
        raise RegimeError(
            f"n*tail(b) = {nfb:.4g} >= 1: the event is not rare enough for a "
            "positive twist; use naive Monte Carlo instead")
    if nfb <= 0.0:
        raise RegimeError(
            f"tail vanishes at b = {problem.b}: no single increment can reach "
            "the level, so the single-jump split does not apply")
    return -math.log(nfb) / problem.b


def zdom_value(problem, xs) -> float:
    """Dominant-piece likelihood ratio for one increment vector."""
    ctx = problem.context()
    xs = np.asarray(xs, dtype=float)
    count = int(np.count_nonzero(xs >= ctx.b))
    if count == 0 or not xs.sum() > ctx.b:
        return 0.0
    z = ctx.bound_dom / count
    if z > ctx.bound_dom * (1.0 + 1e-12):
        raise AssertionError("dominant estimator exceeded its n*tail(b) bound")
    return z


def zres_value(problem, xs) -> float:
    """Residual-piece likelihood ratio for one truncated-twisted vector."""
    ctx = problem.context()
    xs = np.asarray(xs, dtype=float)
    s = float(xs.sum())
    if not s > ctx.b:
        return 0.0
    logz = -ctx.theta * s + ctx.n * ctx.log_mgf
    if logz > ctx.log_bound_res + 1e-9:
        raise AssertionError("residual estimator exceeded its per-draw bound")
    return math.exp(logz)


def sample_Zdom(problem, rng_stream) -> EstimatorSample:
    """One dominant-piece replication: force index I into the tail at b."""
    ctx = problem.context()
    gen = rng_stream.generator()
    i = int(gen.integers(ctx.n))
    xs = np.atleast_1d(problem.model.sample(gen, ctx.n))
    xs[i] = problem.model.sample_conditional_geq(ctx.b, gen)
    z = zdom_value(problem, xs)
    return EstimatorSample(z, {"dominant": z}, nu=ctx.n, nu_max=ctx.n)


def sample_Zres(problem, rng_stream) -> EstimatorSample:
    """One residual-piece replication from the truncated twisted law."""
    ctx = problem.context()
    gen = rng_stream.generator()
    xs = ctx.twisted.sample(gen, ctx.n)
    z = zres_value(problem, xs)
    return EstimatorSample(z, {"residual": z}, nu=ctx.n, nu_max=ctx.n)


def sample_composite(problem, rng_stream) -> EstimatorSample:
    """One replication of the composite estimator (paired pieces)."""
    zd = sample_Zdom(problem, rng_stream.child(0))
    zr = sample_Zres(problem, rng_stream.child(1))
    return EstimatorSample(
        zd.value + zr.value,
        {"dominant": zd.value, "residual": zr.value},
        nu=zd.nu + zr.nu,
        nu_max=problem.n,
    )


def estimate_large_deviation(problem, N, *, seed, threads=1):
    """Run N composite replications and return their streamed statistics."""
    if N < 2:
        raise ValueError("N must be at least 2 for a standard error")
    problem.context()  # build caches before any worker starts
    return run(lambda s: sample_composite(problem, s), N, seed=seed, threads=threads)

"""Estimate Pr{sup_n (S_n - n*mu) > b} with randomized geometric blocks.

The crossing time tau_b is localized to blocks (n_{k-1}, n_k] with
n_k = r^k; a block index K is drawn from a closed-form pmf built out of
integrated tails, and the block probability is estimated by three
independent sub-estimators that partition the block event on the stopped
path:

 * jump:      some increment i in (n_{k-1}, tau_b] reaches b + i*mu,
 * twisted:   every increment up to tau_b stays below b + n_{k-1}*mu,
 * uniform:   the remainder (an early large increment that is not a
              block-sized jump at its own index).

Each sub-estimator is exactly unbiased for its stopped event, so their sum
is unbiased for the block probability and Z_K / p_K for the full crossing
probability.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, RegimeError
from .harness import EstimatorSample, run
from .ld import RegimeWarning
from .models import g_beta_integrated

__all__ = [
    "BlockScheme",
    "CrossingProblem",
    "FiniteVariance",
    "StrongEfficiency",
    "SubStrong",
    "BlockPmf",
    "block_pmf",
    "sample_K",
    "q_k",
    "theta_k",
    "sample_Zk1",
    "sample_Zk2",
    "sample_Zk3",
    "sample_Z",
    "estimate_level_crossing",
    "zk1_value",
    "zk2_value",
    "zk3_value",
]

_WALK_CHUNK = 1 << 18
_TWIST_CHUNK = 1 << 13
_GRID_CACHE_MAX = 1 << 20


@dataclass(frozen=True)
class BlockScheme:
    """Geometric time partition n_0 = 0, n_k = r^k."""

    r: int = 2

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 2:
            raise ValueError("r must be an integer >= 2")

    def n(self, k: int) -> int:
        if k < 0:
            raise ValueError("block index must be nonnegative")
        return 0 if k == 0 else int(self.r) ** int(k)


@dataclass
class CrossingProblem:
    """Level-crossing target for a zero-mean walk with drift ``mu`` removed."""

    model: object
    mu: float
    b: float
    scheme: BlockScheme = field(default_factory=BlockScheme)
    _blocks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.b > 0.0 or not math.isfinite(self.b):
            raise ValueError("b must be positive and finite")

    def block(self, k: int):
        ctx = self._blocks.get(k)
        if ctx is None:
            ctx = _BlockCtx(self, k)
            self._blocks[k] = ctx
        return ctx


class _BlockCtx:
    """Per-block cache: q_k, twist parameters, twisted sampler, tail grid."""

    def __init__(self, problem, k):
        if k < 1:
            raise ValueError("block index must be at least 1")
        model, b, mu = problem.model, problem.b, problem.mu
        self.k = k
        self.n_lo = problem.scheme.n(k - 1)
        self.n_hi = problem.scheme.n(k)
        self.b = b
        self.mu = mu
        self.model = model
        self.u = b + self.n_lo * mu
        self.tail_geq_u = float(model.tail_geq(self.u))
        nfb = self.n_hi * float(model.tail(self.u))
        if nfb >= 1.0:
            raise RegimeError(
                f"n_k*tail(b + n_(k-1)*mu) = {nfb:.4g} >= 1 at block {k}: the "
                "block event is not rare enough for a positive twist")
        self.theta = -math.log(nfb) / self.u
        self.log_mgf = model.log_mgf_truncated(self.theta, self.u)
        self.twisted = model.make_twisted(self.u, self.theta)
        self._grid = None
        width = self.n_hi - self.n_lo
        if width <= _GRID_CACHE_MAX:
            self._grid = model.tail_geq_grid(b + (self.n_lo + 1) * mu, mu, width)
            self.q = math.fsum(self._grid)
        else:
            pos = self.n_lo
            parts = []
            while pos < self.n_hi:
                span = min(_WALK_CHUNK, self.n_hi - pos)
                parts.append(math.fsum(model.tail_geq_grid(b + (pos + 1) * mu, mu, span)))
                pos += span
            self.q = math.fsum(parts)

    def grid_chunk(self, i0, span):
        """Tail weights tail_geq(b + i*mu) for i = i0+1 .. i0+span."""
        if self._grid is not None:
            return self._grid[i0 - self.n_lo:i0 - self.n_lo + span]
        return self.model.tail_geq_grid(self.b + (i0 + 1) * self.mu, self.mu, span)

    def locate_jump_index(self, target):
        """First i in (n_lo, n_hi] whose cumulative tail weight covers target."""
        carry = 0.0
        i0 = self.n_lo
        while i0 < self.n_hi:
            span = min(_WALK_CHUNK, self.n_hi - i0)
            cs = carry + np.cumsum(self.grid_chunk(i0, span))
            pos = int(np.searchsorted(cs, target, side="left"))
            if pos < span:
                return i0 + pos + 1
            carry = float(cs[-1])
            i0 += span
        return self.n_hi


# -- block-index randomization ------------------------------------------

@dataclass(frozen=True)
class FiniteVariance:
    """Integrated-tail pmf; vanishing relative error for any alpha > 1."""


@dataclass(frozen=True)
class StrongEfficiency:
    """Thinned-tail pmf for infinite-variance increments with alpha > 1.5."""

    beta: float = None
    allow_boundary_alpha: bool = False


@dataclass(frozen=True)
class SubStrong:
    """Thinned-tail pmf for alpha in (1, 1.5]; bounded 1+gamma moments only."""

    beta: float = None
    gamma: float = None


class BlockPmf:
    """Closed-form randomization law over blocks, sampled by inversion.

    The cumulative C_k = 1 - T_I(b + n_k*mu)/T_I(b) telescopes exactly, with
    T_I the integrated tail (finite-variance regime) or the integrated
    thinned tail (infinite-variance regimes).
    """

    def __init__(self, problem, regime):
        self.problem = problem
        self.regime = regime
        alpha = problem.model.alpha
        if isinstance(regime, FiniteVariance):
            if not alpha > 2.0:
                warnings.warn(
                    f"tail index alpha={alpha} <= 2: the integrated-tail "
                    "randomization keeps vanishing relative error but its "
                    "expected termination work per replication is infinite",
                    RegimeWarning, stacklevel=3)
            self._tail_integral = problem.model.integrated_tail
            self.beta = None
            self.gamma = None
        elif isinstance(regime, StrongEfficiency):
            if not math.isfinite(alpha):
                raise ConfigurationError("thinned-tail pmf needs a regularly varying model")
            if alpha < 1.5:
                raise ConfigurationError(
                    f"alpha={alpha} < 1.5: impossibility result; no block "
                    "randomization can make both the estimator variance and "
                    "the expected termination work finite")
            if alpha == 1.5:
                if not regime.allow_boundary_alpha:
                    raise ConfigurationError(
                        "alpha = 1.5 is the boundary case; finiteness depends "
                        "on the slowly varying factor, so pass "
                        "allow_boundary_alpha=True to proceed deliberately")
                beta = regime.beta if regime.beta is not None else 2.25
                if not beta > 2.0:
                    raise ConfigurationError(f"beta={beta} must exceed 2")
                warnings.warn(
                    "alpha = 1.5: the thinned-tail pmf keeps expected work "
                    "finite, but variance finiteness depends on the slowly "
                    "varying tail factor", RegimeWarning, stacklevel=3)
            else:
                beta = regime.beta if regime.beta is not None else alpha + 0.5
                if not 2.0 < beta < 2.0 * alpha - 1.0:
                    raise ConfigurationError(
                        f"beta={beta} outside (2, 2*alpha-1) = (2, {2 * alpha - 1})")
            self.beta = float(beta)
            self.gamma = None
            self._tail_integral = lambda x: g_beta_integrated(problem.model, x, self.beta)
        elif isinstance(regime, SubStrong):
            if not math.isfinite(alpha):
                raise ConfigurationError("thinned-tail pmf needs a regularly varying model")
            if not 1.0 < alpha <= 1.5:
                raise ConfigurationError(
                    f"alpha={alpha} outside (1, 1.5]; use the strong-efficiency "
                    "regime above 1.5")
            gamma_hi = (alpha - 1.0) / (2.0 - alpha)
            gamma = regime.gamma if regime.gamma is not None else 0.5 * gamma_hi
            if not 0.0 < gamma < gamma_hi:
                raise ConfigurationError(
                    f"gamma={gamma} outside (0, (alpha-1)/(2-alpha)) = (0, {gamma_hi})")
            beta_hi = alpha + (alpha - 1.0) / gamma
            beta = regime.beta if regime.beta is not None else 0.5 * (2.0 + beta_hi)
            if not 2.0 < beta < beta_hi:
                raise ConfigurationError(
                    f"beta={beta} outside (2, alpha + (alpha-1)/gamma) = (2, {beta_hi})")
            self.beta = float(beta)
            self.gamma = float(gamma)
            self._tail_integral = lambda x: g_beta_integrated(problem.model, x, self.beta)
        else:
            raise ConfigurationError(f"unknown regime {regime!r}")
        self._denom = float(self._tail_integral(problem.b))
        if not self._denom > 0.0:
            raise ConfigurationError("integrated tail vanishes at level b")
        self._ratios = [1.0]  # ratios[k] = T_I(b + n_k*mu)/T_I(b)

    def _ratio(self, k: int) -> float:
        while len(self._ratios) <= k:
            j = len(self._ratios)
            x = self.problem.b + self.problem.scheme.n(j) * self.problem.mu
            self._ratios.append(float(self._tail_integral(x)) / self._denom)
        return self._ratios[k]

    def p(self, k: int) -> float:
        if k < 1:
            raise ValueError("block index must be at least 1")
        return self._ratio(k - 1) - self._ratio(k)

    def cumulative(self, k: int) -> float:
        return 1.0 - self._ratio(k)

    def sample_K(self, rng) -> int:
        u = rng.random()
        k = len(self._ratios) - 1
        while 1.0 - self._ratios[-1] < u and self._ratios[-1] > 0.0:
            k += 1
            self._ratio(k)
        cums = 1.0 - np.asarray(self._ratios)
        return max(1, int(np.searchsorted(cums, u, side="left")))


def block_pmf(problem, regime) -> BlockPmf:
    return BlockPmf(problem, regime)


def sample_K(pmf, rng_stream) -> int:
    return pmf.sample_K(rng_stream.generator())


def q_k(problem, k: int) -> float:
    """Sum of tail weights over the block, in compensated arithmetic."""
    return problem.block(k).q


def theta_k(problem, k: int) -> float:
    return problem.block(k).theta


# -- path machinery -------------------------------------------------------

def _path_stats(xs, b, mu, n_lo, u, start=0, s0=0.0, state=None):
    """Crossing and jump statistics of increments xs at indices start+1...

    Returns a dict with tau (first index with S_i - i*mu > b, or None),
    j_jump (first index i > n_lo with X_i >= b + i*mu), j_u (first index
    with X_i >= u), cnt_jump, cnt_u and the running sum, so callers can
    stream chunks through it.
    """
    st = state or {"tau": None, "j_jump": None, "j_u": None,
                   "cnt_jump": 0, "cnt_u": 0, "sum": s0}
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    if n == 0:
        return st
    cs = np.cumsum(xs) + st["sum"]
    idx0 = start + 1
    if st["tau"] is None:
        crossed = cs - mu * np.arange(idx0, idx0 + n) > b
        if crossed.any():
            st["tau"] = idx0 + int(np.argmax(crossed))
    lo_local = max(n_lo - start, 0)
    if lo_local < n:
        sub = xs[lo_local:]
        jumps = sub >= b + mu * np.arange(idx0 + lo_local, idx0 + n)
        cnt = int(np.count_nonzero(jumps))
        if cnt:
            st["cnt_jump"] += cnt
            if st["j_jump"] is None:
                st["j_jump"] = idx0 + lo_local + int(np.argmax(jumps))
    geq = xs >= u
    cnt = int(np.count_nonzero(geq))
    if cnt:
        st["cnt_u"] += cnt
        if st["j_u"] is None:
            st["j_u"] = idx0 + int(np.argmax(geq))
    st["sum"] = float(cs[-1])
    return st


def _walk_block(ctx, gen, forced_index=None, forced_value=None):
    state = None
    i0 = 0
    while i0 < ctx.n_hi:
        span = min(_WALK_CHUNK, ctx.n_hi - i0)
        xs = np.atleast_1d(ctx.model.sample(gen, span))
        if forced_index is not None and i0 < forced_index <= i0 + span:
            xs[forced_index - i0 - 1] = forced_value
        state = _path_stats(xs, ctx.b, ctx.mu, ctx.n_lo, ctx.u, start=i0, state=state)
        i0 += span
    return state


def _in_block(ctx, tau):
    return tau is not None and ctx.n_lo < tau <= ctx.n_hi


def zk1_value(problem, k, xs) -> float:
    """Jump sub-estimator value from a full block-horizon increment vector."""
    ctx = problem.block(k)
    st = _path_stats(np.asarray(xs, dtype=float), ctx.b, ctx.mu, ctx.n_lo, ctx.u)
    tau = st["tau"]
    hit = _in_block(ctx, tau) and st["j_jump"] is not None and st["j_jump"] <= tau
    if not hit:
        return 0.0
    if st["cnt_jump"] < 1:
        raise AssertionError("jump event held but no jump was counted")
    z = ctx.q / st["cnt_jump"]
    if z > ctx.q * (1.0 + 1e-12):
        raise AssertionError("jump estimator exceeded its q_k bound")
    return z


def zk2_value(problem, k, xs) -> float:
    """Twisted sub-estimator value from the stopped increment prefix."""
    ctx = problem.block(k)
    xs = np.asarray(xs, dtype=float)
    st = _path_stats(xs, ctx.b, ctx.mu, ctx.n_lo, ctx.u)
    tau = st["tau"]
    if not _in_block(ctx, tau) or tau != len(xs):
        return 0.0
    s_tau = st["sum"]
    if ctx.theta * (s_tau - ctx.b) < -1e-12:
        raise AssertionError("crossing sum fell below the level")
    return math.exp(-ctx.theta * s_tau + tau * ctx.log_mgf)


def zk3_value(problem, k, xs) -> float:
    """Remainder sub-estimator value from a full block-horizon vector."""
    ctx = problem.block(k)
    st = _path_stats(np.asarray(xs, dtype=float), ctx.b, ctx.mu, ctx.n_lo, ctx.u)
    tau = st["tau"]
    if not _in_block(ctx, tau):
        return 0.0
    no_jump = st["j_jump"] is None or st["j_jump"] > tau
    early_big = st["j_u"] is not None and st["j_u"] <= tau
    if not (no_jump and early_big):
        return 0.0
    if st["cnt_u"] < 1:
        raise AssertionError("remainder event held but no exceedance counted")
    bound = ctx.n_hi * ctx.tail_geq_u
    z = bound / st["cnt_u"]
    if z > bound * (1.0 + 1e-12):
        raise AssertionError("remainder estimator exceeded its n_k*tail bound")
    return z


def sample_Zk1(problem, k, rng_stream) -> EstimatorSample:
    """Block-jump replication: force index J ~ tail weights into the tail."""
    ctx = problem.block(k)
    gen = rng_stream.generator()
    target = gen.random() * ctx.q
    j = ctx.locate_jump_index(target)
    xj = ctx.model.sample_conditional_geq(ctx.b + j * ctx.mu, gen)
    st = _walk_block(ctx, gen, forced_index=j, forced_value=xj)
    tau = st["tau"]
    hit = _in_block(ctx, tau) and st["j_jump"] is not None and st["j_jump"] <= tau
    z = 0.0
    if hit:
        z = ctx.q / st["cnt_jump"]
        if z > ctx.q * (1.0 + 1e-12):
            raise AssertionError("jump estimator exceeded its q_k bound")
    return EstimatorSample(z, {"jump": z}, nu=ctx.n_hi, nu_max=ctx.n_hi)


def sample_Zk2(problem, k, rng_stream) -> EstimatorSample:
    """Twisted replication: draw truncated-twisted increments until crossing."""
    ctx = problem.block(k)
    gen = rng_stream.generator()
    s = 0.0
    i0 = 0
    tau = None
    s_tau = 0.0
    drawn = 0
    while i0 < ctx.n_hi:
        span = min(_TWIST_CHUNK, ctx.n_hi - i0)
        xs = ctx.twisted.sample(gen, span)
        drawn += span
        cs = np.cumsum(xs) + s
        crossed = cs - ctx.mu * np.arange(i0 + 1, i0 + span + 1) > ctx.b
        if crossed.any():
            hit = int(np.argmax(crossed))
            tau = i0 + hit + 1
            s_tau = float(cs[hit])
            break
        s = float(cs[-1])
        i0 += span
    z = 0.0
    if _in_block(ctx, tau):
        if ctx.theta * (s_tau - ctx.b) < -1e-12:
            raise AssertionError("crossing sum fell below the level")
        z = math.exp(-ctx.theta * s_tau + tau * ctx.log_mgf)
    return EstimatorSample(z, {"twisted": z}, nu=drawn, nu_max=min(drawn, ctx.n_hi))


def sample_Zk3(problem, k, rng_stream) -> EstimatorSample:
    """Remainder replication: uniform index forced above b + n_(k-1)*mu."""
    ctx = problem.block(k)
    gen = rng_stream.generator()
    j = 1 + int(gen.integers(ctx.n_hi))
    xj = ctx.model.sample_conditional_geq(ctx.u, gen)
    st = _walk_block(ctx, gen, forced_index=j, forced_value=xj)
    tau = st["tau"]
    z = 0.0
    if _in_block(ctx, tau):
        no_jump = st["j_jump"] is None or st["j_jump"] > tau
        early_big = st["j_u"] is not None and st["j_u"] <= tau
        if no_jump and early_big:
            bound = ctx.n_hi * ctx.tail_geq_u
            z = bound / st["cnt_u"]
            if z > bound * (1.0 + 1e-12):
                raise AssertionError("remainder estimator exceeded its n_k*tail bound")
    return EstimatorSample(z, {"uniform": z}, nu=ctx.n_hi, nu_max=ctx.n_hi)


def sample_Z(problem, pmf, rng_stream) -> EstimatorSample:
    """One full replication: draw K, then the three independent sub-draws."""
    k = pmf.sample_K(rng_stream.child(0).generator())
    z1 = sample_Zk1(problem, k, rng_stream.child(1))
    z2 = sample_Zk2(problem, k, rng_stream.child(2))
    z3 = sample_Zk3(problem, k, rng_stream.child(3))
    pk = pmf.p(k)
    value = (z1.value + z2.value + z3.value) / pk
    n_hi = problem.scheme.n(k)
    nu_max = max(z1.nu_max, z2.nu_max, z3.nu_max)
    if nu_max > n_hi:
        raise AssertionError("work counter exceeded the block horizon")
    return EstimatorSample(
        value,
        {"jump": z1.value / pk, "twisted": z2.value / pk, "uniform": z3.value / pk},
        nu=z1.nu + z2.nu + z3.nu,
        nu_max=nu_max,
    )


def estimate_level_crossing(problem, regime, N, *, seed, threads=1):
    """Run N randomized-block replications and stream their statistics."""
    if N < 2:
        raise ValueError("N must be at least 2 for a standard error")
    pmf = regime if isinstance(regime, BlockPmf) else BlockPmf(problem, regime)
    return run(lambda s: sample_Z(problem, pmf, s), N, seed=seed, threads=threads)

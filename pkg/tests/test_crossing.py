"""Crossing estimator: blocks, pmf regimes, exact unbiasedness, bounds."""

import itertools
import math
import warnings

import numpy as np
import pytest

from heavytail.crossing import (BlockPmf, BlockScheme, CrossingProblem,
                                FiniteVariance, StrongEfficiency, SubStrong,
                                block_pmf, estimate_level_crossing, q_k,
                                sample_K, sample_Z, sample_Zk1, sample_Zk2,
                                sample_Zk3, theta_k, zk1_value, zk2_value,
                                zk3_value)
from heavytail.errors import ConfigurationError
from heavytail.harness import RngStream
from heavytail.ld import RegimeWarning
from heavytail.models import (DiscreteToy, ParetoShifted, PurePareto,
                              QueueIncrement)
from heavytail.oracle import enumerate_block, naive_mc_block

TOY4 = DiscreteToy([-1.0, 2.0, 2.7, 9.0], [0.65, 0.2, 0.1, 0.05])


def toy_problem(b=2.5, mu=0.5, r=2):
    return CrossingProblem(TOY4, mu, b, BlockScheme(r))


# -- scheme and q_k ----------------------------------------------------------

def test_block_scheme():
    s = BlockScheme(2)
    assert [s.n(k) for k in range(5)] == [0, 2, 4, 8, 16]
    assert all(s.n(k) == 2 * s.n(k - 1) for k in range(2, 12))
    with pytest.raises(ValueError):
        BlockScheme(1)


def test_qk_two_term_sum():
    m = ParetoShifted(2.5, centered=False)
    prob = CrossingProblem(m, 2.0 / 3.0, 100.0, BlockScheme(2))
    expected = m.tail(100 + 2.0 / 3.0) + m.tail(100 + 4.0 / 3.0)
    assert q_k(prob, 1) == pytest.approx(expected, rel=1e-15)


def test_qk_integral_sandwich():
    from heavytail._integrate import integrate

    m = QueueIncrement(2.5, 0.5)
    prob = CrossingProblem(m, m.drift, 50.0, BlockScheme(2))
    for k in (2, 3, 4):
        lo_i, hi_i = prob.scheme.n(k - 1), prob.scheme.n(k)
        val = q_k(prob, k)
        upper = integrate(lambda t: float(m.tail(50.0 + t * m.drift)), lo_i, hi_i)
        lower = integrate(lambda t: float(m.tail(50.0 + t * m.drift)), lo_i + 1, hi_i + 1)
        assert lower <= val <= upper


def test_qk_extended_precision_agreement():
    import mpmath

    m = ParetoShifted(2.5, centered=False)
    prob = CrossingProblem(m, 2.0 / 3.0, 100.0, BlockScheme(2))
    with mpmath.workdps(40):
        ref = mpmath.mpf(0)
        for i in (1, 2):
            ref += (1 + mpmath.mpf(100) + i * mpmath.mpf(2) / 3) ** mpmath.mpf("-2.5")
        assert abs(q_k(prob, 1) / float(ref) - 1.0) <= 1e-14


# -- pmf regimes -------------------------------------------------------------

def test_pmf_telescoping_all_regimes():
    cases = [
        (CrossingProblem(QueueIncrement(2.5, 0.5), 2.0 / 3.0, 100.0), FiniteVariance()),
        (CrossingProblem(PurePareto(1.75), 1.0, 100.0), StrongEfficiency(beta=2.25)),
        (CrossingProblem(PurePareto(1.25), 1.0, 50.0), SubStrong()),
    ]
    for prob, regime in cases:
        pmf = block_pmf(prob, regime)
        s = math.fsum(pmf.p(k) for k in range(1, 31))
        assert s + (1.0 - pmf.cumulative(30)) == pytest.approx(1.0, abs=1e-12)
        assert all(pmf.p(k) > 0 for k in range(1, 31))


def test_pmf_p1_closed_form():
    m = ParetoShifted(2.5, centered=False)
    prob = CrossingProblem(m, 2.0 / 3.0, 100.0, BlockScheme(2))
    pmf = block_pmf(prob, FiniteVariance())
    expected = 1.0 - (101.0 / (101.0 + 4.0 / 3.0)) ** 1.5
    assert pmf.p(1) == pytest.approx(expected, rel=1e-12)
    assert pmf.p(1) == pytest.approx(0.0195, rel=2e-2)


def test_sample_K_frequencies():
    m = QueueIncrement(2.5, 0.5)
    prob = CrossingProblem(m, m.drift, 100.0, BlockScheme(2))
    pmf = block_pmf(prob, FiniteVariance())
    gen = RngStream(8).generator()
    n = 10 ** 6
    ks = np.array([pmf.sample_K(gen) for _ in range(n)])
    for k in range(1, 11):
        p = pmf.p(k)
        freq = np.mean(ks == k)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(freq - p) <= 4 * sigma


def test_strong_efficiency_guards():
    prob = CrossingProblem(PurePareto(1.4), 1.0, 50.0)
    with pytest.raises(ConfigurationError, match="[Ii]mpossib"):
        block_pmf(prob, StrongEfficiency(beta=2.1))
    prob15 = CrossingProblem(PurePareto(1.5), 1.0, 50.0)
    with pytest.raises(ConfigurationError, match="boundary"):
        block_pmf(prob15, StrongEfficiency(beta=2.1))
    # explicit override makes the boundary case constructible (with a warning)
    with pytest.warns(RegimeWarning):
        pmf = block_pmf(prob15, StrongEfficiency(beta=2.1, allow_boundary_alpha=True))
    assert pmf.p(1) > 0
    with pytest.raises(ConfigurationError):
        block_pmf(CrossingProblem(PurePareto(1.75), 1.0, 50.0),
                  StrongEfficiency(beta=2.6))  # beta outside (2, 2*alpha-1)


def test_finite_variance_warns_on_infinite_work():
    prob = CrossingProblem(PurePareto(1.75), 1.0, 50.0)
    with pytest.warns(RegimeWarning, match="infinite"):
        block_pmf(prob, FiniteVariance())


def test_sub_strong_guards_and_defaults():
    prob = CrossingProblem(PurePareto(1.25), 1.0, 50.0)
    pmf = block_pmf(prob, SubStrong())
    gamma_hi = (1.25 - 1.0) / (2.0 - 1.25)
    assert 0.0 < pmf.gamma < gamma_hi
    assert 2.0 < pmf.beta < 1.25 + (1.25 - 1.0) / pmf.gamma
    with pytest.raises(ConfigurationError):
        block_pmf(prob, SubStrong(gamma=gamma_hi))
    with pytest.raises(ConfigurationError):
        block_pmf(prob, SubStrong(beta=10.0))
    with pytest.raises(ConfigurationError):
        block_pmf(CrossingProblem(PurePareto(1.75), 1.0, 50.0), SubStrong())


def test_theta_k_identity_and_guard():
    prob = toy_problem()
    # theta_k = -log(n_k tail(u)) / u with u = b + n_(k-1) mu
    t1 = theta_k(prob, 1)
    assert t1 == pytest.approx(-math.log(2 * 0.15) / 2.5, rel=1e-12)
    from heavytail.errors import RegimeError
    toy = DiscreteToy([-1.0, 2.0], [0.5, 0.5])
    with pytest.raises(RegimeError):
        CrossingProblem(toy, 0.5, 1.5, BlockScheme(4)).block(1)


# -- exact unbiasedness of the three sub-estimators --------------------------

def enum_zk1_expectation(prob, k):
    ctx = prob.block(k)
    toy = prob.model
    pts, probs = toy.points, toy.probs
    total = 0.0
    for j in range(ctx.n_lo + 1, ctx.n_hi + 1):
        thr = prob.b + j * prob.mu
        w_j = float(toy.tail_geq(thr)) / ctx.q
        for combo in itertools.product(range(len(pts)), repeat=ctx.n_hi):
            xj = pts[combo[j - 1]]
            if xj < thr:
                continue
            w = w_j
            for pos, idx in enumerate(combo):
                w *= probs[idx] / float(toy.tail_geq(thr)) if pos == j - 1 else probs[idx]
            total += w * zk1_value(prob, k, pts[list(combo)])
    return total


def enum_zk2_expectation(prob, k):
    ctx = prob.block(k)
    toy = prob.model
    tw = toy.make_twisted(ctx.u, ctx.theta)
    mask = toy.points < ctx.u
    pts = toy.points[mask]
    wts = np.exp(np.log(toy.probs[mask]) + ctx.theta * pts - ctx.log_mgf)

    total = 0.0

    def extend(path, weight, s):
        nonlocal total
        i = len(path)
        if i > 0 and s - i * prob.mu > prob.b:  # stopped by crossing
            total += weight * zk2_value(prob, k, np.array(path))
            return
        if i == ctx.n_hi:  # stopped by the horizon without crossing
            return
        for x, w in zip(pts, wts):
            extend(path + [x], weight * w, s + x)

    extend([], 1.0, 0.0)
    return total


def enum_zk3_expectation(prob, k):
    ctx = prob.block(k)
    toy = prob.model
    pts, probs = toy.points, toy.probs
    tail_u = float(toy.tail_geq(ctx.u))
    total = 0.0
    for j in range(1, ctx.n_hi + 1):
        for combo in itertools.product(range(len(pts)), repeat=ctx.n_hi):
            xj = pts[combo[j - 1]]
            if xj < ctx.u:
                continue
            w = 1.0 / ctx.n_hi
            for pos, idx in enumerate(combo):
                w *= probs[idx] / tail_u if pos == j - 1 else probs[idx]
            total += w * zk3_value(prob, k, pts[list(combo)])
    return total


@pytest.mark.parametrize("k", [1, 2])
def test_exact_unbiasedness_of_block_split(k):
    prob = toy_problem()
    truth = enumerate_block(TOY4, k, prob.b, prob.mu, prob.scheme.r)
    e1 = enum_zk1_expectation(prob, k)
    e2 = enum_zk2_expectation(prob, k)
    e3 = enum_zk3_expectation(prob, k)
    assert e1 == pytest.approx(float(truth.jump), abs=1e-12)
    assert e2 == pytest.approx(float(truth.truncated), abs=1e-10)
    assert e3 == pytest.approx(float(truth.other), abs=1e-12)
    assert e1 + e2 + e3 == pytest.approx(float(truth.block), abs=1e-10)
    # the stopped events partition the block event exactly
    assert float(truth.jump + truth.truncated + truth.other) == \
        pytest.approx(float(truth.block), abs=0.0)


def test_total_estimator_unbiased_over_first_blocks():
    # sum of enumerated block means over k <= 3 equals Pr{tau <= n_3} exactly
    prob = toy_problem()
    total = 0.0
    mass = 0.0
    for k in (1, 2, 3):
        total += (enum_zk1_expectation(prob, k) + enum_zk2_expectation(prob, k)
                  + enum_zk3_expectation(prob, k))
        mass += float(enumerate_block(TOY4, k, prob.b, prob.mu, 2).block)
    assert total == pytest.approx(mass, abs=1e-10)


# -- sampled paths respect the per-draw bounds --------------------------------

def test_sampling_bounds_and_work():
    prob = CrossingProblem(QueueIncrement(2.5, 0.5), 2.0 / 3.0, 30.0, BlockScheme(2))
    pmf = block_pmf(prob, FiniteVariance())
    root = RngStream(77)
    for rep in range(400):
        s = sample_Z(prob, pmf, root.child(rep))
        assert s.nu_max <= prob.scheme.n(64)  # trivially bounded
        k = None
        # recover K from the work bound: nu_max <= n_K by construction
        assert s.value >= 0.0
    for rep in range(300):
        for k in (1, 2, 3):
            ctx = prob.block(k)
            z1 = sample_Zk1(prob, k, root.child(1, rep, k))
            z3 = sample_Zk3(prob, k, root.child(3, rep, k))
            assert z1.value <= ctx.q * (1 + 1e-12)
            assert z1.nu_max == ctx.n_hi
            assert z3.value <= ctx.n_hi * ctx.tail_geq_u * (1 + 1e-12)
            z2 = sample_Zk2(prob, k, root.child(2, rep, k))
            assert z2.nu_max <= ctx.n_hi


def test_block_estimates_match_naive_mc():
    prob = CrossingProblem(QueueIncrement(2.5, 0.5), 2.0 / 3.0, 5.0, BlockScheme(2))
    root = RngStream(123)
    gen = RngStream(321).generator()
    for k in (1, 2):
        n = 20000
        vals = np.empty(n)
        for rep in range(n):
            vals[rep] = (sample_Zk1(prob, k, root.child(rep, k, 1)).value
                         + sample_Zk2(prob, k, root.child(rep, k, 2)).value
                         + sample_Zk3(prob, k, root.child(rep, k, 3)).value)
        naive = naive_mc_block(QueueIncrement(2.5, 0.5), k, 5.0, 2.0 / 3.0, 2,
                               10 ** 6, gen)
        se = math.sqrt(vals.var() / n + naive.std_error ** 2)
        assert abs(vals.mean() - naive.mean) <= 4 * se


def test_estimate_level_crossing_smoke():
    prob = CrossingProblem(QueueIncrement(2.5, 0.5), 2.0 / 3.0, 20.0, BlockScheme(2))
    stats = estimate_level_crossing(prob, FiniteVariance(), 2000, seed=5)
    base = prob.model.integrated_tail(20.0) / prob.mu
    assert 0.3 * base < stats.mean < 3.0 * base
    assert stats.mean_peak_index > 0
    assert stats.max_work >= stats.mean_work

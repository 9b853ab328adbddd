"""Enumeration and naive-MC oracles (the ground-truth side of the tests)."""

import math
from fractions import Fraction

import numpy as np
import pytest

from heavytail.harness import RngStream
from heavytail.models import DiscreteToy, QueueIncrement
from heavytail.oracle import (asymptotic_baselines, enumerate_block,
                              enumerate_ld, naive_mc_block)

TOY = DiscreteToy([-1.0, 9.0], [0.9, 0.1])
TOY4 = DiscreteToy([-1.0, 2.0, 2.7, 9.0], [0.65, 0.2, 0.1, 0.05])


def test_enumerate_ld_hand_value():
    res = enumerate_ld(TOY, 2, 7.0)
    # one 9 and one -1 (sum 8) both orders, or two 9s
    assert res.total == Fraction(19, 100)
    assert res.dominant == Fraction(19, 100)
    assert res.residual == 0
    assert res.outcome_count == 4


def test_enumerate_ld_boundaries():
    assert enumerate_ld(TOY, 2, 18.5).total == 0
    assert enumerate_ld(TOY, 2, -2.5).total == 1


def test_enumerate_ld_split_is_partition():
    for b in (3.0, 7.5, 16.0):
        res = enumerate_ld(TOY4, 4, b)
        assert res.dominant + res.residual == res.total


def test_enumeration_permutation_invariant():
    shuffled = DiscreteToy([9.0, 2.7, -1.0, 2.0], [0.05, 0.1, 0.65, 0.2])
    a = enumerate_ld(TOY4, 3, 4.0)
    b = enumerate_ld(shuffled, 3, 4.0)
    assert a.total == b.total and a.dominant == b.dominant


def test_enumerate_block_partition():
    for k in (1, 2):
        res = enumerate_block(TOY4, k, 2.5, 0.5, 2)
        assert res.jump + res.truncated + res.other == res.block
        assert res.block > 0


def test_enumerate_block_impossible_crossing():
    # two steps of at most 9 each cannot pass b = 30
    res = enumerate_block(TOY, 1, 30.0, 0.5, 2)
    assert res.block == 0


def test_enumerate_block_hand_combinatorics():
    # n_1 = 2, b = 5, mu = 0.5: crossing needs the single large atom.
    # tau=1: X1 = 9 (9 - 0.5 > 5).  tau=2: X1 = -1 then X2 = 9 (8 - 1 > 5);
    # X1 = 9 already crossed, so only (-1, 9) has tau = 2.
    res = enumerate_block(TOY, 1, 5.0, 0.5, 2)
    expected = Fraction(1, 10) + Fraction(9, 10) * Fraction(1, 10)
    assert res.block == expected
    assert res.jump == expected  # the 9 is always a block-sized jump here


def test_naive_mc_matches_enumeration():
    truth = float(enumerate_block(TOY4, 2, 2.5, 0.5, 2).block)
    stats = naive_mc_block(TOY4, 2, 2.5, 0.5, 2, 200000,
                           RngStream(5).generator())
    se = max(stats.std_error, 1e-12)
    assert abs(stats.mean - truth) <= 4 * se


def test_naive_mc_zero_probability_block():
    stats = naive_mc_block(TOY, 1, 30.0, 0.5, 2, 5000, RngStream(5).generator())
    assert stats.mean == 0.0 and stats.std_error == 0.0


def test_naive_mc_reproducible():
    a = naive_mc_block(TOY4, 1, 2.5, 0.5, 2, 20000, RngStream(9).generator())
    b = naive_mc_block(TOY4, 1, 2.5, 0.5, 2, 20000, RngStream(9).generator())
    assert a.mean == b.mean and a.variance == b.variance


def test_naive_mc_sub_events_sum_to_block():
    args = (TOY4, 2, 2.5, 0.5, 2, 50000)
    parts = [naive_mc_block(*args, RngStream(31).generator(), event=e).mean
             for e in ("jump", "truncated", "other")]
    block = naive_mc_block(*args, RngStream(31).generator()).mean
    assert math.fsum(parts) == pytest.approx(block, abs=1e-12)


def test_asymptotic_baselines():
    from heavytail.crossing import BlockScheme, CrossingProblem
    from heavytail.ld import LdProblem
    from heavytail.models import ProductLambdaLaplace

    queue = QueueIncrement(2.5, 0.5)
    prob = CrossingProblem(queue, queue.drift, 1000.0, BlockScheme(2))
    base = asymptotic_baselines(prob)["integrated_tail"]
    assert base == pytest.approx(1001.0 ** -1.5, rel=0.02)

    ld = LdProblem(ProductLambdaLaplace(4.0), 100, 100.0)
    base = asymptotic_baselines(ld)["single_jump"]
    assert 0.4e-5 < base < 2.21e-5  # same order as the true 2.21e-5

    ld0 = LdProblem(ProductLambdaLaplace(4.0), 1, 100.0)
    ld0.n = 0  # degenerate guard
    assert asymptotic_baselines(ld0)["single_jump"] == 0.0

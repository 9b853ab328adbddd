"""Replication engine: streams, moments, merging, determinism, failures."""

import math

import numpy as np
import pytest

from heavytail.errors import PartialResultsError
from heavytail.harness import (EstimatorSample, RngStream, required_samples,
                               run)


def normal_sampler(stream):
    v = float(stream.generator().normal())
    return EstimatorSample(v, {"v": v}, nu=3, nu_max=2)


# -- required_samples ---------------------------------------------------------

def test_required_samples_formula():
    assert required_samples(1.0, 0.1, 0.05) == 2000
    assert required_samples(1.97, 0.05, 0.05) == 31048
    assert required_samples(0.0, 0.1, 0.05) == 1


def test_required_samples_validation():
    with pytest.raises(ValueError):
        required_samples(1.0, 0.0, 0.05)
    with pytest.raises(ValueError):
        required_samples(1.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        required_samples(-1.0, 0.1, 0.1)


# -- streams -------------------------------------------------------------------

def test_stream_reproducible_and_split():
    a = RngStream(42).child(7).generator().random(5)
    b = RngStream(42).child(7).generator().random(5)
    assert np.array_equal(a, b)
    c = RngStream(42).child(8).generator().random(5)
    d = RngStream(43).child(7).generator().random(5)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    # path depth matters: (7,) and (7, 0) are distinct streams
    e = RngStream(42).child(7, 0).generator().random(5)
    assert not np.array_equal(a, e)


# -- run and merge --------------------------------------------------------------

def test_thread_count_does_not_change_results():
    s1 = run(normal_sampler, 4321, seed=99, threads=1)
    s8 = run(normal_sampler, 4321, seed=99, threads=8)
    assert s1.mean == s8.mean
    assert s1.variance == s8.variance
    assert s1.mean_work == s8.mean_work == 3.0
    assert s1.max_work == 3 and s1.mean_peak_index == 2.0


def test_merge_equals_single_pass():
    a = run(normal_sampler, 1500, seed=5)
    # disjoint replication indices for the second half
    def shifted(stream):
        return normal_sampler(RngStream(5).child(1500 + stream.path[0]))

    b = run(shifted, 700, seed=5)

    def full(stream):
        return normal_sampler(RngStream(5).child(stream.path[0]))

    whole = run(full, 2200, seed=5)
    merged = a.merge(b)
    assert merged.n_reps == whole.n_reps
    assert merged.mean == pytest.approx(whole.mean, rel=1e-10)
    assert merged.variance == pytest.approx(whole.variance, rel=1e-10)


def test_variance_accumulator_stability():
    def const(stream):
        return EstimatorSample(math.pi, {"v": math.pi}, nu=1, nu_max=1)

    stats = run(const, 10 ** 6, seed=0)
    assert stats.variance <= 1e-20
    assert stats.cv == 0.0


def test_partial_results_on_failure():
    def flaky(stream):
        if stream.path[0] == 1500:
            raise RuntimeError("boom")
        return normal_sampler(stream)

    with pytest.raises(PartialResultsError) as exc_info:
        run(flaky, 5000, seed=3)
    err = exc_info.value
    assert err.completed == 1024  # one full chunk before the failing one
    assert err.stats.n_reps == 1024
    assert math.isfinite(err.stats.mean)


def test_estimator_sample_validation():
    with pytest.raises(ValueError):
        EstimatorSample(1.0, {"a": 0.4}, nu=1, nu_max=1)
    with pytest.raises(ValueError):
        EstimatorSample(1.0, {"a": 1.0}, nu=-1, nu_max=0)
    s = EstimatorSample(1.0, {"a": 0.6, "b": 0.4}, nu=2, nu_max=2)
    assert s.value == 1.0


def test_run_stats_cv_definitions():
    def zero(stream):
        return EstimatorSample(0.0, {"v": 0.0}, nu=1, nu_max=1)

    stats = run(zero, 50, seed=1)
    assert stats.mean == 0.0 and stats.cv == 0.0 and stats.std_error == 0.0

"""Replication engine: splittable RNG streams, streaming moments, execution.

Replications are keyed by (seed, replication index, sub-estimator label), so
results are a pure function of the experiment seed and do not depend on the
thread count.  Chunk boundaries are fixed constants for the same reason:
accumulators merge in chunk order no matter which worker ran them.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import PartialResultsError

__all__ = ["RngStream", "EstimatorSample", "RunStats", "required_samples", "run"]

_CHUNK_REPS = 1024


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream keyed by a root seed plus a path of indices."""

    seed: int
    path: tuple = ()

    def child(self, *indices) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        # the path length disambiguates (7,) from (7, 0): SeedSequence pools
        # are insensitive to trailing zero entropy words
        ss = np.random.SeedSequence((int(self.seed), len(self.path)) + self.path)
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class EstimatorSample:
    """One replication: its value, labeled components, and work counters.

    ``nu`` counts increments generated; ``nu_max`` is the largest increment
    index touched (the per-replication termination-work measure).
    """

    value: float
    components: dict = field(default_factory=dict)
    nu: int = 0
    nu_max: int = 0

    def __post_init__(self):
        if self.nu < 0 or self.nu_max < 0:
            raise ValueError("work counters must be nonnegative")
        if self.components:
            total = math.fsum(self.components.values())
            if abs(total - self.value) > 1e-9 * max(1.0, abs(self.value)):
                raise ValueError(
                    f"components sum to {total!r} but value is {self.value!r}")


@dataclass(frozen=True)
class RunStats:
    """Streamed summary of N replications."""

    n_reps: int
    mean: float
    variance: float
    std_error: float
    cv: float
    mean_work: float
    max_work: int
    seed: int
    mean_peak_index: float = 0.0

    def merge(self, other: "RunStats") -> "RunStats":
        a = _Accumulator.from_stats(self)
        b = _Accumulator.from_stats(other)
        a.merge(b)
        return a.stats(self.seed)


class _Accumulator:
    """Welford moments plus work counters, exactly mergeable."""

    __slots__ = ("n", "mean", "m2", "work_sum", "work_max", "peak_sum")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.work_sum = 0.0
        self.work_max = 0
        self.peak_sum = 0.0

    def add(self, value, nu=0, nu_max=0):
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        self.work_sum += nu
        self.work_max = max(self.work_max, int(nu))
        self.peak_sum += nu_max

    def merge(self, other):
        if other.n == 0:
            return
        if self.n == 0:
            for name in self.__slots__:
                setattr(self, name, getattr(other, name))
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n
        self.work_sum += other.work_sum
        self.work_max = max(self.work_max, other.work_max)
        self.peak_sum += other.peak_sum

    @classmethod
    def from_stats(cls, stats):
        acc = cls()
        acc.n = stats.n_reps
        acc.mean = stats.mean
        acc.m2 = stats.variance * max(stats.n_reps - 1, 0)
        acc.work_sum = stats.mean_work * stats.n_reps
        acc.work_max = stats.max_work
        acc.peak_sum = stats.mean_peak_index * stats.n_reps
        return acc

    def stats(self, seed) -> RunStats:
        n = self.n
        variance = self.m2 / (n - 1) if n > 1 else 0.0
        variance = max(variance, 0.0)
        std_error = math.sqrt(variance / n) if n else math.inf
        if variance == 0.0:
            cv = 0.0
        elif self.mean > 0.0:
            cv = math.sqrt(variance) / self.mean
        else:
            cv = math.inf
        return RunStats(
            n_reps=n,
            mean=self.mean,
            variance=variance,
            std_error=std_error,
            cv=cv,
            mean_work=self.work_sum / n if n else 0.0,
            max_work=self.work_max,
            seed=seed,
            mean_peak_index=self.peak_sum / n if n else 0.0,
        )


def required_samples(cv, epsilon, delta):
    """Replications needed for relative error ``epsilon`` at confidence 1-delta."""
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if cv < 0.0:
        raise ValueError("cv must be nonnegative")
    return max(1, math.ceil(cv * cv / (delta * epsilon * epsilon)))


def run(sample_fn, N, *, seed, threads=1) -> RunStats:
    """Aggregate N independent replications of ``sample_fn``.

    ``sample_fn`` maps an RngStream (already specialized to the replication)
    to an EstimatorSample.  A failing replication aborts the run and raises
    PartialResultsError carrying statistics over the completed chunks.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    root = RngStream(int(seed))

    def run_chunk(lo, hi):
        acc = _Accumulator()
        for rep in range(lo, hi):
            s = sample_fn(root.child(rep))
            acc.add(s.value, s.nu, s.nu_max)
        return acc

    bounds = [(lo, min(lo + _CHUNK_REPS, N)) for lo in range(0, N, _CHUNK_REPS)]
    total = _Accumulator()
    if threads <= 1:
        completed = []
        try:
            for lo, hi in bounds:
                completed.append(run_chunk(lo, hi))
        except Exception as exc:
            for acc in completed:
                total.merge(acc)
            raise PartialResultsError(
                f"replication failed after {total.n} completed: {exc}",
                completed=total.n, stats=total.stats(seed)) from exc
        for acc in completed:
            total.merge(acc)
        return total.stats(seed)

    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        futures = [pool.submit(run_chunk, lo, hi) for lo, hi in bounds]
        failure = None
        accs = []
        for fut in futures:
            try:
                accs.append(fut.result())
            except Exception as exc:  # keep earlier chunks for the report
                failure = exc
                break
        if failure is not None:
            for acc in accs:
                total.merge(acc)
            raise PartialResultsError(
                f"replication failed after {total.n} completed: {failure}",
                completed=total.n, stats=total.stats(seed)) from failure
    for acc in accs:
        total.merge(acc)
    return total.stats(seed)

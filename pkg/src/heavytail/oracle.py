"""Independent ground truth for tests: enumeration, naive MC, baselines.

Nothing here imports the estimator modules; the event definitions are
restated from scratch so agreement with the estimators is a real check.
Enumeration uses exact rational arithmetic whenever the toy probabilities
convert exactly to fractions.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .harness import _Accumulator, RunStats

__all__ = [
    "EnumerationResult",
    "LdEnumeration",
    "BlockEnumeration",
    "enumerate_ld",
    "enumerate_block",
    "naive_mc_block",
    "asymptotic_baselines",
]

_MAX_OUTCOMES = 10 ** 7


@dataclass(frozen=True)
class EnumerationResult:
    probability: object  # Fraction or float
    outcome_count: int


@dataclass(frozen=True)
class LdEnumeration:
    total: object     # Pr{S_n > b}
    dominant: object  # Pr{S_n > b, max X_i >= b}
    residual: object  # Pr{S_n > b, max X_i < b}
    outcome_count: int


@dataclass(frozen=True)
class BlockEnumeration:
    block: object      # Pr{n_(k-1) < tau_b <= n_k}
    jump: object       # ... and some i in (n_(k-1), tau] has X_i >= b + i*mu
    truncated: object  # ... and max_{i <= tau} X_i < b + n_(k-1)*mu
    other: object      # remainder of the block event
    outcome_count: int


def _exact_probs(probs):
    """Fractions for the atom probabilities, or None if not representable."""
    out = []
    for p in probs:
        f = Fraction(p).limit_denominator(10 ** 9)
        if abs(float(f) - p) > 1e-15:
            return None
        out.append(f)
    return out


def enumerate_ld(toy, n, b) -> LdEnumeration:
    """Exact Pr{S_n > b} and its dominant/residual split by full enumeration."""
    pts = list(map(float, toy.points))
    count = len(pts) ** n
    if count > _MAX_OUTCOMES:
        raise ValueError(f"{count} outcomes exceed the enumeration budget")
    fr = _exact_probs(toy.probs)
    probs = fr if fr is not None else list(map(float, toy.probs))
    zero = Fraction(0) if fr is not None else 0.0
    total = dominant = residual = zero
    for combo in itertools.product(range(len(pts)), repeat=n):
        s = math.fsum(pts[i] for i in combo)
        if not s > b:
            continue
        p = math.prod(probs[i] for i in combo)
        total += p
        if max(pts[i] for i in combo) >= b:
            dominant += p
        else:
            residual += p
    return LdEnumeration(total, dominant, residual, count)


def _block_events(path, b, mu, n_lo):
    """tau and the three stopped sub-events for one increment path."""
    s = 0.0
    tau = None
    for i, x in enumerate(path, start=1):
        s += x
        if s - i * mu > b:
            tau = i
            break
    if tau is None:
        return None, False, False, False
    jump = any(path[i - 1] >= b + i * mu for i in range(n_lo + 1, tau + 1))
    truncated = max(path[:tau]) < b + n_lo * mu
    other = not jump and not truncated
    return tau, jump, truncated, other


def enumerate_block(toy, k, b, mu, r) -> BlockEnumeration:
    """Exact block-crossing probability and its stopped three-way split."""
    n_lo = 0 if k == 1 else r ** (k - 1)
    n_hi = r ** k
    pts = list(map(float, toy.points))
    count = len(pts) ** n_hi
    if count > _MAX_OUTCOMES:
        raise ValueError(f"{count} outcomes exceed the enumeration budget")
    fr = _exact_probs(toy.probs)
    probs = fr if fr is not None else list(map(float, toy.probs))
    zero = Fraction(0) if fr is not None else 0.0
    block = jump = truncated = other = zero
    for combo in itertools.product(range(len(pts)), repeat=n_hi):
        path = [pts[i] for i in combo]
        tau, is_jump, is_trunc, is_other = _block_events(path, b, mu, n_lo)
        if tau is None or not n_lo < tau <= n_hi:
            continue
        p = math.prod(probs[i] for i in combo)
        block += p
        if is_jump:
            jump += p
        elif is_trunc:
            truncated += p
        elif is_other:
            other += p
    return BlockEnumeration(block, jump, truncated, other, count)


def naive_mc_block(model, k, b, mu, r, paths, rng, event="block") -> RunStats:
    """Naive finite-horizon Monte Carlo of a block event probability.

    ``event`` selects the block event itself or one of its stopped
    sub-events ("jump", "truncated", "other").
    """
    n_lo = 0 if k == 1 else r ** (k - 1)
    n_hi = r ** k
    if paths * n_hi > 5 * 10 ** 9:
        raise ValueError("path budget exceeded")
    acc = _Accumulator()
    batch = max(1, min(paths, max(1, (1 << 22) // n_hi)))
    seed = int(rng.integers(2 ** 63)) if hasattr(rng, "integers") else 0
    done = 0
    while done < paths:
        m = min(batch, paths - done)
        xs = np.atleast_2d(model.sample(rng, (m, n_hi)))
        cs = np.cumsum(xs, axis=1)
        drift = mu * np.arange(1, n_hi + 1)
        crossed = cs - drift[None, :] > b
        any_cross = crossed.any(axis=1)
        tau = np.where(any_cross, np.argmax(crossed, axis=1) + 1, 0)
        in_block = any_cross & (tau > n_lo) & (tau <= n_hi)
        if event == "block":
            hits = in_block
        else:
            hits = np.zeros(m, dtype=bool)
            rows = np.nonzero(in_block)[0]
            for row in rows:
                t = int(tau[row])
                path = xs[row]
                has_jump = bool(np.any(
                    path[n_lo:t] >= b + mu * np.arange(n_lo + 1, t + 1)))
                is_trunc = bool(np.max(path[:t]) < b + n_lo * mu)
                if event == "jump":
                    hits[row] = has_jump
                elif event == "truncated":
                    hits[row] = is_trunc
                elif event == "other":
                    hits[row] = not has_jump and not is_trunc
                else:
                    raise ValueError(f"unknown event {event!r}")
        for v in hits:
            acc.add(float(v), nu=n_hi, nu_max=n_hi)
        done += m
    return acc.stats(seed)


def asymptotic_baselines(problem) -> dict:
    """Closed-form first-order approximations, for dashboards only."""
    out = {}
    if hasattr(problem, "n"):  # sum-exceedance problem
        n = problem.n
        out["single_jump"] = 0.0 if n == 0 else n * float(problem.model.tail(problem.b))
    if hasattr(problem, "mu"):  # level-crossing problem
        out["integrated_tail"] = float(problem.model.integrated_tail(problem.b)) / problem.mu
    return out

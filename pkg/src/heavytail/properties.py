"""Always-on consistency battery shared by the CLI and the test suite.

Each check returns (name, passed, detail).  These are the cheap structural
identities: pmf telescoping, log-normalizer identities and convexity,
sampler support bounds, per-draw estimator bounds, and harness determinism.
"""

import math

import numpy as np

from .crossing import (BlockScheme, CrossingProblem, FiniteVariance,
                       StrongEfficiency, SubStrong, BlockPmf,
                       sample_Zk1, sample_Zk3)
from .harness import EstimatorSample, RngStream, run
from .ld import LdProblem, sample_Zdom, sample_Zres
from .models import ParetoShifted, PurePareto, QueueIncrement


def _telescoping(pmf, probes=30):
    s = math.fsum(pmf.p(k) for k in range(1, probes + 1))
    remainder = 1.0 - pmf.cumulative(probes)
    return abs(s + remainder - 1.0)


def run_all(seed=0):
    checks = []
    rng = RngStream(seed)

    queue = QueueIncrement(2.5, 0.5)
    qprob = CrossingProblem(queue, queue.drift, 100.0, BlockScheme(2))
    pp = PurePareto(1.75)
    pprob = CrossingProblem(pp, 1.0, 100.0, BlockScheme(2))
    sub = PurePareto(1.25)
    sprob = CrossingProblem(sub, 1.0, 50.0, BlockScheme(2))

    err = max(_telescoping(BlockPmf(qprob, FiniteVariance())),
              _telescoping(BlockPmf(pprob, StrongEfficiency(beta=2.25))),
              _telescoping(BlockPmf(sprob, SubStrong())))
    checks.append(("pmf_telescoping", err <= 1e-12, f"max |sum - 1| = {err:.2e}"))

    model = ParetoShifted(2.5)
    lam0 = model.log_mgf_truncated(0.0, 50.0)
    target = math.log(1.0 - model.tail(50.0))
    err = abs(lam0 - target)
    checks.append(("log_mgf_zero_twist", err <= 1e-9, f"|Lambda(0) - log F(u)| = {err:.2e}"))

    thetas = np.linspace(0.0, 0.2, 9)
    lams = [model.log_mgf_truncated(t, 50.0) for t in thetas]
    worst = 0.0
    for i in range(1, len(thetas) - 1):
        chord = 0.5 * (lams[i - 1] + lams[i + 1])
        worst = max(worst, lams[i] - chord)
    checks.append(("log_mgf_convexity", worst <= 1e-9, f"max midpoint excess = {worst:.2e}"))

    gen = rng.child(1).generator()
    tw = model.make_twisted(40.0, 0.05)
    xs = tw.sample(gen, 20000)
    checks.append(("twisted_below_truncation", bool(np.all(xs < 40.0)),
                   f"max draw = {xs.max():.4f} < 40"))
    ys = model.sample_conditional_geq(25.0, gen, 20000)
    checks.append(("conditional_above_threshold", bool(np.all(ys >= 25.0)),
                   f"min draw = {ys.min():.4f} >= 25"))

    ld = LdProblem(ParetoShifted(2.5), 50, 60.0)
    ok = True
    for rep in range(200):
        zd = sample_Zdom(ld, rng.child(2, rep))
        zr = sample_Zres(ld, rng.child(3, rep))
        ctx = ld.context()
        ok &= zd.value <= ctx.bound_dom * (1 + 1e-12)
        ok &= zr.value <= math.exp(ctx.log_bound_res) * (1 + 1e-9)
    checks.append(("ld_per_draw_bounds", ok, "Zdom <= n*tail(b), Zres <= n*tail(b)*exp(n*Lambda)"))

    ok = True
    for rep in range(200):
        for k in (1, 2):
            ctx = qprob.block(k)
            z1 = sample_Zk1(qprob, k, rng.child(4, rep, k))
            z3 = sample_Zk3(qprob, k, rng.child(5, rep, k))
            ok &= z1.value <= ctx.q * (1 + 1e-12)
            ok &= z3.value <= ctx.n_hi * ctx.tail_geq_u * (1 + 1e-12)
    checks.append(("crossing_per_draw_bounds", ok,
                   "Z_k1 <= q_k and Z_k3 <= n_k*tail(b + n_(k-1)*mu)"))

    def toy_sample(stream):
        g = stream.generator()
        v = float(g.normal())
        return EstimatorSample(v, {"v": v}, nu=1, nu_max=1)

    s1 = run(toy_sample, 512, seed=seed)
    s8 = run(toy_sample, 512, seed=seed, threads=8)
    same = (s1.mean == s8.mean) and (s1.variance == s8.variance)
    checks.append(("harness_thread_determinism", same,
                   f"threads 1 vs 8: mean diff {abs(s1.mean - s8.mean):.1e}"))
    return checks

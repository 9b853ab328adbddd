"""Batch front end: experiment configs in, CSV tables and summaries out.

Exit codes: 0 success, 2 config parse error, 3 regime/validation error,
4 runtime failure.
"""

import argparse
import json
import math
import os
import sys
import time

from .crossing import (BlockScheme, CrossingProblem, FiniteVariance,
                       StrongEfficiency, SubStrong, estimate_level_crossing)
from .errors import ConfigurationError, HeavyTailError, RegimeError
from .harness import required_samples
from .ld import LdProblem, estimate_large_deviation
from .models import (DiscreteToy, ParetoShifted, ProductLambdaLaplace,
                     PurePareto, QueueIncrement)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_RUNTIME = 4

CSV_HEADER = ("experiment,n,b,r,regime,N,estimate,std_error,cv,"
              "mean_work,max_work,seed,wall_seconds")

PRESETS = {
    "table1": {
        "experiment": "large_deviation",
        "model": {"kind": "product_lambda_laplace", "alpha_lambda": 4.0},
        "n": [100, 500, 1000],
        "b": None,  # b = n
        "N": 10000,
    },
    "table2": {
        "experiment": "level_crossing",
        "model": {"kind": "queue_increment", "service_alpha": 2.5, "rho": 0.5},
        "b": [100.0, 1000.0, 10000.0],
        "r": [2],
        "regime": "finite_variance",
        "N": 10000,
    },
    "table3": {
        "experiment": "level_crossing",
        "model": {"kind": "queue_increment", "service_alpha": 2.5, "rho": 0.5},
        "b": [1000.0],
        "r": [2, 10, 100],
        "regime": "finite_variance",
        "N": 10000,
    },
}


def build_model(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("model must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "pareto_shifted":
        return ParetoShifted(float(spec["alpha"]), centered=bool(spec.get("centered", True)))
    if kind == "pure_pareto":
        return PurePareto(float(spec["alpha"]), centered=bool(spec.get("centered", True)))
    if kind == "product_lambda_laplace":
        return ProductLambdaLaplace(float(spec.get("alpha_lambda", 4.0)))
    if kind == "queue_increment":
        return QueueIncrement(float(spec.get("service_alpha", 2.5)), float(spec.get("rho", 0.5)))
    if kind == "discrete_toy":
        return DiscreteToy(spec["points"], spec["probs"])
    raise ConfigurationError(f"unknown model kind {kind!r}")


def build_regime(name, cfg):
    if name == "finite_variance":
        return FiniteVariance()
    if name == "strong_efficiency":
        return StrongEfficiency(beta=cfg.get("beta"),
                                allow_boundary_alpha=bool(cfg.get("allow_boundary_alpha", False)))
    if name == "sub_strong":
        return SubStrong(beta=cfg.get("beta"), gamma=cfg.get("gamma"))
    raise ConfigurationError(f"unknown regime {name!r}")


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _row(**kw):
    cols = ["experiment", "n", "b", "r", "regime", "N", "estimate", "std_error",
            "cv", "mean_work", "max_work", "seed", "wall_seconds"]
    return ",".join(_fmt(kw.get(c)) for c in cols)


def run_experiment(cfg, seed, threads):
    """Yield one CSV row dict per grid cell."""
    kind = cfg.get("experiment")
    model = build_model(cfg["model"])
    n_reps = int(cfg.get("N", 10000))
    if kind == "large_deviation":
        ns = cfg.get("n") or []
        bs = cfg.get("b")
        if not ns:
            raise ConfigurationError("large_deviation needs a nonempty 'n' grid")
        pairs = [(int(n), float(bs[i]) if bs else float(n)) for i, n in enumerate(ns)]
        for n, b in pairs:
            t0 = time.perf_counter()
            problem = LdProblem(model, n, b)
            stats = estimate_large_deviation(problem, n_reps, seed=seed, threads=threads)
            yield dict(experiment="large_deviation", n=n, b=b, r="", regime="",
                       N=n_reps, estimate=stats.mean, std_error=stats.std_error,
                       cv=stats.cv, mean_work=stats.mean_work, max_work=stats.max_work,
                       seed=seed, wall_seconds=time.perf_counter() - t0)
    elif kind == "level_crossing":
        bs = cfg.get("b") or []
        rs = cfg.get("r") or [2]
        if not bs:
            raise ConfigurationError("level_crossing needs a nonempty 'b' grid")
        regime_name = cfg.get("regime", "finite_variance")
        regime = build_regime(regime_name, cfg)
        mu = float(cfg.get("mu", getattr(model, "drift", 0.0) or 0.0))
        if not mu > 0.0:
            raise ConfigurationError("level_crossing needs a positive 'mu' "
                                     "(or a queue model with built-in drift)")
        for r in rs:
            for b in bs:
                t0 = time.perf_counter()
                problem = CrossingProblem(model, mu, float(b), BlockScheme(int(r)))
                stats = estimate_level_crossing(problem, regime, n_reps,
                                                seed=seed, threads=threads)
                yield dict(experiment="level_crossing", n="", b=float(b), r=int(r),
                           regime=regime_name, N=n_reps, estimate=stats.mean,
                           std_error=stats.std_error, cv=stats.cv,
                           mean_work=stats.mean_work, max_work=stats.max_work,
                           seed=seed, wall_seconds=time.perf_counter() - t0)
    elif kind == "property_suite":
        yield from run_property_suite(cfg, seed)
    else:
        raise ConfigurationError(f"unknown experiment {kind!r}")


def run_property_suite(cfg, seed):
    """Cheap always-on consistency checks, one row per property."""
    from . import properties

    for name, ok, detail in properties.run_all(seed=seed):
        yield dict(experiment=f"property:{name}", n="", b="", r="", regime="",
                   N="", estimate=1.0 if ok else 0.0, std_error=0.0, cv=0.0,
                   mean_work=0.0, max_work=0, seed=seed, wall_seconds=0.0)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def emit_plots(rows, outdir):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    xs = [float(r["b"]) if r["b"] != "" else float(r["n"]) for r in rows]
    for field, fname in (("estimate", "estimate.png"), ("cv", "cv.png")):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ys = [float(r[field]) for r in rows]
        ax.loglog(xs, ys, "o-") if field == "estimate" else ax.semilogx(xs, ys, "o-")
        ax.set_xlabel("rarity parameter")
        ax.set_ylabel(field)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, fname), dpi=120)
        plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="heavytail",
        description="Rare-event estimators for heavy-tailed random walks")
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="built-in experiment (table1, table2, table3)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--emit-plots", metavar="DIR",
                        help="write estimate/CV plots into DIR")
    args = parser.parse_args(argv)

    try:
        if args.preset:
            cfg = dict(PRESETS[args.preset])
        elif args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
        else:
            parser.print_usage(sys.stderr)
            print("error: need --config or --preset", file=sys.stderr)
            return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seed = args.seed
    if seed is None:
        seed = cfg.get("seed")
    if seed is None:
        seed = int(os.environ.get("HEAVYTAIL_SEED", "0"))
    threads = args.threads if args.threads else int(cfg.get("threads", 1))
    out_path = args.out or cfg.get("out")

    try:
        rows = list(run_experiment(cfg, int(seed), threads))
    except KeyError as exc:
        print(f"config error: missing field {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, RegimeError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except HeavyTailError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    lines = [CSV_HEADER] + [_row(**r) for r in rows]
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    print(text, end="")
    for r in rows:
        if r["estimate"] != "" and not str(r["experiment"]).startswith("property:"):
            est, se = float(r["estimate"]), float(r["std_error"])
            label = f"n={r['n']}" if r["n"] != "" else f"b={r['b']}, r={r['r']}"
            print(f"# {r['experiment']} {label}: estimate {est:.4e} "
                  f"(se {se:.2e}, cv {float(r['cv']):.3f})", file=sys.stderr)

    if args.emit_plots and rows and not str(rows[0]["experiment"]).startswith("property:"):
        try:
            emit_plots(rows, args.emit_plots)
        except Exception as exc:  # plots are best-effort extras
            print(f"plot generation failed: {exc}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

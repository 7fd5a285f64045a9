"""Time the compiled kernels against the numpy fallback.

Both backends are deterministic functions of (seed, counter), so every
timed call is also a correctness cross-check: the script asserts that
the two implementations return identical words before reporting.

Run from the repository root after an editable install:

    python3 benchmarks/compare_backends.py
    python3 benchmarks/compare_backends.py --family AB --n 8 --replicas 262144
"""

import argparse
import time

import numpy as np

from minmaxlab import backend, engine
from minmaxlab.topology import make_spec


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pair(label, make_call, repeat, rows):
    """Time one kernel on both backends and record a table row."""
    out_np = make_call(backend.fallback_impl)()
    t_np = best_of(make_call(backend.fallback_impl), repeat)
    if backend.ext_impl is None:
        rows.append((label, t_np, None, None))
        return
    out_cy = make_call(backend.ext_impl)()
    if not np.array_equal(np.asarray(out_np), np.asarray(out_cy)):
        raise AssertionError("backend mismatch in %s" % label)
    t_cy = best_of(make_call(backend.ext_impl), repeat)
    rows.append((label, t_np, t_cy, t_np / t_cy))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="Ab")
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--p", type=float, default=0.65)
    ap.add_argument("--replicas", type=int, default=1 << 16)
    ap.add_argument("--payoff-replicas", type=int, default=1 << 12)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = make_spec(args.family, args.n)
    plan = engine.sweep_plan(spec)
    n_words = args.replicas >> 6
    seed = backend.bits_seed(args.seed)
    p64 = backend.p64_of(args.p)

    print("backend available: %s (BACKEND_NAME=%s)"
          % ("yes" if backend.HAVE_EXT else "no, fallback only",
             backend.BACKEND_NAME))
    print("game %s, %d leaves, %d replicas"
          % (spec.name, plan.n_leaves, args.replicas))
    print()

    ctrs = np.arange(min(plan.n_leaves * max(n_words, 1), 1 << 24), dtype=np.uint64)
    buf = backend.sample_packed_bits(seed, args.p, plan.n_leaves, 0)
    pay = np.empty(args.payoff_replicas, dtype=np.float64)
    bits_out = np.empty(plan.n_leaves, dtype=np.uint64)

    rows = []
    bench_pair(
        "hash_words (%d words)" % ctrs.size,
        lambda impl: lambda: impl.hash_words(seed, ctrs),
        args.repeat, rows,
    )
    bench_pair(
        "sample_packed_bits (%d batches)" % max(n_words, 1),
        lambda impl: lambda: [
            impl.sample_packed_bits(seed, p64, False, plan.n_leaves, b, bits_out)
            for b in range(max(n_words, 1))
        ][-1],
        args.repeat, rows,
    )
    # the compiled sweep folds into its buffer, so each call gets a copy
    bench_pair(
        "sweep_packed (%d batches)" % max(n_words, 1),
        lambda impl: lambda: [
            impl.sweep_packed(buf.copy(), plan.na, plan.nb, plan.kinds, plan.ands)
            for _ in range(max(n_words, 1))
        ][-1],
        args.repeat, rows,
    )
    bench_pair(
        "payoff_roots (%d replicas)" % args.payoff_replicas,
        lambda impl: lambda: impl.payoff_roots(
            backend.payoff_seed(args.seed), plan.n_leaves, plan.na, plan.nb,
            plan.kinds, plan.ands, args.payoff_replicas, 0, pay,
        ),
        args.repeat, rows,
    )

    name_w = max(len(r[0]) for r in rows)
    print("%-*s  %10s  %10s  %8s" % (name_w, "kernel", "numpy", "cython", "speedup"))
    for label, t_np, t_cy, ratio in rows:
        if t_cy is None:
            print("%-*s  %9.1fms  %10s  %8s" % (name_w, label, 1e3 * t_np, "-", "-"))
        else:
            print("%-*s  %9.1fms  %9.1fms  %7.1fx"
                  % (name_w, label, 1e3 * t_np, 1e3 * t_cy, ratio))

    # end-to-end: the Monte Carlo estimator through the public wrapper
    est = engine.mc_win_prob(spec, args.p, args.replicas, args.seed)
    t_mc = best_of(
        lambda: engine.mc_win_prob(spec, args.p, args.replicas, args.seed),
        max(2, args.repeat // 2),
    )
    print()
    print("mc_win_prob via %s backend: %.1fms (estimate %.6f)"
          % (backend.BACKEND_NAME, 1e3 * t_mc, est.estimate))
    if backend.HAVE_EXT:
        print("rerun with MINMAXLAB_FORCE_FALLBACK=1 to take the same "
              "measurement on the pure numpy path")


if __name__ == "__main__":
    main()

"""Command-line surface: experiments, verifications, and artifacts.

Exit status: 0 success, 1 verification found a violation (witness file
written), 2 usage error, 3 budget refusal.
"""

import argparse
import datetime
import json
import sys

import numpy as np

from . import analysis, automata, boolfn, engine, output, toom
from .errors import BudgetError
from .topology import ALICE, FAMILIES, make_spec, outcome_count


def _parse_int_list(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _parse_float_list(text):
    if ".." in text:
        span, step = text.rsplit(":", 1)
        lo, hi = span.split("..", 1)
        lo, hi, step = float(lo), float(hi), float(step)
        if step <= 0:
            raise ValueError("grid step must be positive")
        grid = np.arange(lo, hi + 0.5 * step, step)
        return [float(round(p, 12)) for p in grid]
    return [float(tok) for tok in text.split(",") if tok]


def _config(args, command, keys):
    pairs = [("command", command)]
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        pairs.append((key, value))
    return pairs


def _comments(args, cfg):
    lines = ["config: " + " ".join("%s=%s" % kv for kv in cfg)]
    if not args.no_timestamp:
        lines.append(
            "date: " + datetime.datetime.now().isoformat(timespec="seconds")
        )
    return lines


def _emit_text(args, text):
    if args.out:
        output._atomic_write(args.out, text.encode("ascii"))
    else:
        sys.stdout.write(text)


def _emit_rows(args, cfg, rows):
    if getattr(args, "format", "csv") == "json":
        payload = {"config": dict(cfg), "rows": rows}
        _emit_text(args, output.json_text(payload))
    else:
        _emit_text(
            args, output.csv_text(rows, analysis.SWEEP_FIELDS, _comments(args, cfg))
        )


def _emit_json(args, cfg, result, key="result"):
    _emit_text(args, output.json_text({"config": dict(cfg), key: result}))


def _finish_verify(args, cfg, report):
    _emit_json(args, cfg, report)
    if report.get("status") == "violated":
        output.write_json(args.witness, report.get("witness"))
        print("violation: witness written to %s" % args.witness, file=sys.stderr)
        return 1
    return 0


def _need_seed(args):
    if args.seed is None:
        print("error: --seed is required for stochastic runs", file=sys.stderr)
        return True
    return False


def _cmd_exact(args):
    cfg = _config(args, "exact", ("family", "n", "p", "format"))
    rows = analysis.sweep(args.family, [args.n], [args.p], method="exact")
    _emit_rows(args, cfg, rows)
    return 0


def _cmd_mc(args):
    if _need_seed(args):
        return 2
    cfg = _config(args, "mc", ("family", "n", "p", "replicas", "seed", "format"))
    spec = make_spec(args.family, args.n)
    est = engine.mc_win_prob(spec, args.p, args.replicas, args.seed)
    rows = [
        {
            "family": spec.name,
            "n": args.n,
            "p": args.p,
            "method": "mc",
            "estimate": est.estimate,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "replicas": est.replicas,
            "seed": est.seed,
        }
    ]
    _emit_rows(args, cfg, rows)
    return 0


def _cmd_sweep(args):
    if args.method != "exact" and _need_seed(args):
        return 2
    cfg = _config(
        args,
        "sweep",
        ("families", "n-list", "p-grid", "method", "replicas", "seed", "format"),
    )
    rows = analysis.sweep(
        args.families,
        args.n_list,
        args.p_grid,
        method=args.method,
        seed=args.seed or 0,
        replicas=args.replicas,
    )
    _emit_rows(args, cfg, rows)
    return 0


def _cmd_threshold(args):
    method = args.method or analysis.default_method(args.family, args.n)
    if method in ("mc", "payoff-cdf") and _need_seed(args):
        return 2
    args.method = method
    cfg = _config(
        args,
        "threshold",
        ("family", "n", "level", "method", "tol", "replicas", "seed"),
    )
    est = analysis.threshold_bisect(
        args.family,
        args.n,
        level=args.level,
        method=method,
        tol=args.tol,
        seed=args.seed or 0,
        replicas=args.replicas,
    )
    result = {
        "family": est.family,
        "n": est.n,
        "level": est.level,
        "method": est.method,
        "tolerance": est.tolerance,
        "p_low": est.p_low,
        "p_high": est.p_high,
        "estimate": est.estimate,
        "replicas": est.replicas,
        "seed": est.seed,
    }
    _emit_json(args, cfg, result)
    return 0


def _cmd_window(args):
    method = args.method or analysis.default_method(args.family, args.n)
    if method in ("mc", "payoff-cdf") and _need_seed(args):
        return 2
    args.method = method
    cfg = _config(
        args, "window", ("family", "n", "eps", "method", "tol", "seed")
    )
    win = analysis.critical_window(
        args.family,
        args.n,
        args.eps,
        method=method,
        tol=args.tol,
        seed=args.seed or 0,
    )
    result = {
        "family": win.family,
        "n": win.n,
        "eps": win.eps,
        "method": win.method,
        "width": win.width,
        "c_hat": win.c_hat,
    }
    if win.lower is not None:
        result["p_at_eps"] = win.lower.estimate
        result["p_at_1_minus_eps"] = win.upper.estimate
    _emit_json(args, cfg, result)
    return 0


def _cmd_influence(args):
    if _need_seed(args):
        return 2
    cfg = _config(
        args,
        "influence",
        ("family", "n", "p", "outcome", "replicas", "dp", "bias-scale", "seed"),
    )
    spec = make_spec(args.family, args.n)
    if args.outcome is not None:
        est = analysis.pivotal_influence(
            spec, args.p, args.outcome, args.replicas, args.seed
        )
        result = {
            "outcome": args.outcome,
            "estimate": est.estimate,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "replicas": est.replicas,
            "seed": est.seed,
        }
        _emit_json(args, cfg, result)
        return 0
    try:
        rep = analysis.total_influence_check(
            spec, args.p, replicas=args.replicas, seed=args.seed, dp=args.dp,
            bias_scale=args.bias_scale,
        )
    except AssertionError as exc:
        output.write_json(args.witness, {"error": str(exc)})
        print("violation: %s" % exc, file=sys.stderr)
        return 1
    result = {
        "p": rep.p,
        "total": rep.total,
        "derivative": rep.derivative,
        "dp": rep.dp,
        "sigma": rep.sigma,
        "tolerance": rep.tolerance,
        "ok": rep.ok,
        "influences": list(rep.influences),
    }
    _emit_json(args, cfg, result)
    return 0


def _cmd_toom_construct(args):
    if _need_seed(args):
        return 2
    cfg = _config(args, "toom construct", ("family", "n", "seed"))
    spec = make_spec(args.family, args.n)
    sigma = toom.random_strategy(spec, args.seed)
    cycle = toom.construct_from_strategy(spec, sigma)
    cen = toom.census(cycle)
    payload = {
        "config": dict(cfg),
        "cycle": toom.cycle_to_json(cycle),
        "census": {
            "counts": cen.counts,
            "m": cen.m,
            "outcomes": cen.outcomes,
            "length": cen.length,
        },
    }
    _emit_text(args, output.json_text(payload))
    return 0


def _cmd_toom_validate(args):
    with open(args.infile) as fh:
        data = json.load(fh)
    cycle = toom.cycle_from_json(data.get("cycle", data))
    verdict = toom.validate(cycle.spec, cycle)
    if verdict is None:
        print("ok")
        return 0
    index, reason = verdict
    print("violation at step %d: %s" % (index, reason))
    return 1


def _cmd_toom_enumerate(args):
    cfg = _config(args, "toom enumerate", ("family", "n", "m-max"))
    spec = make_spec(args.family, args.n)
    counts = toom.enumerate_cycles(spec, args.m_max)
    _emit_json(args, cfg, {str(m): c for m, c in sorted(counts.items())}, key="counts")
    return 0


def _cmd_toom_search(args):
    if _need_seed(args):
        return 2
    cfg = _config(args, "toom search", ("family", "n", "budget", "seed"))
    found = toom.find_false_positive(args.family, args.n, args.budget, args.seed)
    if found is None:
        print("no witness within budget %d" % args.budget, file=sys.stderr)
        return 1
    x, cycle = found
    result = {
        "assignment": [int(b) for b in x],
        "cycle": toom.cycle_to_json(cycle),
    }
    _emit_json(args, cfg, result, key="witness")
    return 0


def _cmd_ca_snapshot(args):
    if _need_seed(args):
        return 2
    spec = make_spec(args.schedule, args.n)
    if spec.first_mover != ALICE:
        print("error: rule schedules cover Alice-first games only", file=sys.stderr)
        return 2
    bad = [t for t in args.times if not 0 <= t <= spec.depth]
    if bad:
        print("error: times %r outside 0..%d" % (bad, spec.depth), file=sys.stderr)
        return 2
    cfg = _config(
        args, "ca snapshot", ("schedule", "n", "times", "seed", "replica")
    )
    series = dict(automata.snapshot_series(spec, args.seed, args.replica))
    for t in args.times:
        path = "%s_t%03d.pgm" % (args.out_prefix, t)
        output.write_pgm(path, series[t], _comments(args, cfg) + ["t: %d" % t])
        print(path)
    return 0


def _cmd_ca_verify(args):
    if _need_seed(args):
        return 2
    spec = make_spec(args.schedule, args.n)
    if spec.first_mover != ALICE:
        print("error: rule schedules cover Alice-first games only", file=sys.stderr)
        return 2
    cfg = _config(
        args, "ca verify", ("schedule", "n", "p", "trials", "seed")
    )
    for r in range(args.trials):
        x = engine.sample_leaf_bits(spec, args.p, args.seed, r)
        got = automata.evolve_origin(spec, x)
        want = engine.eval_L(spec, x)
        if got != want:
            report = {
                "claim": "grid origin equals game evaluation",
                "status": "violated",
                "witness": {"replica": r, "assignment": [int(b) for b in x]},
            }
            return _finish_verify(args, cfg, report)
    report = {
        "claim": "grid origin equals game evaluation",
        "status": "verified",
        "trials": args.trials,
    }
    return _finish_verify(args, cfg, report)


def _pair(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("expected two comma-separated family names")
    return parts[0], parts[1]


def _cmd_verify_sandwich(args):
    cfg = _config(args, "verify sandwich", ("family", "n"))
    report = boolfn.verify_strategy_sandwich(make_spec(args.family, args.n))
    return _finish_verify(args, cfg, report)


def _cmd_verify_projection(args):
    if _need_seed(args):
        return 2
    cfg = _config(args, "verify projection", ("pair", "n", "trials", "seed"))
    report = boolfn.verify_projection(
        _pair(args.pair), args.n, args.trials, args.seed
    )
    return _finish_verify(args, cfg, report)


def _cmd_verify_compar(args):
    src, dst = _pair(args.pair)
    if src != "AB" or dst not in ("Ab", "aB"):
        print("error: comparison pairs are AB,Ab and AB,aB", file=sys.stderr)
        return 2
    cfg = _config(args, "verify compar", ("pair", "n", "p"))
    tt = boolfn.truth_table_of_game(make_spec("AB", args.n))
    if dst == "Ab":
        psi = boolfn.ell2_leaf_map(args.n)
        variant = "one-sets"
    else:
        psi = boolfn.ell1_leaf_map(args.n)
        variant = "zero-sets"
    report = boolfn.verify_compar(tt, psi, args.p, variant=variant)
    return _finish_verify(args, cfg, report)


def _cmd_verify_treeprop(args):
    cfg = _config(args, "verify treeprop", ("n",))
    report = boolfn.verify_tree_property(args.n)
    return _finish_verify(args, cfg, report)


def _cmd_verify_bounds(args):
    if _need_seed(args):
        return 2
    cfg = _config(
        args, "verify bounds", ("n-list", "method", "replicas", "seed")
    )
    report = analysis.bounds_report(
        n_list=args.n_list,
        method=args.method,
        seed=args.seed,
        replicas=args.replicas,
    )
    return _finish_verify(args, cfg, report)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit the date line from comment headers",
    )
    common.add_argument(
        "--witness",
        default="witness.json",
        help="where a verification violation witness is written",
    )

    rows = argparse.ArgumentParser(add_help=False)
    rows.add_argument("--format", choices=("csv", "json"), default="csv")

    ap = argparse.ArgumentParser(
        prog="minmaxlab",
        description="Random min-max games on product graphs: exact solvers, "
        "Monte Carlo, cycle certificates, threshold analysis.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", parents=[common, rows], help="one exact value")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("mc", parents=[common, rows], help="one MC estimate")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser(
        "sweep", parents=[common, rows], help="P over a (family, n, p) grid"
    )
    p.add_argument(
        "--families",
        type=lambda s: s.split(","),
        required=True,
        help="comma-separated family names",
    )
    p.add_argument(
        "--n-list",
        type=_parse_int_list,
        required=True,
        help="e.g. 1..20 or 8,12,16",
    )
    p.add_argument(
        "--p-grid",
        type=_parse_float_list,
        required=True,
        help="e.g. 0.66..0.76:0.01 or 0.1,0.5,0.9",
    )
    p.add_argument("--method", choices=("exact", "mc", "payoff-cdf"), default="exact")
    p.add_argument("--replicas", type=int, default=4096)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser(
        "threshold", parents=[common], help="bisect for a P level crossing"
    )
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument(
        "--method", choices=("exact-column", "recursion", "mc", "payoff-cdf")
    )
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--replicas", type=int, default=4096)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser(
        "window", parents=[common], help="width of the eps..1-eps climb"
    )
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument(
        "--method", choices=("exact-column", "recursion", "mc", "payoff-cdf")
    )
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_window)

    p = sub.add_parser(
        "influence", parents=[common], help="pivotal influence estimates"
    )
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--outcome", type=int, help="single outcome index")
    p.add_argument("--replicas", type=int, default=4096)
    p.add_argument("--dp", type=float, default=0.01)
    p.add_argument("--bias-scale", type=float, default=50.0,
                   help="finite-difference curvature allowance")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_influence)

    tp = sub.add_parser("toom", help="cycle certificates")
    tsub = tp.add_subparsers(dest="subcommand", required=True)

    p = tsub.add_parser("construct", parents=[common])
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_toom_construct)

    p = tsub.add_parser("validate", parents=[common])
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_toom_validate)

    p = tsub.add_parser("enumerate", parents=[common])
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.set_defaults(func=_cmd_toom_enumerate)

    p = tsub.add_parser("search", parents=[common])
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_toom_search)

    cp = sub.add_parser("ca", help="cellular-automaton view")
    csub = cp.add_subparsers(dest="subcommand", required=True)

    p = csub.add_parser("snapshot", parents=[common])
    p.add_argument("--schedule", required=True, help="family naming the rules")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--times", type=_parse_int_list, required=True)
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--out-prefix", default="snapshot")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_ca_snapshot)

    p = csub.add_parser("verify", parents=[common])
    p.add_argument("--schedule", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_ca_verify)

    vp = sub.add_parser("verify", help="structural invariants")
    vsub = vp.add_subparsers(dest="subcommand", required=True)

    p = vsub.add_parser("sandwich", parents=[common])
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_verify_sandwich)

    p = vsub.add_parser("projection", parents=[common])
    p.add_argument("--pair", required=True, help="e.g. AB,Ab")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=4096)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_verify_projection)

    p = vsub.add_parser("compar", parents=[common])
    p.add_argument("--pair", required=True, help="AB,Ab or AB,aB")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.set_defaults(func=_cmd_verify_compar)

    p = vsub.add_parser("treeprop", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_verify_treeprop)

    p = vsub.add_parser("bounds", parents=[common])
    p.add_argument("--n-list", type=_parse_int_list, default=[8, 12])
    p.add_argument("--method")
    p.add_argument("--replicas", type=int, default=100000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_verify_bounds)

    return ap


def dispatch(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BudgetError as exc:
        print("budget refusal: %s" % exc, file=sys.stderr)
        return 3
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Threshold estimation, influence checks, critical windows, bound reports."""

import math
from dataclasses import dataclass

import numpy as np

from . import backend, boolfn, columns, engine
from .errors import BudgetError
from .topology import (
    FAMILIES,
    make_spec,
    outcome_count,
    outcome_index,
    outcomes,
)

MAX_MC_REPLICAS = 1 << 22
MAX_SWEEP_CELLS = 10000
MAX_INFLUENCE_OUTCOMES = 4096
MAX_EXACT_OUTCOMES = 20

# Binary digits of p resolved per bisection step; the exact evaluators
# round p to float anyway, so refining past 1e-4 buys nothing.
EXACT_TOL_FLOOR = 1e-4

# Limiting crossing point of the doubly tree-branching recursion,
# (3 - sqrt 5)/2.  Finite-n crossings approach it from above.
TREE_TREE_LIMIT = (3.0 - math.sqrt(5.0)) / 2.0

# A-priori windows the estimated thresholds must land in.
TREE_LATTICE_WINDOW = (0.5, 0.875)
LATTICE_TREE_WINDOW = (0.0625, TREE_TREE_LIMIT)

SWEEP_FIELDS = (
    "family",
    "n",
    "p",
    "method",
    "estimate",
    "ci_low",
    "ci_high",
    "replicas",
    "seed",
)

_Z95 = 1.959963984540054

_TAG_SWEEP = 0x53574550
_TAG_PIVOT = 0x50495654
_TAG_LEVEL = 0x4C45564C


@dataclass(frozen=True)
class ThresholdEstimate:
    family: str
    n: int
    p_low: float
    p_high: float
    method: str
    tolerance: float
    level: float = 0.5
    replicas: int = 0
    seed: int = 0

    @property
    def estimate(self):
        return 0.5 * (self.p_low + self.p_high)


@dataclass(frozen=True)
class InfluenceReport:
    p: float
    influences: tuple
    total: float
    derivative: float
    dp: float
    sigma: float
    tolerance: float
    ok: bool


@dataclass(frozen=True)
class WindowEstimate:
    family: str
    n: int
    eps: float
    method: str
    width: float
    c_hat: float
    lower: ThresholdEstimate = None
    upper: ThresholdEstimate = None


def _family_code(name):
    base = name.rstrip("'")
    return FAMILIES.index(base) + 4 * (len(name) - len(base))


def _cell_seed(master, family, n, ip):
    s = backend.derive_seed(master, _TAG_SWEEP)
    s = backend.derive_seed(s, _family_code(family))
    s = backend.derive_seed(s, int(n))
    return backend.derive_seed(s, int(ip))


def exact_evaluator(family, n):
    """p -> P_n(p) without sampling noise, or None when no exact path
    exists for the family at this size."""
    spec = make_spec(family, n)
    if spec.name == "AB":
        return lambda p: engine.ab_tree_recursion(n, p)
    if spec.name == "Ab":
        return lambda p: columns.exact_win_prob_Ab(n, p)
    if spec.name == "aB":
        return lambda p: columns.exact_win_prob_aB(n, p)
    if spec.name == "ab" and outcome_count(spec) <= engine.MAX_DP_OUTCOMES:
        return lambda p: engine.exact_win_prob_dp(spec, p)
    return None


def default_method(family, n):
    spec = make_spec(family, n)
    if spec.name == "AB":
        return "recursion"
    if spec.name in ("Ab", "aB"):
        return "exact-column"
    return "mc"


def threshold_bisect(family, n, level=0.5, method=None, tol=0.01, seed=0,
                     replicas=4096):
    """Bisect for the p where P_n crosses `level`.

    P_n is strictly increasing in p, so plain bisection on the method's
    evaluator brackets the crossing.  The returned estimate is the final
    bracket midpoint.  For method "mc" the replica count doubles until
    the CI halfwidth drops below tol/2 before a bracket edge moves.
    """
    spec = make_spec(family, n)
    fam = spec.name
    if not 0.0 < level < 1.0:
        raise ValueError(
            "level %r does not bracket: P_n crosses only levels in (0, 1)"
            % (level,)
        )
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if method is None:
        method = default_method(family, n)
    if method in ("exact-column", "recursion"):
        if tol < EXACT_TOL_FLOOR:
            raise ValueError(
                "tol %g below the exact-method floor %g" % (tol, EXACT_TOL_FLOOR)
            )
        if method == "exact-column" and fam not in ("Ab", "aB"):
            raise ValueError("exact-column applies to Ab and aB only")
        if method == "recursion" and fam != "AB":
            raise ValueError("recursion applies to AB only")
        exact = exact_evaluator(fam, n)
        used = 0

        def evaluate(q):
            return exact(q)

    elif method == "payoff-cdf":
        values = np.sort(
            engine.sample_optimal_payoff(spec, replicas, seed)
        )
        used = replicas

        def evaluate(q):
            return np.searchsorted(values, q, side="right") / replicas

    elif method == "mc":
        state = {"r": int(replicas), "calls": 0, "max": int(replicas)}

        def evaluate(q):
            r = state["r"]
            while True:
                s = backend.derive_seed(seed, state["calls"])
                state["calls"] += 1
                est = engine.mc_win_prob(spec, q, r, s)
                if est.halfwidth < 0.5 * tol or r >= MAX_MC_REPLICAS:
                    break
                r = min(2 * r, MAX_MC_REPLICAS)
            state["r"] = r
            state["max"] = max(state["max"], r)
            return est.estimate

    else:
        raise ValueError("unknown method %r" % (method,))

    p_low, p_high = 0.0, 1.0
    while p_high - p_low > tol:
        mid = 0.5 * (p_low + p_high)
        if evaluate(mid) >= level:
            p_high = mid
        else:
            p_low = mid
    if method == "mc":
        used = state["max"]
    return ThresholdEstimate(
        family=fam,
        n=n,
        p_low=p_low,
        p_high=p_high,
        method=method,
        tolerance=tol,
        level=level,
        replicas=used,
        seed=seed,
    )


def _outcome_of(spec, v):
    if isinstance(v, (int, np.integer)):
        vi = int(v)
        if not 0 <= vi < outcome_count(spec):
            raise ValueError("outcome index %d out of range" % vi)
        return vi
    return outcome_index(spec, v)


def pivotal_influence(spec, p, v, replicas=10000, seed=0):
    """MC estimate of P[flipping outcome v flips the root value].

    The randomness off v is shared between the two evaluations: each
    replica is evaluated once with v forced to 0 and once with v forced
    to 1, all other leaves identical.
    """
    if replicas <= 0:
        raise ValueError("replicas must be positive")
    vi = _outcome_of(spec, v)
    if p in (0.0, 1.0):
        x = np.full(outcome_count(spec), int(p), dtype=np.uint8)
        x[vi] = 0
        lo = engine.eval_L(spec, x)
        x[vi] = 1
        d = float(engine.eval_L(spec, x) != lo)
        return engine.WinProbEstimate(d, d, d, replicas, seed)
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    n_batches = (replicas + 63) >> 6
    rem = replicas & 63
    flips = 0
    for b in range(n_batches):
        words = engine.sample_leaf_words(spec, p, seed, b)
        words[vi] = np.uint64(0)
        w0 = engine.eval_L_packed(spec, words)
        words[vi] = full
        w1 = engine.eval_L_packed(spec, words)
        word = int(w0) ^ int(w1)
        if rem and b == n_batches - 1:
            word &= (1 << rem) - 1
        flips += word.bit_count()
    est = flips / replicas
    lo, hi = engine.wilson_interval(flips, replicas)
    return engine.WinProbEstimate(est, lo, hi, replicas, seed)


def exact_influence(spec, p, v):
    """Exact influence of outcome v: total weight of assignments of the
    other coordinates for which v is pivotal."""
    K = outcome_count(spec)
    if K > MAX_EXACT_OUTCOMES:
        raise BudgetError(
            "requested %d outcome cells, budget MAX_EXACT_OUTCOMES=%d"
            % (K, MAX_EXACT_OUTCOMES)
        )
    vi = _outcome_of(spec, v)
    tt = boolfn.truth_table_of_game(spec)
    bit = np.int64(1) << np.int64(vi)
    idx = np.arange(1 << K, dtype=np.int64)
    off = idx[(idx & bit) == 0]
    piv = tt[off | bit] != tt[off]
    ones = np.bitwise_count(off.astype(np.uint64)).astype(np.int64)
    w = p**ones * (1.0 - p) ** (K - 1 - ones)
    return float(w[piv].sum())


def exact_influence_profile(spec, p):
    """Exact influence of every outcome, in outcome-index order."""
    return np.array(
        [exact_influence(spec, p, vi) for vi in range(outcome_count(spec))]
    )


def _derivative_estimate(spec, p, dp, replicas, seed):
    """Central difference of P_n around p, clamped into [0, 1].

    Returns (estimate, sigma); sigma is 0 for exact evaluators.
    """
    lo = max(0.0, p - dp)
    hi = min(1.0, p + dp)
    if hi <= lo:
        raise ValueError("dp too small to separate evaluation points")
    exact = exact_evaluator(spec.name, spec.rounds)
    if exact is not None:
        return (exact(hi) - exact(lo)) / (hi - lo), 0.0
    s = backend.derive_seed(seed, _TAG_LEVEL)
    e_lo = engine.mc_win_prob(spec, lo, replicas, backend.derive_seed(s, 0))
    e_hi = engine.mc_win_prob(spec, hi, replicas, backend.derive_seed(s, 1))
    sigma = (
        math.hypot(e_lo.halfwidth, e_hi.halfwidth) / _Z95 / (hi - lo)
    )
    return (e_hi.estimate - e_lo.estimate) / (hi - lo), sigma


def total_influence_check(spec, p, replicas=4096, seed=0, dp=0.01,
                          bias_scale=50.0):
    """Estimate every outcome influence, sum them, and check the sum
    against a finite-difference derivative of P_n.

    The comparison tolerance is 3 combined standard deviations plus a
    bias_scale * dp**2 allowance for the finite-difference curvature
    error.  Raises AssertionError when the gap exceeds it.
    """
    K = outcome_count(spec)
    if K > MAX_INFLUENCE_OUTCOMES:
        raise BudgetError(
            "requested %d outcome cells, budget MAX_INFLUENCE_OUTCOMES=%d"
            % (K, MAX_INFLUENCE_OUTCOMES)
        )
    base = backend.derive_seed(seed, _TAG_PIVOT)
    influences = []
    var = 0.0
    for vi in range(K):
        est = pivotal_influence(
            spec, p, vi, replicas, backend.derive_seed(base, vi)
        )
        influences.append(est.estimate)
        var += (est.halfwidth / _Z95) ** 2
    total = float(sum(influences))
    deriv_replicas = max(replicas, 1 << 17)
    derivative, dsigma = _derivative_estimate(spec, p, dp, deriv_replicas, seed)
    sigma = math.sqrt(var + dsigma * dsigma)
    tolerance = 3.0 * sigma + bias_scale * dp * dp
    gap = abs(total - derivative)
    assert gap <= tolerance, (
        "total influence %.6g vs derivative %.6g: gap %.3g exceeds %.3g"
        % (total, derivative, gap, tolerance)
    )
    return InfluenceReport(
        p=p,
        influences=tuple(influences),
        total=total,
        derivative=derivative,
        dp=dp,
        sigma=sigma,
        tolerance=tolerance,
        ok=True,
    )


def critical_window(family, n, eps, method=None, tol=1e-4, seed=0,
                    replicas=65536):
    """Width of the p-interval where P_n climbs from eps to 1 - eps.

    Two threshold bisections; reports the width and the implied
    sharpness constant width * n.
    """
    if not 0.0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    spec = make_spec(family, n)
    if method is None:
        method = default_method(family, n)
    if eps == 0.5:
        # both bisections would chase the same level
        return WindowEstimate(spec.name, n, eps, method, 0.0, 0.0)
    lower = threshold_bisect(
        family, n, level=eps, method=method, tol=tol,
        seed=backend.derive_seed(seed, 0), replicas=replicas,
    )
    upper = threshold_bisect(
        family, n, level=1.0 - eps, method=method, tol=tol,
        seed=backend.derive_seed(seed, 1), replicas=replicas,
    )
    width = max(0.0, upper.estimate - lower.estimate)
    return WindowEstimate(
        family=spec.name,
        n=n,
        eps=eps,
        method=method,
        width=width,
        c_hat=width * n,
        lower=lower,
        upper=upper,
    )


def bounds_report(families=FAMILIES, n_list=(8, 12, 16, 20), method=None,
                  seed=0, replicas=100000, tol=1e-3):
    """Check estimated thresholds against a-priori windows, the
    tree-side ordering, and the doubly lattice tail behavior.

    Returns a JSON-ready dict; report["status"] is "verified" only if
    every individual check passed.
    """
    report = {
        "n_list": [int(n) for n in n_list],
        "replicas": int(replicas),
        "seed": int(seed),
        "thresholds": [],
        "orderings": [],
        "trend": [],
    }
    ok = True
    windows = {"Ab": TREE_LATTICE_WINDOW, "aB": LATTICE_TREE_WINDOW}
    for n in n_list:
        ests = {}
        for fam in families:
            if fam == "AB":
                est = threshold_bisect(fam, n, method="recursion", tol=tol)
            elif fam in ("Ab", "aB"):
                est = threshold_bisect(
                    fam, n, method=method or "exact-column", tol=tol,
                    seed=_cell_seed(seed, fam, n, 0), replicas=replicas,
                )
            else:
                continue
            ests[fam] = est.estimate
            row = {
                "family": fam,
                "n": int(n),
                "estimate": est.estimate,
                "p_low": est.p_low,
                "p_high": est.p_high,
            }
            window = windows.get(fam)
            if window is not None:
                inside = window[0] <= est.estimate <= window[1]
                row["window"] = list(window)
                row["in_window"] = inside
                ok = ok and inside
            report["thresholds"].append(row)
        if all(f in ests for f in ("aB", "AB", "Ab")):
            ordered = ests["aB"] <= ests["AB"] <= ests["Ab"]
            report["orderings"].append(
                {
                    "n": int(n),
                    "aB": ests["aB"],
                    "AB": ests["AB"],
                    "Ab": ests["Ab"],
                    "ok": ordered,
                }
            )
            ok = ok and ordered
    if "ab" in families:
        spec_n = max(n_list)
        spec = make_spec("ab", spec_n)
        for ip, (p, bound, side) in enumerate(
            ((0.95, 0.9, "above"), (0.01, 0.1, "below"))
        ):
            est = engine.mc_win_prob(
                spec, p, replicas, _cell_seed(seed, "ab", spec_n, ip)
            )
            good = est.estimate > bound if side == "above" else est.estimate < bound
            report["trend"].append(
                {
                    "family": "ab",
                    "n": int(spec_n),
                    "p": p,
                    "estimate": est.estimate,
                    "bound": bound,
                    "side": side,
                    "ok": good,
                }
            )
            ok = ok and good
    report["status"] = "verified" if ok else "violated"
    return report


def _exact_sweep_column(family, n, ps):
    fam = make_spec(family, n).name
    arr = np.asarray(ps, dtype=np.float64)
    if fam == "AB":
        return engine.ab_tree_recursion(n, arr)
    if fam == "Ab":
        return columns.exact_win_prob_Ab_grid(n, arr)
    if fam == "aB":
        return columns.exact_win_prob_aB_grid(n, arr)
    if fam == "ab":
        spec = make_spec("ab", n)
        if outcome_count(spec) > engine.MAX_DP_OUTCOMES:
            raise BudgetError(
                "requested %d outcome cells, budget MAX_DP_OUTCOMES=%d"
                % (outcome_count(spec), engine.MAX_DP_OUTCOMES)
            )
        return np.array([engine.exact_win_prob_dp(spec, p) for p in arr])
    raise ValueError("no exact evaluator for family %r" % (fam,))


def sweep(families, n_list, p_grid, method="exact", seed=0, replicas=4096):
    """P estimates over a (family, n, p) grid, one dict per row.

    Cell seeds derive from (master seed, family, n, p-index), so any
    sub-grid of a sweep reproduces the full run's values exactly.
    """
    if isinstance(families, str):
        families = (families,)
    families = tuple(families)
    n_list = tuple(int(n) for n in n_list)
    ps = [float(p) for p in p_grid]
    cells = len(families) * len(n_list) * len(ps)
    if cells > MAX_SWEEP_CELLS:
        raise BudgetError(
            "requested %d sweep cells, budget MAX_SWEEP_CELLS=%d"
            % (cells, MAX_SWEEP_CELLS)
        )
    rows = []
    for fam in families:
        name = make_spec(fam, 0).name
        for n in n_list:
            if method == "exact":
                vals = _exact_sweep_column(name, n, ps)
                for p, val in zip(ps, vals):
                    rows.append(
                        {
                            "family": name,
                            "n": n,
                            "p": p,
                            "method": method,
                            "estimate": float(val),
                            "ci_low": float(val),
                            "ci_high": float(val),
                            "replicas": 0,
                            "seed": 0,
                        }
                    )
            elif method == "mc":
                spec = make_spec(name, n)
                for ip, p in enumerate(ps):
                    s = _cell_seed(seed, name, n, ip)
                    est = engine.mc_win_prob(spec, p, replicas, s)
                    rows.append(
                        {
                            "family": name,
                            "n": n,
                            "p": p,
                            "method": method,
                            "estimate": est.estimate,
                            "ci_low": est.ci_low,
                            "ci_high": est.ci_high,
                            "replicas": replicas,
                            "seed": s,
                        }
                    )
            elif method == "payoff-cdf":
                spec = make_spec(name, n)
                s = _cell_seed(seed, name, n, 0)
                values = np.sort(engine.sample_optimal_payoff(spec, replicas, s))
                for p, wins in zip(
                    ps, np.searchsorted(values, ps, side="right")
                ):
                    lo, hi = engine.wilson_interval(int(wins), replicas)
                    rows.append(
                        {
                            "family": name,
                            "n": n,
                            "p": p,
                            "method": method,
                            "estimate": int(wins) / replicas,
                            "ci_low": lo,
                            "ci_high": hi,
                            "replicas": replicas,
                            "seed": s,
                        }
                    )
            else:
                raise ValueError("unknown method %r" % (method,))
    return rows

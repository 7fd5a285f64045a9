import math

import numpy as np
import pytest

from minmaxlab import analysis, columns, engine
from minmaxlab.errors import BudgetError
from minmaxlab.topology import make_spec


def test_default_methods():
    assert analysis.default_method("AB", 10) == "recursion"
    assert analysis.default_method("Ab", 10) == "exact-column"
    assert analysis.default_method("aB", 10) == "exact-column"
    assert analysis.default_method("ab", 10) == "mc"


def test_bisect_exact_column_brackets_the_crossing():
    est = analysis.threshold_bisect("Ab", 12)
    assert est.method == "exact-column"
    assert est.p_high - est.p_low <= est.tolerance
    assert est.estimate == 0.5 * (est.p_low + est.p_high)
    # frozen crossing: 0.6567418999064052
    assert abs(est.estimate - 0.6567418999064052) <= 0.5 * est.tolerance + 1e-12
    assert columns.exact_win_prob_Ab(12, est.p_low) < 0.5
    assert columns.exact_win_prob_Ab(12, est.p_high) >= 0.5


def test_bisect_recursion_approaches_the_limit():
    est = analysis.threshold_bisect("AB", 100, method="recursion", tol=1e-4)
    assert abs(est.estimate - analysis.TREE_TREE_LIMIT) < 1e-3
    assert est.replicas == 0
    # finite n crossings sit above the limit
    assert est.p_high > analysis.TREE_TREE_LIMIT


def test_bisect_levels_are_monotone():
    lo = analysis.threshold_bisect("Ab", 6, level=0.25)
    hi = analysis.threshold_bisect("Ab", 6, level=0.75)
    assert lo.estimate < hi.estimate
    assert lo.level == 0.25 and hi.level == 0.75


def test_bisect_argument_errors():
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, level=0.0)
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, level=1.2)
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, tol=0.0)
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, tol=1e-6)  # below the exact floor
    with pytest.raises(ValueError):
        analysis.threshold_bisect("AB", 6, method="exact-column")
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, method="recursion")
    with pytest.raises(ValueError):
        analysis.threshold_bisect("Ab", 6, method="tea-leaves")


def test_bisect_mc_is_deterministic_and_adaptive():
    a = analysis.threshold_bisect("ab", 8, method="mc", tol=0.05, seed=3,
                                  replicas=1024)
    b = analysis.threshold_bisect("ab", 8, method="mc", tol=0.05, seed=3,
                                  replicas=1024)
    assert a == b
    assert a.p_high - a.p_low <= 0.05
    # the replica count had to grow to push the CI under tol/2
    assert a.replicas > 1024
    c = analysis.threshold_bisect("ab", 8, method="mc", tol=0.05, seed=4,
                                  replicas=1024)
    assert c != a


def test_bisect_payoff_cdf():
    est = analysis.threshold_bisect("Ab", 6, method="payoff-cdf", tol=1e-3,
                                    seed=42, replicas=200000)
    # frozen exact crossing at n=6: 0.586395263671875; one empirical CDF
    # from 2e5 replicas lands within a couple of sigma of it
    assert abs(est.estimate - 0.586395263671875) < 0.02
    assert est.replicas == 200000
    again = analysis.threshold_bisect("Ab", 6, method="payoff-cdf", tol=1e-3,
                                      seed=42, replicas=200000)
    assert est == again


def test_pivotal_influence_matches_exact_value():
    spec = make_spec("Ab", 1)
    for vi in range(4):
        assert analysis.exact_influence(spec, 0.5, vi) == 0.375
    est = analysis.pivotal_influence(spec, 0.5, 0, replicas=1 << 16, seed=11)
    assert abs(est.estimate - 0.375) < 0.02
    assert est.ci_low <= 0.375 <= est.ci_high


def test_pivotal_influence_accepts_vertex_tuples():
    spec = make_spec("Ab", 1)
    by_index = analysis.pivotal_influence(spec, 0.3, 0, replicas=2048, seed=5)
    by_vertex = analysis.pivotal_influence(spec, 0.3, ("1", (0, 1)),
                                           replicas=2048, seed=5)
    assert by_index == by_vertex


def test_pivotal_influence_edge_ps():
    spec = make_spec("Ab", 1)
    assert analysis.pivotal_influence(spec, 0.0, 0, replicas=10).estimate == 0.0
    assert analysis.pivotal_influence(spec, 1.0, 0, replicas=10).estimate == 0.0
    trivial = make_spec("Ab", 0)
    assert analysis.pivotal_influence(trivial, 0.0, 0, replicas=10).estimate == 1.0


def test_pivotal_influence_errors():
    spec = make_spec("Ab", 1)
    with pytest.raises(ValueError):
        analysis.pivotal_influence(spec, 0.5, 0, replicas=0)
    with pytest.raises(ValueError):
        analysis.pivotal_influence(spec, 0.5, 4)


def test_exact_influence_profile_and_symmetry():
    spec = make_spec("Ab", 1)
    prof = analysis.exact_influence_profile(spec, 0.5)
    assert np.array_equal(prof, [0.375] * 4)
    assert prof.sum() == 1.5
    # the doubly tree game is symmetric in its leaves
    prof = analysis.exact_influence_profile(make_spec("AB", 2), 0.4)
    assert np.allclose(prof, prof[0], atol=1e-15)
    with pytest.raises(BudgetError):
        analysis.exact_influence(make_spec("Ab", 3), 0.5, 0)


def test_exact_influence_agrees_with_mc():
    spec = make_spec("ab", 2)
    for vi in (0, 4, 8):
        want = analysis.exact_influence(spec, 0.3, vi)
        got = analysis.pivotal_influence(spec, 0.3, vi, replicas=1 << 16, seed=2)
        assert abs(got.estimate - want) < 0.02, vi


def test_total_influence_check_exact_derivative_path():
    spec = make_spec("AB", 3)
    report = analysis.total_influence_check(spec, 0.5, replicas=4096, seed=0)
    assert report.ok
    assert report.total == pytest.approx(sum(report.influences))
    assert len(report.influences) == 64
    # AB has an exact evaluator, so the derivative carries no MC noise
    assert report.derivative > 0
    got = analysis.exact_influence_profile(make_spec("AB", 2), 0.5).sum()
    small = analysis.total_influence_check(make_spec("AB", 2), 0.5,
                                           replicas=1 << 14, seed=1)
    assert small.ok
    assert abs(small.total - got) < 0.1


def test_total_influence_check_mc_derivative_path():
    # ab at n=5 has 36 outcomes: too many for the exact table, so the
    # derivative falls back to sampling
    report = analysis.total_influence_check(make_spec("ab", 5), 0.5,
                                            replicas=4096, seed=7)
    assert report.ok
    assert report.sigma > 0


def test_total_influence_check_flags_a_bad_tolerance():
    with pytest.raises(AssertionError):
        analysis.total_influence_check(make_spec("AB", 3), 0.5, replicas=4096,
                                       seed=0, dp=0.3, bias_scale=0.0)


def test_total_influence_budget():
    with pytest.raises(BudgetError):
        analysis.total_influence_check(make_spec("Ab", 9), 0.5)


def test_critical_window_shrinks_with_n():
    w8 = analysis.critical_window("Ab", 8, 0.25)
    w12 = analysis.critical_window("Ab", 12, 0.25)
    assert w8.width == pytest.approx(0.056213, abs=5e-4)
    assert w12.width == pytest.approx(0.026794, abs=5e-4)
    assert w12.width < w8.width
    assert w12.c_hat < w8.c_hat
    assert w8.c_hat == pytest.approx(w8.width * 8)
    assert w8.lower.level == 0.25 and w8.upper.level == 0.75


def test_critical_window_eps_half_and_errors():
    w = analysis.critical_window("Ab", 8, 0.5)
    assert w.width == 0.0 and w.c_hat == 0.0
    assert w.lower is None and w.upper is None
    with pytest.raises(ValueError):
        analysis.critical_window("Ab", 8, 0.0)
    with pytest.raises(ValueError):
        analysis.critical_window("Ab", 8, 0.6)


def test_tree_windows_are_much_sharper():
    wAB = analysis.critical_window("AB", 8, 0.25)
    wAb = analysis.critical_window("Ab", 8, 0.25)
    assert wAB.width < 0.5 * wAb.width


def test_bounds_report_small_grid():
    report = analysis.bounds_report(n_list=(4, 8), replicas=20000, tol=1e-3)
    assert report["status"] == "verified"
    assert {row["family"] for row in report["thresholds"]} == {"AB", "Ab", "aB"}
    assert all(row["ok"] for row in report["orderings"])
    assert [row["p"] for row in report["trend"]] == [0.95, 0.01]
    assert all(row["ok"] for row in report["trend"])
    for row in report["thresholds"]:
        if "in_window" in row:
            assert row["in_window"], row


def test_sweep_exact_grid():
    ps = [0.0, 0.25, 0.5, 0.75, 1.0]
    rows = analysis.sweep(("AB", "Ab", "aB"), (2, 6), ps)
    assert len(rows) == 3 * 2 * 5
    for row in rows:
        assert set(row) == set(analysis.SWEEP_FIELDS)
        assert row["ci_low"] == row["estimate"] == row["ci_high"]
        assert row["replicas"] == 0
    by_key = {}
    for row in rows:
        by_key.setdefault((row["family"], row["n"]), []).append(row["estimate"])
    for (fam, n), vals in by_key.items():
        assert vals[0] == 0.0 and vals[-1] == 1.0
        assert all(b >= a for a, b in zip(vals, vals[1:])), (fam, n)
    ab2 = [r for r in rows if r["family"] == "AB" and r["n"] == 2 and r["p"] == 0.5]
    assert ab2[0]["estimate"] == pytest.approx(42849 / 65536, abs=1e-12)


def test_sweep_exact_lattice_budget_and_primed():
    assert analysis.sweep("ab", (3,), [0.5])[0]["estimate"] == pytest.approx(
        engine.exact_win_prob_ab(3, 0.5), abs=1e-12)
    with pytest.raises(BudgetError):
        analysis.sweep("ab", (4,), [0.5])
    with pytest.raises(ValueError):
        analysis.sweep("Ab'", (2,), [0.5])


def test_sweep_mc_reproducibility():
    ps = [0.3, 0.5, 0.7]
    full = analysis.sweep(("Ab", "ab"), (2, 4), ps, method="mc", seed=9,
                          replicas=2048)
    again = analysis.sweep(("Ab", "ab"), (2, 4), ps, method="mc", seed=9,
                           replicas=2048)
    assert full == again
    # dropping a family or an n leaves the other cells untouched
    sub = analysis.sweep("ab", (4,), ps, method="mc", seed=9, replicas=2048)
    want = [r for r in full if r["family"] == "ab" and r["n"] == 4]
    assert sub == want
    # primed families run under mc
    primed = analysis.sweep("ab'", (2,), [0.5], method="mc", seed=1,
                            replicas=2048)
    assert primed[0]["family"] == "ab'"


def test_sweep_payoff_cdf_is_one_sample_per_game():
    ps = [0.2, 0.4, 0.6, 0.8]
    rows = analysis.sweep("Ab", (4,), ps, method="payoff-cdf", seed=3,
                          replicas=4096)
    assert len({row["seed"] for row in rows}) == 1
    ests = [row["estimate"] for row in rows]
    # an empirical CDF is monotone by construction, noise included
    assert all(b >= a for a, b in zip(ests, ests[1:]))
    assert all(row["replicas"] == 4096 for row in rows)


def test_sweep_cell_budget():
    with pytest.raises(BudgetError):
        analysis.sweep(("AB", "Ab", "aB", "ab"), (2,), [0.0] * 2501)


def test_cell_seeds_are_distinct():
    seeds = {
        analysis._cell_seed(0, fam, n, ip)
        for fam in ("AB", "Ab", "aB", "ab", "Ab'", "ab'")
        for n in (1, 2, 8)
        for ip in range(5)
    }
    assert len(seeds) == 6 * 3 * 5
    assert analysis._family_code("AB") == 0
    assert analysis._family_code("ab'") == 7

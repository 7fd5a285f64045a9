"""Boolean structure of game outcome functions.

Truth tables are uint8 vectors over 2^K inputs, input v assigning bit j
of v to variable j (variable = outcome index for game tables).  The
tools here enumerate minimal one/zero sets, compare them against the
outcome sets realizable by positional strategies, project the
tree-pair game onto the mixed families, and verify the pair-contraction
identity and the gluing comparison inequality by exact enumeration.
"""

import itertools

import numpy as np

from . import engine
from .errors import BudgetError
from .topology import (
    ALICE,
    BOB,
    GameSpec,
    children,
    outcome_count,
    outcome_index,
    outcomes,
    root,
    turn,
)

MAX_TABLE_VARS = 25
MAX_MINSET_VARS = 20
MAX_SANDWICH_OUTCOMES = 16
MAX_EXACT_VARS = 16
MAX_FAMILY_CROSS = 200000


def _n_vars(tt):
    k = int(np.asarray(tt).shape[0]).bit_length() - 1
    if (1 << k) != np.asarray(tt).shape[0]:
        raise ValueError("table length must be a power of two")
    return k


def _popcounts(k):
    idx = np.arange(1 << k, dtype=np.int64)
    pc = np.zeros(idx.shape[0], dtype=np.int64)
    for b in range(k):
        pc += (idx >> b) & 1
    return pc


def truth_table_of_game(spec):
    """Game value for every leaf assignment; variable j = leaf index j."""
    K = outcome_count(spec)
    if K > MAX_TABLE_VARS:
        raise BudgetError(
            "requested a table on %d variables, budget MAX_TABLE_VARS=%d"
            % (K, MAX_TABLE_VARS)
        )
    total = 1 << K
    tt = np.empty(total, dtype=np.uint8)
    shifts = np.arange(K, dtype=np.int64)
    chunk = 1 << 15
    for start in range(0, total, chunk):
        vs = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((vs[:, None] >> shifts) & 1).astype(np.uint8)
        tt[start : start + vs.shape[0]] = engine.sweep_values(spec, bits)
    return tt


def is_monotone(tt):
    tt = np.asarray(tt)
    k = _n_vars(tt)
    for b in range(k):
        v = tt.reshape(-1, 2, 1 << b)
        if np.any(v[:, 0, :] > v[:, 1, :]):
            return False
    return True


def _require_monotone(tt):
    if not is_monotone(tt):
        raise ValueError("input table is not monotone")


def minimal_one_sets(tt):
    """Masks of the minimal variable sets whose all-ones assignment wins.

    A one is minimal when clearing any single member bit loses."""
    tt = np.asarray(tt)
    k = _n_vars(tt)
    if k > MAX_MINSET_VARS:
        raise BudgetError(
            "requested minimal sets on %d variables, budget MAX_MINSET_VARS=%d"
            % (k, MAX_MINSET_VARS)
        )
    _require_monotone(tt)
    idx = np.arange(1 << k, dtype=np.int64)
    is_min = tt.astype(bool).copy()
    for b in range(k):
        has = ((idx >> b) & 1).astype(bool)
        is_min &= ~(has & (tt[idx ^ (1 << b)] == 1))
    return idx[is_min]


def dual_table(tt):
    """The dual function t*(x) = 1 - t(complement of x)."""
    tt = np.asarray(tt)
    k = _n_vars(tt)
    full = (1 << k) - 1
    idx = np.arange(1 << k, dtype=np.int64)
    return (1 - tt[full ^ idx]).astype(np.uint8)


def minimal_zero_sets(tt):
    """Masks of the minimal variable sets whose all-zeros assignment
    (others one) loses; computed as minimal one-sets of the dual."""
    return minimal_one_sets(dual_table(tt))


def is_one_set(tt, mask):
    return int(np.asarray(tt)[mask]) == 1


def is_zero_set(tt, mask):
    k = _n_vars(tt)
    return int(np.asarray(tt)[((1 << k) - 1) ^ mask]) == 0


def strategy_outcome_families(spec, player):
    """Distinct outcome sets over all of the player's positional
    strategies, quotiented by reachability: choices are only made at
    vertices the strategy itself reaches, so shared lattice vertices
    receive a single choice."""
    leaves = {}

    def rec(d, reached, acc):
        if d == spec.depth:
            acc.add(frozenset(outcome_index(spec, v) for v in reached))
            return
        if turn(spec, d) != player:
            nxt = set()
            for v in reached:
                nxt.update(children(spec, v))
            rec(d + 1, nxt, acc)
            return
        vs = sorted(reached)
        for combo in itertools.product((1, 2), repeat=len(vs)):
            nxt = set()
            for v, m in zip(vs, combo):
                nxt.add(children(spec, v)[m - 1])
            rec(d + 1, nxt, acc)

    acc = set()
    rec(0, {root(spec)}, acc)
    return acc


def verify_strategy_sandwich(spec):
    """Check that minimal zero-sets sit inside Alice's realizable outcome
    sets, which sit inside all zero-sets, and the one-set chain for Bob.
    Reports strictness of each inclusion."""
    K = outcome_count(spec)
    if K > MAX_SANDWICH_OUTCOMES:
        raise BudgetError(
            "requested sandwich on %d outcomes, budget MAX_SANDWICH_OUTCOMES=%d"
            % (K, MAX_SANDWICH_OUTCOMES)
        )
    tt = truth_table_of_game(spec)
    idx = np.arange(1 << K, dtype=np.int64)
    full = (1 << K) - 1

    z_strat = strategy_outcome_families(spec, ALICE)
    a_strat = strategy_outcome_families(spec, BOB)
    z_min = {frozenset(_mask_bits(m, K)) for m in minimal_zero_sets(tt)}
    a_min = {frozenset(_mask_bits(m, K)) for m in minimal_one_sets(tt)}

    def mask_of(s):
        m = 0
        for j in s:
            m |= 1 << j
        return m

    witness = None
    ok = True
    checks = {}

    missing = [s for s in z_min if s not in z_strat]
    checks["minimal_zero_sets_realized"] = not missing
    bad = [s for s in z_strat if not is_zero_set(tt, mask_of(s))]
    checks["alice_outcome_sets_are_zero_sets"] = not bad
    if missing or bad:
        ok = False
        witness = sorted((missing + bad)[0])

    missing1 = [s for s in a_min if s not in a_strat]
    checks["minimal_one_sets_realized"] = not missing1
    bad1 = [s for s in a_strat if not is_one_set(tt, mask_of(s))]
    checks["bob_outcome_sets_are_one_sets"] = not bad1
    if (missing1 or bad1) and ok:
        ok = False
        witness = sorted((missing1 + bad1)[0])

    n_zero_sets = int(np.sum(tt[full ^ idx] == 0))
    n_one_sets = int(np.sum(tt[idx] == 1))
    strict = {
        "zero_lower": len(z_min) < len(z_strat),
        "zero_upper": len(z_strat) < n_zero_sets,
        "one_lower": len(a_min) < len(a_strat),
        "one_upper": len(a_strat) < n_one_sets,
    }
    return {
        "claim": "minimal sets within strategy outcome sets within closed families",
        "instance": "%s n=%d" % (spec.name, spec.rounds),
        "status": "verified" if ok else "violated",
        "witness": witness,
        "checks": checks,
        "strict": strict,
        "counts": {
            "minimal_zero_sets": len(z_min),
            "alice_strategy_sets": len(z_strat),
            "zero_sets": n_zero_sets,
            "minimal_one_sets": len(a_min),
            "bob_strategy_sets": len(a_strat),
            "one_sets": n_one_sets,
        },
    }


def _mask_bits(mask, k):
    return [j for j in range(k) if (mask >> j) & 1]


def project_ell(word):
    """Move counts of a tree word: (number of 1 moves, number of 2 moves)."""
    n1 = sum(1 for c in word if c == "1")
    return (n1, len(word) - n1)


def project_ell1(v):
    return (project_ell(v[0]), v[1])


def project_ell2(v):
    return (v[0], project_ell(v[1]))


def ell2_leaf_map(n):
    """For each tree-pair outcome index, the index of its image under
    collapsing the b-word to move counts (lands in the Ab game)."""
    src = GameSpec("AB", n)
    dst = GameSpec("Ab", n)
    return np.array(
        [outcome_index(dst, project_ell2(v)) for v in outcomes(src)], dtype=np.int64
    )


def ell1_leaf_map(n):
    src = GameSpec("AB", n)
    dst = GameSpec("aB", n)
    return np.array(
        [outcome_index(dst, project_ell1(v)) for v in outcomes(src)], dtype=np.int64
    )


def verify_projection(spec_pair, n, trials, seed):
    """Check L_fine(x composed with the collapse) = L_coarse(x) on random
    assignments of the coarse outcome set, 64 per packed batch."""
    fine, coarse = spec_pair
    if fine != "AB" or coarse not in ("Ab", "aB"):
        raise ValueError("supported pairs: ('AB','Ab') and ('AB','aB')")
    if n > 6:
        raise BudgetError("requested n=%d, budget for projection checks is 6" % n)
    sp_f = GameSpec("AB", n)
    sp_c = GameSpec(coarse, n)
    lmap = ell2_leaf_map(n) if coarse == "Ab" else ell1_leaf_map(n)
    n_batches = (trials + 63) >> 6
    rem = trials & 63
    for b in range(n_batches):
        words_c = engine.sample_leaf_words(sp_c, 0.5, seed, b)
        root_c = engine.eval_L_packed(sp_c, words_c)
        root_f = engine.eval_L_packed(sp_f, words_c[lmap])
        diff = int(root_c) ^ int(root_f)
        if rem and b == n_batches - 1:
            diff &= (1 << rem) - 1
        if diff:
            lane = (diff & -diff).bit_length() - 1
            bits = ((words_c >> np.uint64(lane)) & np.uint64(1)).astype(int)
            return {
                "claim": "coarse game equals tree pair composed with collapse",
                "instance": "%s vs %s, n=%d" % (coarse, fine, n),
                "status": "violated",
                "witness": {"replica": 64 * b + lane, "assignment": bits.tolist()},
            }
    return {
        "claim": "coarse game equals tree pair composed with collapse",
        "instance": "%s vs %s, n=%d" % (coarse, fine, n),
        "status": "verified",
        "witness": None,
        "trials": trials,
    }


PROFILES = ("f-", "f+", "f1", "f2", "f_or", "f_and")


def two_point_profile(tt, x, i1, i2):
    """Classify the restriction of tt to variables i1, i2 with the other
    variables pinned by x.  Monotone tables land in the six profiles."""
    if i1 == i2:
        raise ValueError("need two distinct variables")
    tt = np.asarray(tt)
    k = _n_vars(tt)
    arr = np.asarray(x).astype(np.int64)
    if arr.shape != (k,):
        raise ValueError("x must assign all %d variables" % k)
    m = 0
    for j in range(k):
        if j != i1 and j != i2 and arr[j]:
            m |= 1 << j
    g00 = int(tt[m])
    g10 = int(tt[m | (1 << i1)])
    g01 = int(tt[m | (1 << i2)])
    g11 = int(tt[m | (1 << i1) | (1 << i2)])
    return _classify_profile(g00, g10, g01, g11)


def _classify_profile(g00, g10, g01, g11):
    quad = (g00, g10, g01, g11)
    if quad == (0, 0, 0, 0):
        return "f-"
    if quad == (1, 1, 1, 1):
        return "f+"
    if quad == (0, 1, 0, 1):
        return "f1"
    if quad == (0, 0, 1, 1):
        return "f2"
    if quad == (0, 1, 1, 1):
        return "f_or"
    if quad == (0, 0, 0, 1):
        return "f_and"
    raise ValueError("restriction is not monotone: %r" % (quad,))


def _exact_prob(tt, p):
    k = _n_vars(tt)
    pc = _popcounts(k)
    w = p**pc * (1.0 - p) ** (k - pc)
    return float(np.dot(np.asarray(tt, dtype=np.float64), w))


def contraction_identity_check(tt, i1, i2, p):
    """Both sides of the pair-contraction identity: gluing i2 onto i1
    changes the win probability by p(1-p) (P[profile or] - P[profile and]).
    Asserts agreement to 1e-12 and returns (lhs, rhs)."""
    tt = np.asarray(tt)
    k = _n_vars(tt)
    if k > MAX_EXACT_VARS:
        raise BudgetError(
            "requested exact enumeration on %d variables, budget MAX_EXACT_VARS=%d"
            % (k, MAX_EXACT_VARS)
        )
    idx = np.arange(1 << k, dtype=np.int64)
    pc = _popcounts(k)
    w = p**pc * (1.0 - p) ** (k - pc)
    p_x = float(np.dot(tt.astype(np.float64), w))

    b1 = (idx >> i1) & 1
    b2 = (idx >> i2) & 1
    same = b1 == b2
    pc_glued = pc - b2
    w_glued = p**pc_glued * (1.0 - p) ** ((k - 1) - pc_glued)
    p_y = float(np.dot(tt[same].astype(np.float64), w_glued[same]))
    lhs = p_x - p_y

    base = idx[(b1 == 0) & (b2 == 0)]
    g00 = tt[base]
    g10 = tt[base | (1 << i1)]
    g01 = tt[base | (1 << i2)]
    g11 = tt[base | (1 << i1) | (1 << i2)]
    mono = (g00 <= g10) & (g00 <= g01) & (g10 <= g11) & (g01 <= g11)
    if not np.all(mono):
        raise ValueError("restriction is not monotone")
    pc_rest = pc[base] - 0  # base has both bits clear
    w_rest = p**pc_rest * (1.0 - p) ** ((k - 2) - pc_rest)
    p_or = float(w_rest[(g00 == 0) & (g10 == 1) & (g01 == 1) & (g11 == 1)].sum())
    p_and = float(w_rest[(g00 == 0) & (g10 == 0) & (g01 == 0) & (g11 == 1)].sum())
    rhs = p * (1.0 - p) * (p_or - p_and)
    assert abs(lhs - rhs) <= 1e-12, (lhs, rhs)
    return lhs, rhs


def _glue_table(tt, p1, p2):
    """Identify variable at position p2 with the one at p1 (p1 < p2);
    the result has one variable fewer, positions above p2 shift down."""
    tt = np.asarray(tt)
    k = _n_vars(tt)
    m = np.arange(1 << (k - 1), dtype=np.int64)
    low = m & ((1 << p2) - 1)
    high = (m >> p2) << (p2 + 1)
    old = high | low
    old |= ((old >> p1) & 1) << p2
    return tt[old]


def verify_compar(tt, psi, p, variant="one-sets"):
    """Comparison inequality for a variable-gluing map psi.

    Hypothesis: psi is injective on every minimal one-set (or zero-set
    for the reversed variant).  When it holds, gluing can only lower
    (raise, for zero-sets) the win probability.  The gluing chain is
    decomposed into pair contractions in lexicographic order; endpoints
    do not depend on that order.
    """
    tt = np.asarray(tt)
    k = _n_vars(tt)
    if k > MAX_EXACT_VARS:
        raise BudgetError(
            "requested exact enumeration on %d variables, budget MAX_EXACT_VARS=%d"
            % (k, MAX_EXACT_VARS)
        )
    psi = np.asarray(psi)
    if psi.shape != (k,):
        raise ValueError("psi must map all %d variables" % k)
    if variant not in ("one-sets", "zero-sets"):
        raise ValueError("variant must be 'one-sets' or 'zero-sets'")

    mins = minimal_one_sets(tt) if variant == "one-sets" else minimal_zero_sets(tt)
    for m in mins:
        members = _mask_bits(int(m), k)
        if len({int(psi[j]) for j in members}) != len(members):
            return {
                "claim": "gluing comparison (%s)" % variant,
                "instance": "%d variables, %d targets" % (k, len(set(psi.tolist()))),
                "status": "inapplicable",
                "witness": {"minimal_set": members,
                            "images": [int(psi[j]) for j in members]},
            }

    labels = list(range(k))
    cur = tt
    chain = []
    probs = [_exact_prob(cur, p)]
    for target in sorted(set(psi.tolist())):
        group = [j for j in range(k) if psi[j] == target]
        keep = group[0]
        for drop in group[1:]:
            p1 = labels.index(keep)
            p2 = labels.index(drop)
            if p1 > p2:
                p1, p2 = p2, p1
            cur = _glue_table(cur, p1, p2)
            del labels[p2]
            chain.append((keep, drop))
            probs.append(_exact_prob(cur, p))
    lhs, rhs = probs[-1], probs[0]
    holds = lhs <= rhs + 1e-12 if variant == "one-sets" else lhs >= rhs - 1e-12
    return {
        "claim": "gluing comparison (%s)" % variant,
        "instance": "%d variables, %d targets" % (k, len(set(psi.tolist()))),
        "status": "verified" if holds else "violated",
        "witness": None if holds else {"glued": lhs, "original": rhs},
        "chain": chain,
        "probs": probs,
        "note": "pair gluings in lexicographic order; endpoint values are order independent",
    }


def _check_cover_once(z, side):
    """Every own-side word among the outcomes appears exactly once."""
    words = [v[side] for v in z]
    return len(set(words)) == len(words)


def verify_tree_property(n):
    """On the doubly tree-branching game, every Alice strategy's outcome
    set hits each Bob word exactly once (and symmetrically).  Families
    are built by subtree recursion with deduplication; an oversized
    cross product at an expansion vertex is verified factorwise, which
    is sound because the two subtrees own disjoint word sets."""
    if n > 4:
        raise BudgetError("requested n=%d, budget for tree-property checks is 4" % n)
    spec = GameSpec("AB", n)
    report_counts = {}
    status = "verified"
    witness = None

    for player, side in ((ALICE, 1), (BOB, 0)):
        # side: Alice strategies must cover every b-word once (index 1)
        families_seen = [0]

        def expected_size(d):
            return 1 << sum(1 for dd in range(d, spec.depth) if turn(spec, dd) != player)

        def _verify_family(f, d):
            nonlocal status, witness
            families_seen[0] += len(f)
            want = expected_size(d)
            for z in f:
                if len(z) != want or not _check_cover_once(z, side):
                    status = "violated"
                    if witness is None:
                        witness = sorted(str(v) for v in z)

        def fam(v, d):
            if d == spec.depth:
                return [frozenset({v})]
            c1, c2 = children(spec, v)
            f1 = fam(c1, d + 1)
            f2 = fam(c2, d + 1)
            if turn(spec, d) == player:
                if f1 is None or f2 is None:
                    raise AssertionError("factored family under a choice vertex")
                return list(set(f1) | set(f2))
            if f1 is None or f2 is None:
                return None
            if len(f1) * len(f2) > MAX_FAMILY_CROSS:
                _verify_family(f1, d + 1)
                _verify_family(f2, d + 1)
                return None
            return [a | b for a in f1 for b in f2]

        top = fam(root(spec), 0)
        if top is not None:
            _verify_family(top, 0)
            report_counts["%s_families" % player] = len(top)
        else:
            report_counts["%s_families" % player] = "factored"
        report_counts["%s_checked" % player] = families_seen[0]

    return {
        "claim": "strategy outcome sets are perfect matchings of words",
        "instance": "tree pair, n=%d" % n,
        "status": status,
        "witness": witness,
        "counts": report_counts,
    }


def random_monotone_table(k, n_sets, rng):
    """Test utility: union of random minimal sets, closed upward."""
    tt = np.zeros(1 << k, dtype=np.uint8)
    idx = np.arange(1 << k, dtype=np.int64)
    for _ in range(n_sets):
        mask = 0
        for j in range(k):
            if rng.random() < 0.4:
                mask |= 1 << j
        tt |= (idx & mask) == mask
    return tt.astype(np.uint8)

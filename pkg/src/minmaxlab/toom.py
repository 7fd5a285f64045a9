"""Toom cycles: closed walks that certify an Alice win.

A cycle climbs from the root to the outcome level and back, alternating
step types under the pair rules; when every outcome it visits carries a
zero, the cycle is present and witnesses that a winning Alice strategy
could exist.  This module has the validator, the step census, the
constructor that turns an Alice strategy into a cycle by level splicing
and loop erasure, exhaustive enumeration, Peierls tail bounds, and the
search for present cycles that do not come from a winning strategy.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import engine
from .errors import BudgetError
from .topology import (
    ALICE,
    TREE,
    GameSpec,
    child,
    children,
    make_spec,
    outcome_count,
    outcome_index,
    outcomes,
    parse_vertex,
    root,
    turn,
    vertex_depth,
    vertex_text,
)

STEP_TYPES = ("su", "sd", "ru", "rd", "lu", "ld")
_UP = frozenset(("su", "ru", "lu"))

# allowed continuations after a step, split by whether the step ends at
# an internal vertex or at an outcome
_NEXT_INTERNAL = {
    "su": ("ru",),
    "ru": ("su",),
    "lu": ("su",),
    "sd": ("rd", "ld"),
    "rd": ("sd",),
    "ld": ("lu",),
}
_NEXT_OUTCOME = {
    "su": ("sd",),
    "ru": ("rd", "ld"),
    "lu": ("rd", "ld"),
}

MAX_ENUM_M = 4
MAX_SEARCH_OUTCOMES = 25


@dataclass(frozen=True)
class ToomCycle:
    spec: GameSpec
    vertices: tuple
    steps: tuple


@dataclass(frozen=True)
class CycleCensus:
    counts: dict
    m: int
    outcomes: int
    length: int


def classify_step(spec, v, w):
    """The step type of the edge v -> w: straight for Alice's coordinate,
    right/left for Bob's 1 and 2 moves, up when depth increases."""
    dv, dw = vertex_depth(v), vertex_depth(w)
    if abs(dv - dw) != 1:
        raise ValueError("%r -> %r is not an edge" % (v, w))
    up = dw > dv
    low, high = (v, w) if up else (w, v)
    move = None
    if vertex_depth(low) < spec.depth:
        for k in (1, 2):
            if child(spec, low, k) == high:
                move = k
                break
    if move is None:
        raise ValueError("%r -> %r is not an edge" % (v, w))
    if turn(spec, vertex_depth(low)) == ALICE:
        return "su" if up else "sd"
    if move == 1:
        return "ru" if up else "ld"
    return "lu" if up else "rd"


def validate(spec, cycle):
    """None when the walk is a valid cycle, else (step index, reason) for
    the first violation.  Step types are re-derived from the vertices and
    cross-checked against the stored labels."""
    vs = list(cycle.vertices)
    steps = list(cycle.steps)
    l = len(steps)
    if len(vs) != l + 1:
        return (0, "walk has %d vertices for %d steps" % (len(vs), l))
    r = root(spec)
    if vs[0] != r:
        return (0, "walk must start at the root")
    if vs[-1] != r:
        return (l, "walk must end at the root")
    if l == 0:
        if spec.depth == 0:
            return None
        return (0, "empty walk in a graph of positive depth")

    for k in range(1, l + 1):
        try:
            t = classify_step(spec, vs[k - 1], vs[k])
        except ValueError:
            return (k, "vertices %r -> %r are not adjacent" % (vs[k - 1], vs[k]))
        if t != steps[k - 1]:
            return (k, "step labeled %s but the edge is %s" % (steps[k - 1], t))

    if steps[0] not in ("su", "ru"):
        return (1, "first step must be su or ru")
    if steps[-1] not in ("sd", "rd"):
        return (l, "last step must be sd or rd")

    for k in range(1, l):
        at_out = vertex_depth(vs[k]) == spec.depth
        rules = _NEXT_OUTCOME if at_out else _NEXT_INTERNAL
        allowed = rules.get(steps[k - 1], ())
        if steps[k] not in allowed:
            where = "an outcome" if at_out else "an internal vertex"
            return (k, "pair %s -> %s not allowed at %s" % (steps[k - 1], steps[k], where))

    seen = set()
    for k in range(l + 1):
        if vertex_depth(vs[k]) == spec.depth:
            if vs[k] in seen:
                return (k, "outcome %r visited twice" % (vs[k],))
            seen.add(vs[k])

    last_tag = {}
    for k in range(l + 1):
        if vertex_depth(vs[k]) == spec.depth:
            continue
        if k == 0:
            tag = 0
        elif k == l:
            tag = 2
        else:
            up_in = steps[k - 1] in _UP
            up_out = steps[k] in _UP
            if up_in and not up_out:
                return (k, "local maximum at an internal vertex")
            tag = 0 if (up_in and up_out) else (1 if up_out else 2)
        prev = last_tag.get(vs[k], -1)
        if tag <= prev:
            return (k, "revisit of %r out of order" % (vs[k],))
        last_tag[vs[k]] = tag
    return None


def census(cycle):
    """Step counts and the cycle size m.  Alice-start cycles carry m of
    each type over 6m steps; Bob-start cycles carry 2m straight steps of
    each direction and m of the others over 8m steps; both visit m+1
    outcomes.  A count pattern outside these laws means the validator let
    a malformed walk through."""
    bad = validate(cycle.spec, cycle)
    if bad is not None:
        raise ValueError("cycle does not validate at step %d: %s" % bad)
    counts = {t: 0 for t in STEP_TYPES}
    for t in cycle.steps:
        counts[t] += 1
    n_out = sum(1 for v in cycle.vertices if vertex_depth(v) == cycle.spec.depth)
    m = n_out - 1
    l = len(cycle.steps)
    if cycle.spec.first_mover == ALICE:
        ok = all(counts[t] == m for t in STEP_TYPES) and l == 6 * m
    else:
        ok = (
            all(counts[t] == m for t in ("ru", "rd", "lu", "ld"))
            and counts["su"] == 2 * m
            and counts["sd"] == 2 * m
            and l == 8 * m
        )
    if not ok:
        raise AssertionError(
            "census contradiction: counts %r, length %d, outcomes %d" % (counts, l, n_out)
        )
    return CycleCensus(counts=counts, m=m, outcomes=n_out, length=l)


def present(cycle, x):
    """1 iff every outcome the cycle visits carries a zero in x."""
    x = np.asarray(x)
    spec = cycle.spec
    for v in cycle.vertices:
        if vertex_depth(v) == spec.depth and x[outcome_index(spec, v)]:
            return 0
    return 1


def loop_erase(spec, vertices, boundary_depth=None):
    """Remove the segment between the earliest repeated boundary visit
    and its first occurrence, repeatedly, until all boundary visits are
    distinct.  Leftmost segment first; endpoints are preserved."""
    bd = spec.depth if boundary_depth is None else boundary_depth
    vs = list(vertices)
    changed = True
    while changed:
        changed = False
        first = {}
        for k, v in enumerate(vs):
            if vertex_depth(v) != bd:
                continue
            if v in first:
                vs = vs[: first[v] + 1] + vs[k + 1 :]
                changed = True
                break
            first[v] = k
    return vs


def construct_from_strategy(spec, sigma):
    """Build a cycle from an Alice strategy by level induction: splice
    the strategy move (straight up and back) at Alice depths, both Bob
    moves (right up, back, left up, back) at Bob depths, loop-erasing
    repeated boundary visits after every level.  The outcome set of the
    result is contained in the strategy's outcome set."""
    if spec.b_kind == TREE:
        raise ValueError("cycle construction needs a lattice b-side (Ab, ab, Ab', ab')")
    if hasattr(sigma, "player") and sigma.player != ALICE:
        raise ValueError("cycles are built from Alice strategies")
    moves = sigma.moves if hasattr(sigma, "moves") else sigma
    walk = [root(spec)]
    for d in range(spec.depth):
        mover = turn(spec, d)
        spliced = []
        for v in walk:
            if vertex_depth(v) != d:
                spliced.append(v)
            elif mover == ALICE:
                c = child(spec, v, moves[v])
                spliced += [v, c, v]
            else:
                c1, c2 = children(spec, v)
                spliced += [v, c1, v, c2, v]
        walk = loop_erase(spec, spliced, boundary_depth=d + 1)
    steps = tuple(classify_step(spec, walk[k], walk[k + 1]) for k in range(len(walk) - 1))
    cyc = ToomCycle(spec=spec, vertices=tuple(walk), steps=steps)
    bad = validate(spec, cyc)
    if bad is not None:
        raise AssertionError("constructed cycle fails validation at step %d: %s" % bad)
    return cyc


def random_strategy(spec, seed):
    """A uniformly random positional Alice strategy on reachable vertices."""
    rng = np.random.default_rng(seed)
    moves = {}
    reached = {root(spec)}
    for d in range(spec.depth):
        nxt = set()
        if turn(spec, d) == ALICE:
            for v in sorted(reached):
                k = int(rng.integers(1, 3))
                moves[v] = k
                nxt.add(child(spec, v, k))
        else:
            for v in reached:
                nxt.update(children(spec, v))
        reached = nxt
    return engine.Strategy(spec=spec, player=ALICE, moves=moves)


class _OutOfBudget(Exception):
    pass


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n):
        self.left = n

    def spend(self):
        if self.left <= 0:
            raise _OutOfBudget
        self.left -= 1


def _step_targets(spec, v, d, t):
    if t in _UP:
        if d >= spec.depth:
            return ()
        mover = turn(spec, d)
        if t == "su":
            return tuple(children(spec, v)) if mover == ALICE else ()
        if mover == ALICE:
            return ()
        return (child(spec, v, 1),) if t == "ru" else (child(spec, v, 2),)
    if d == 0:
        return ()
    mover = turn(spec, d - 1)
    a, b = v
    if t == "sd":
        if mover != ALICE:
            return ()
        if spec.a_kind == TREE:
            return ((a[:-1], b),)
        i, j = a
        out = []
        if i:
            out.append(((i - 1, j), b))
        if j:
            out.append(((i, j - 1), b))
        return tuple(out)
    if mover == ALICE:
        return ()
    if spec.b_kind == TREE:
        want = "1" if t == "ld" else "2"
        return ((a, b[:-1]),) if b and b[-1] == want else ()
    i, j = b
    if t == "ld":
        return ((a, (i - 1, j)),) if i else ()
    return ((a, (i, j - 1)),) if j else ()


def _dfs_cycles(spec, collect, zeros=None, max_outcomes=None, budget=None):
    """Depth-first walk over all valid cycles.  zeros restricts outcome
    visits to that vertex set; collect(cycle) may return True to stop."""
    r = root(spec)
    depth = spec.depth
    cap = max_outcomes if max_outcomes is not None else outcome_count(spec)
    if zeros is not None:
        cap = min(cap, len(zeros))
    path = [r]
    steps = []
    visited_out = set()
    last_tag = {r: 0}
    found = [False]

    def rec(v, d, last):
        if found[0]:
            return
        rules = _NEXT_OUTCOME[last] if d == depth else _NEXT_INTERNAL[last]
        for t in rules:
            for w in _step_targets(spec, v, d, t):
                if budget is not None:
                    budget.spend()
                tag_saved = _leave_tag(v, d, last, t)
                if tag_saved is _SKIP:
                    continue
                dw = d + 1 if t in _UP else d - 1
                if dw == depth:
                    if w in visited_out or (zeros is not None and w not in zeros):
                        _restore(v, tag_saved)
                        continue
                    if len(visited_out) + 1 > cap:
                        _restore(v, tag_saved)
                        continue
                    visited_out.add(w)
                path.append(w)
                steps.append(t)
                if dw == 0:
                    if t in ("sd", "rd"):
                        cyc = ToomCycle(spec=spec, vertices=tuple(path), steps=tuple(steps))
                        if collect(cyc):
                            found[0] = True
                    else:
                        rec(w, dw, t)
                else:
                    rec(w, dw, t)
                steps.pop()
                path.pop()
                if dw == depth:
                    visited_out.discard(w)
                _restore(v, tag_saved)
                if found[0]:
                    return

    _MISSING = object()
    _SKIP = object()

    def _leave_tag(v, d, last, t):
        # finalize v's visit tag now that the outgoing step is chosen
        if d == depth:
            return _MISSING
        if len(steps) == 0:
            return _MISSING  # start of the walk, root tag preset
        up_in = last in _UP
        up_out = t in _UP
        tag = 0 if (up_in and up_out) else (1 if up_out else 2)
        prev = last_tag.get(v, -1)
        if tag <= prev:
            return _SKIP
        saved = last_tag.get(v, _MISSING)
        last_tag[v] = tag
        return (v, saved)

    def _restore(v, token):
        if token is _MISSING or token is _SKIP:
            return
        vv, saved = token
        if saved is _MISSING:
            del last_tag[vv]
        else:
            last_tag[vv] = saved

    for t in ("su", "ru"):
        for w in _step_targets(spec, r, 0, t):
            if budget is not None:
                budget.spend()
            path.append(w)
            steps.append(t)
            if vertex_depth(w) == depth:
                if zeros is None or w in zeros:
                    visited_out.add(w)
                    rec(w, 1, t)
                    visited_out.discard(w)
            else:
                rec(w, 1, t)
            steps.pop()
            path.pop()
            if found[0]:
                return


def enumerate_cycles(spec, m_max):
    """Exact count of valid cycles by size m (outcomes minus one), for
    all m up to m_max, with the counting bound asserted per family."""
    if m_max > MAX_ENUM_M:
        raise BudgetError(
            "requested enumeration to m=%d, budget MAX_ENUM_M=%d" % (m_max, MAX_ENUM_M)
        )
    if spec.b_kind == TREE:
        raise ValueError("cycle enumeration needs a lattice b-side (Ab, ab, Ab', ab')")
    counts = {}

    def tally(cyc):
        m = sum(1 for v in cyc.vertices if vertex_depth(v) == spec.depth) - 1
        if m <= m_max:
            counts[m] = counts.get(m, 0) + 1
        return False

    _dfs_cycles(spec, tally, max_outcomes=m_max + 1)
    exponent = {("tree", ALICE): 3, ("lattice", ALICE): 4}.get(
        (spec.a_kind, spec.first_mover), 4 if spec.a_kind == TREE else 6
    )
    for m, c in counts.items():
        if c > 1 << (exponent * m):
            raise AssertionError(
                "count M_%d = %d exceeds 2^%d" % (m, c, exponent * m)
            )
    return counts


def peierls_tail(family, n, p):
    """Closed-form geometric tail bounding the chance that some cycle of
    size at least n is present: (1-p) (r(1-p))^n / (1 - r(1-p)).  Returns
    the string "vacuous" when the ratio reaches 1."""
    rates = {"Ab": 8, "ab": 16, "Ab'": 16, "ab'": 64}
    if family not in rates:
        raise ValueError("no tail bound for family %r" % (family,))
    # decimal p values stay exact rationals here, so frozen decimal
    # reference values reproduce to the last bit
    pq = Fraction(str(p))
    q = rates[family] * (1 - pq)
    if q >= 1:
        return "vacuous"
    return float((1 - pq) * q**n / (1 - q))


def find_false_positive(family, n, budget, seed):
    """Search for an assignment where a cycle is present although Bob
    wins.  Exhaustive in index order when the assignment space is small,
    seeded random probing otherwise.  None when the budget runs out or
    the space is exhausted without a witness."""
    spec = family if isinstance(family, GameSpec) else make_spec(family, n)
    if spec.b_kind == TREE:
        raise ValueError("cycle search needs a lattice b-side (Ab, ab, Ab', ab')")
    K = outcome_count(spec)
    if K > MAX_SEARCH_OUTCOMES:
        raise BudgetError(
            "requested search over %d outcomes, budget MAX_SEARCH_OUTCOMES=%d"
            % (K, MAX_SEARCH_OUTCOMES)
        )
    outs = outcomes(spec)
    shifts = np.arange(K, dtype=np.int64)
    n_x = 1 << K
    exhaustive = n_x <= 65536
    if exhaustive:
        masks = range(n_x)
    else:
        rng = np.random.default_rng(seed)
        masks = (int(rng.integers(0, n_x)) for _ in range(budget))
    bud = _Budget(budget)

    for mask in masks:
        x = ((mask >> shifts) & 1).astype(np.uint8)
        if int(x.sum()) > K - (n + 1):
            continue
        if engine.eval_L(spec, x) != 1:
            continue
        zeros = {outs[j] for j in range(K) if not x[j]}
        hit = []

        def grab(cyc):
            hit.append(cyc)
            return True

        try:
            _dfs_cycles(spec, grab, zeros=zeros, budget=bud)
        except _OutOfBudget:
            return None
        if hit:
            return (x, hit[0])
    return None


def cycle_to_json(cycle):
    return {
        "spec": {"family": cycle.spec.name, "rounds": cycle.spec.rounds},
        "vertices": [vertex_text(v) for v in cycle.vertices],
        "steps": list(cycle.steps),
    }


def cycle_from_json(data):
    spec = make_spec(data["spec"]["family"], int(data["spec"]["rounds"]))
    vs = tuple(parse_vertex(spec, s) for s in data["vertices"])
    return ToomCycle(spec=spec, vertices=vs, steps=tuple(data["steps"]))

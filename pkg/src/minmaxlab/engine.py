"""Evaluation engines for the four game families.

Everything here works on one shared representation: the leaf level of a
game is a flat vector indexed by ``vertex_index`` and a game evaluation
is a sequence of in-place level reductions (a "sweep plan").  On top of
that sit a bit-parallel Monte Carlo estimator (64 replicas per machine
word), brute-force enumeration with popcount binning, the scalar
recursion for the doubly-branching game, an exact level distribution
pushforward for small leaf counts, and strategy extraction by backward
induction.
"""

import math
import statistics
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import backend
from .errors import BudgetError
from .topology import (
    ALICE,
    TREE,
    GameSpec,
    children,
    level,
    level_shape,
    outcome_count,
    outcome_index,
    root,
    turn,
    vertex_depth,
)

# Hard budgets.  Level buffers are uint64 words, one per leaf.
MAX_LEVEL_WORDS = 1 << 25
MAX_BRUTE_OUTCOMES = 25
MAX_DP_OUTCOMES = 20


@dataclass(frozen=True)
class SweepPlan:
    """Reduction schedule from the leaf level to the root.

    kinds[s]: 0 tree fold on the a axis, 1 slide on the a axis,
              2 tree fold on the b axis, 3 slide on the b axis.
    ands[s]:  1 when the mover is Alice (AND / max), 0 for Bob (OR / min).
    """

    na: int
    nb: int
    kinds: np.ndarray
    ands: np.ndarray
    n_leaves: int


_PLAN_CACHE = {}


def sweep_plan(spec):
    plan = _PLAN_CACHE.get(spec)
    if plan is not None:
        return plan
    depth = spec.depth
    kinds = np.empty(depth, dtype=np.uint8)
    ands = np.empty(depth, dtype=np.uint8)
    for s, d in enumerate(range(depth, 0, -1)):
        mover = turn(spec, d - 1)
        if mover == ALICE:
            kinds[s] = 0 if spec.a_kind == TREE else 1
            ands[s] = 1
        else:
            kinds[s] = 2 if spec.b_kind == TREE else 3
            ands[s] = 0
    na, nb = level_shape(spec, depth)
    plan = SweepPlan(na, nb, kinds, ands, na * nb)
    _PLAN_CACHE[spec] = plan
    return plan


def sweep_values(spec, leaves, payoff=False):
    """Reduce leaf values to root values, vectorized over leading axes.

    leaves has shape (..., n_leaves).  With payoff=False the reductions
    are AND (Alice) / OR (Bob) on integer 0-1 values; with payoff=True
    they are max (Alice) / min (Bob) on floats.
    """
    plan = sweep_plan(spec)
    arr = np.asarray(leaves)
    if arr.shape[-1] != plan.n_leaves:
        raise ValueError(
            "expected %d leaves, got %d" % (plan.n_leaves, arr.shape[-1])
        )
    cur = arr.reshape(arr.shape[:-1] + (plan.na, plan.nb))
    for kind, is_and in zip(plan.kinds, plan.ands):
        if kind == 0:
            a, b = cur[..., 0::2, :], cur[..., 1::2, :]
        elif kind == 1:
            a, b = cur[..., :-1, :], cur[..., 1:, :]
        elif kind == 2:
            a, b = cur[..., :, 0::2], cur[..., :, 1::2]
        else:
            a, b = cur[..., :, :-1], cur[..., :, 1:]
        if payoff:
            cur = np.maximum(a, b) if is_and else np.minimum(a, b)
        else:
            cur = (a & b) if is_and else (a | b)
    return cur[..., 0, 0]


def eval_L(spec, x):
    """Evaluate the game value of one full leaf assignment (0 or 1)."""
    arr = np.asarray(x, dtype=np.uint8)
    return int(sweep_values(spec, arr))


def eval_L_packed(spec, words):
    """Evaluate 64 assignments at once; bit r of the result is the value
    of the assignment stored in bit r of each leaf word."""
    plan = sweep_plan(spec)
    buf = np.array(words, dtype=np.uint64)
    if buf.shape != (plan.n_leaves,):
        raise ValueError("expected %d leaf words" % plan.n_leaves)
    return backend.sweep_packed(buf, plan.na, plan.nb, plan.kinds, plan.ands)


def sample_leaf_words(spec, p, seed, batch, out=None):
    """Draw one batch of 64 i.i.d. Bernoulli(p) replicas, packed.

    Word k holds leaf k across the batch: replica (64*batch + r) sits in
    bit r.  Deterministic in (seed, batch), independent of call order.
    """
    plan = sweep_plan(spec)
    return backend.sample_packed_bits(
        backend.bits_seed(seed), p, plan.n_leaves, batch, out
    )


def sample_leaf_bits(spec, p, seed, replica):
    """The single leaf assignment of one replica, as a uint8 vector."""
    words = sample_leaf_words(spec, p, seed, replica >> 6)
    lane = np.uint64(replica & 63)
    return ((words >> lane) & np.uint64(1)).astype(np.uint8)


@dataclass(frozen=True)
class WinProbEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    replicas: int
    seed: int

    @property
    def halfwidth(self):
        return 0.5 * (self.ci_high - self.ci_low)


def wilson_interval(successes, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = statistics.NormalDist().inv_cdf(0.5 * (1.0 + confidence))
    n = float(trials)
    ph = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (ph + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def mc_win_prob(spec, p, replicas, seed, confidence=0.95):
    """Bit-parallel Monte Carlo estimate of P[L = 1] with a Wilson CI."""
    if replicas <= 0:
        raise ValueError("replicas must be positive")
    plan = sweep_plan(spec)
    if plan.n_leaves > MAX_LEVEL_WORDS:
        raise BudgetError(
            "requested %d level words, budget MAX_LEVEL_WORDS=%d"
            % (plan.n_leaves, MAX_LEVEL_WORDS)
        )
    if p == 0.0 or p == 1.0:
        # degenerate leaves make L deterministic
        v = float(p)
        return WinProbEstimate(v, v, v, replicas, seed)
    bs = backend.bits_seed(seed)
    buf = np.empty(plan.n_leaves, dtype=np.uint64)
    n_batches = (replicas + 63) >> 6
    rem = replicas & 63
    wins = 0
    for b in range(n_batches):
        backend.sample_packed_bits(bs, p, plan.n_leaves, b, buf)
        word = backend.sweep_packed(buf, plan.na, plan.nb, plan.kinds, plan.ands)
        if rem and b == n_batches - 1:
            word &= (1 << rem) - 1
        wins += word.bit_count() if isinstance(word, int) else int(word).bit_count()
    est = wins / replicas
    lo, hi = wilson_interval(wins, replicas, confidence)
    return WinProbEstimate(est, lo, hi, replicas, seed)


_BRUTE_CACHE = {}


def _brute_counts(spec):
    """counts[c] = #assignments with c ones and L = 1 (p independent)."""
    counts = _BRUTE_CACHE.get(spec)
    if counts is not None:
        return counts
    K = outcome_count(spec)
    total = 1 << K
    shifts = np.arange(K, dtype=np.int64)
    counts = np.zeros(K + 1, dtype=np.int64)
    chunk = 1 << 15
    for start in range(0, total, chunk):
        vs = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((vs[:, None] >> shifts) & 1).astype(np.uint8)
        roots = sweep_values(spec, bits)
        won = roots.astype(bool)
        if won.any():
            pc = bits[won].sum(axis=1)
            counts += np.bincount(pc, minlength=K + 1)
    _BRUTE_CACHE[spec] = counts
    return counts


def brute_force_win_prob(spec, p, exact=False):
    """P[L = 1] by enumerating all 2^K leaf assignments.

    Assignment v assigns bit j of v to leaf j.  With exact=True the
    result is a Fraction (p is converted exactly), limited to K <= 16.
    """
    K = outcome_count(spec)
    if K > MAX_BRUTE_OUTCOMES:
        raise BudgetError(
            "requested 2^%d assignments, budget MAX_BRUTE_OUTCOMES=%d"
            % (K, MAX_BRUTE_OUTCOMES)
        )
    counts = _brute_counts(spec)
    if exact:
        if K > 16:
            raise BudgetError(
                "requested exact mode with %d outcomes, budget is 16" % K
            )
        fp = Fraction(p)
        fq = 1 - fp
        return sum(
            int(c) * fp**i * fq ** (K - i) for i, c in enumerate(counts) if c
        )
    cs = np.arange(K + 1)
    return float(np.sum(counts * p**cs * (1.0 - p) ** (K - cs)))


def ab_tree_recursion(n, p):
    """Win probability of the doubly tree-branching game by the scalar
    recursion: per round q <- 1 - (1-q)^2 (OR level) then q <- q^2 (AND
    level), starting from q = p.  Accepts a scalar or an array of p."""
    q = np.asarray(p, dtype=np.float64)
    scalar = q.ndim == 0
    q = np.atleast_1d(q).astype(np.float64).copy()
    for _ in range(n):
        q = 1.0 - (1.0 - q) ** 2
        q = q * q
    return float(q[0]) if scalar else q


def exact_win_prob_dp(spec, p):
    """Exact P[L = 1] by pushing the leaf-level product law through the
    sweep, compacting the distribution over level bit patterns after
    every step.  Needs outcome_count <= MAX_DP_OUTCOMES."""
    K = outcome_count(spec)
    if K > MAX_DP_OUTCOMES:
        raise BudgetError(
            "requested %d outcome cells, budget MAX_DP_OUTCOMES=%d"
            % (K, MAX_DP_OUTCOMES)
        )
    plan = sweep_plan(spec)
    idx = np.arange(1 << K, dtype=np.int64)
    pc = np.zeros(idx.shape[0], dtype=np.int64)
    for j in range(K):
        pc += (idx >> j) & 1
    weights = p**pc * (1.0 - p) ** (K - pc)
    cells = K
    ra, rb = plan.na, plan.nb
    for kind, is_and in zip(plan.kinds, plan.ands):
        bits = ((idx[:, None] >> np.arange(cells, dtype=np.int64)) & 1).astype(
            np.uint8
        )
        cur = bits.reshape(-1, ra, rb)
        if kind == 0:
            a, b = cur[:, 0::2, :], cur[:, 1::2, :]
            ra >>= 1
        elif kind == 1:
            a, b = cur[:, :-1, :], cur[:, 1:, :]
            ra -= 1
        elif kind == 2:
            a, b = cur[:, :, 0::2], cur[:, :, 1::2]
            rb >>= 1
        else:
            a, b = cur[:, :, :-1], cur[:, :, 1:]
            rb -= 1
        nxt = (a & b) if is_and else (a | b)
        cells = ra * rb
        flat = nxt.reshape(-1, cells).astype(np.int64)
        masks = flat @ (np.int64(1) << np.arange(cells, dtype=np.int64))
        weights = np.bincount(masks, weights=weights, minlength=1 << cells)
        idx = np.arange(1 << cells, dtype=np.int64)
    return float(weights[1])


def exact_win_prob_ab(n, p):
    """Exact win probability of the doubly lattice game, small n."""
    return exact_win_prob_dp(GameSpec("ab", n, ALICE), p)


def game_values(spec, x):
    """Backward-induction value of every vertex under assignment x."""
    arr = np.asarray(x, dtype=np.uint8)
    if arr.shape != (outcome_count(spec),):
        raise ValueError("expected %d leaf bits" % outcome_count(spec))
    vals = {}
    for v in level(spec, spec.depth):
        vals[v] = int(arr[outcome_index(spec, v)])
    for d in range(spec.depth - 1, -1, -1):
        mover = turn(spec, d)
        for v in level(spec, d):
            c1, c2 = children(spec, v)
            if mover == ALICE:
                vals[v] = vals[c1] & vals[c2]
            else:
                vals[v] = vals[c1] | vals[c2]
    return vals


@dataclass
class Strategy:
    """A full positional strategy for one player: a chosen move (1 or 2)
    at every vertex where that player is to move."""

    spec: GameSpec
    player: str
    moves: dict


def extract_strategy(spec, x, player):
    """Optimal strategy for `player` under assignment x, by backward
    induction.  Ties go to move 1.  Raises ValueError when the player
    does not win the game under x."""
    vals = game_values(spec, x)
    target = 0 if player == ALICE else 1
    if vals[root(spec)] != target:
        raise ValueError("player does not win this assignment")
    moves = {}
    for d in range(spec.depth):
        if turn(spec, d) != player:
            continue
        for v in level(spec, d):
            c1, c2 = children(spec, v)
            v1, v2 = vals[c1], vals[c2]
            if player == ALICE:
                moves[v] = 1 if v1 <= v2 else 2
            else:
                moves[v] = 1 if v1 >= v2 else 2
    return Strategy(spec, player, moves)


def strategy_outcome_set(strategy):
    """Outcome vertices reachable when the strategy owner follows the
    strategy and the opponent plays arbitrarily."""
    spec = strategy.spec
    cur = {root(spec)}
    for d in range(spec.depth):
        mover = turn(spec, d)
        nxt = set()
        for v in cur:
            cs = children(spec, v)
            if mover == strategy.player:
                nxt.add(cs[strategy.moves[v] - 1])
            else:
                nxt.update(cs)
        cur = nxt
    return cur


def sample_optimal_payoff(spec, replicas, seed):
    """Root payoffs of `replicas` games with i.i.d. uniform leaf payoffs
    under optimal play (max for Alice, min for Bob).  P[L=1 at p] equals
    P[root payoff <= p]."""
    if replicas <= 0:
        raise ValueError("replicas must be positive")
    plan = sweep_plan(spec)
    if plan.n_leaves > MAX_LEVEL_WORDS:
        raise BudgetError(
            "requested %d payoff cells, budget MAX_LEVEL_WORDS=%d"
            % (plan.n_leaves, MAX_LEVEL_WORDS)
        )
    return backend.payoff_roots(
        backend.payoff_seed(seed),
        plan.n_leaves,
        plan.na,
        plan.nb,
        plan.kinds,
        plan.ands,
        replicas,
        0,
    )

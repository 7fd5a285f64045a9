"""Cellular-automaton view of game evaluation.

The leaf level of an Alice-first game, reshaped to a grid with the
a-side on axis 0, evolves to the root value under four local rules: at
odd times Bob's letter contracts axis 1, at even times Alice's letter
contracts axis 0.  Time t produces the level at depth 2n - t, so after
2n steps a single cell holds the game value.  Rules named by capital
letters pair cells (tree side, size halves), lowercase rules slide a
window of two (lattice side, size drops by one).  On bit grids Alice's
rules are AND and Bob's are OR; on real-valued grids they are max and
min, which commutes with thresholding: cell <= p after a max step iff
both inputs were <= p.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import BudgetError
from .topology import ALICE, FAMILIES, level_shape, outcome_count

MAX_SNAPSHOT_CELLS = 1 << 22

RULES = ("A", "a", "B", "b")


def step(grid, rule, value_kind="bits"):
    """Apply one rule to a grid, returning the contracted grid."""
    g = np.asarray(grid)
    if g.ndim != 2:
        raise ValueError("grid must be 2-D")
    if rule == "A":
        if g.shape[0] % 2:
            raise ValueError("rule A needs an even row count, got %d" % g.shape[0])
        x, y = g[0::2, :], g[1::2, :]
        alice = True
    elif rule == "a":
        if g.shape[0] < 2:
            raise ValueError("rule a needs at least 2 rows, got %d" % g.shape[0])
        x, y = g[:-1, :], g[1:, :]
        alice = True
    elif rule == "B":
        if g.shape[1] % 2:
            raise ValueError("rule B needs an even column count, got %d" % g.shape[1])
        x, y = g[:, 0::2], g[:, 1::2]
        alice = False
    elif rule == "b":
        if g.shape[1] < 2:
            raise ValueError("rule b needs at least 2 columns, got %d" % g.shape[1])
        x, y = g[:, :-1], g[:, 1:]
        alice = False
    else:
        raise ValueError("unknown rule %r" % (rule,))
    if value_kind == "bits":
        return (x & y) if alice else (x | y)
    if value_kind == "real":
        return np.maximum(x, y) if alice else np.minimum(x, y)
    raise ValueError("value_kind must be 'bits' or 'real'")


@dataclass(frozen=True)
class RuleSchedule:
    """Which rule runs at even times and at odd times, and on what values.

    Defined for Alice-first games: at odd t the level at odd depth is
    produced by Bob's rule, at even t by Alice's.
    """

    even_rule: str
    odd_rule: str
    value_kind: str = "bits"

    def __post_init__(self):
        if self.even_rule not in ("A", "a"):
            raise ValueError("even rule must be A or a")
        if self.odd_rule not in ("B", "b"):
            raise ValueError("odd rule must be B or b")
        if self.value_kind not in ("bits", "real"):
            raise ValueError("value_kind must be 'bits' or 'real'")

    @classmethod
    def from_family(cls, family, value_kind="bits"):
        if family not in FAMILIES:
            raise ValueError("unknown family %r" % (family,))
        return cls(family[0], family[1], value_kind)

    def rule_at(self, t):
        return self.odd_rule if t % 2 else self.even_rule


def initial_grid(spec, x):
    """Leaf assignment as a grid: cell [i, j] is leaf index i*nb + j."""
    na, nb = level_shape(spec, spec.depth)
    arr = np.asarray(x)
    if arr.shape != (na * nb,):
        raise ValueError("expected %d leaf values" % (na * nb))
    return arr.reshape(na, nb)


def evolve_origin(spec, x):
    """Run the automaton to the end and return the origin cell value.

    Agrees with eval_L on every assignment (the rules are the level
    reductions in grid form).  Alice-first games only; the schedule has
    no primed form.
    """
    if spec.first_mover != ALICE:
        raise ValueError("rule schedules cover Alice-first games only")
    sched = RuleSchedule.from_family(spec.family)
    g = initial_grid(spec, np.asarray(x, dtype=np.uint8))
    for t in range(1, spec.depth + 1):
        g = step(g, sched.rule_at(t), "bits")
    if g.shape != (1, 1):
        raise AssertionError("automaton did not contract to the origin")
    return int(g[0, 0])


def snapshot_series(spec, seed, replica=0):
    """Real-valued evolution from i.i.d. uniform leaves.

    Returns [(t, grid)] for t = 0 .. 2n; grid t has the shape of the
    level at depth 2n - t.  The draw is a dedicated counter stream, so
    series are deterministic in (seed, replica).
    """
    if spec.first_mover != ALICE:
        raise ValueError("rule schedules cover Alice-first games only")
    cells = outcome_count(spec)
    if cells > MAX_SNAPSHOT_CELLS:
        raise BudgetError(
            "requested %d snapshot cells, budget MAX_SNAPSHOT_CELLS=%d"
            % (cells, MAX_SNAPSHOT_CELLS)
        )
    sched = RuleSchedule.from_family(spec.family, "real")
    u = backend.uniforms(backend.snapshot_seed(seed), replica * cells, cells)
    g = initial_grid(spec, u)
    series = [(0, g)]
    for t in range(1, spec.depth + 1):
        g = step(g, sched.rule_at(t), "real")
        series.append((t, g))
    return series

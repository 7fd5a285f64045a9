"""Random min-max games on product graphs.

Two players alternate moves on the product of two decision graphs (a
binary tree or the quadrant lattice per side); the leaves are i.i.d.
Bernoulli(p) and the root value is the alternating min-max.  The
package provides exact solvers, bit-parallel Monte Carlo, cycle
certificates for Alice wins, and threshold analysis, all behind one
CLI.
"""

__version__ = "0.1.0"

from .topology import ALICE, BOB, FAMILIES, GameSpec, make_spec
from .engine import (
    Strategy,
    WinProbEstimate,
    ab_tree_recursion,
    brute_force_win_prob,
    eval_L,
    exact_win_prob_ab,
    exact_win_prob_dp,
    game_values,
    mc_win_prob,
    sample_optimal_payoff,
)
from .columns import exact_win_prob_Ab, exact_win_prob_aB
from .toom import (
    ToomCycle,
    census,
    construct_from_strategy,
    enumerate_cycles,
    find_false_positive,
    peierls_tail,
    present,
    random_strategy,
    validate,
)
from .analysis import (
    InfluenceReport,
    ThresholdEstimate,
    WindowEstimate,
    bounds_report,
    critical_window,
    pivotal_influence,
    sweep,
    threshold_bisect,
    total_influence_check,
)
from .errors import BudgetError

"""Exact solvers built on column laws.

A column law is a probability vector over the 2^m subsets of an m-cell
column, index bit t = cell t.  Bob's move merges adjacent cells by OR
(the column shrinks by one), Alice's move replaces the column by the
coordinatewise AND of two independent copies (same height).  Pushing a
product law through n rounds of these maps gives exact win
probabilities for the mixed families in time polynomial in 2^n instead
of 2^(outcome count).
"""

import numpy as np
import scipy.sparse

from .errors import BudgetError

MAX_COLUMN_CELLS = 24
MAX_COLUMN_ROUNDS = 22


def _popcounts(m):
    idx = np.arange(1 << m, dtype=np.int64)
    pc = np.zeros(idx.shape[0], dtype=np.int64)
    for b in range(m):
        pc += (idx >> b) & 1
    return pc


def product_law(m, p):
    """i.i.d. Bernoulli(p) law on m cells."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_COLUMN_CELLS:
        raise BudgetError(
            "requested %d column cells, budget MAX_COLUMN_CELLS=%d"
            % (m, MAX_COLUMN_CELLS)
        )
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    pc = _popcounts(m)
    law = p**pc * (1.0 - p) ** (m - pc)
    assert abs(law.sum() - 1.0) < 1e-9
    return law


def _cells_of(law):
    m = int(np.asarray(law).shape[0]).bit_length() - 1
    if (1 << m) != np.asarray(law).shape[0]:
        raise ValueError("law length must be a power of two")
    return m


def density(law):
    """P[cell 0 = 1] under the law."""
    law = np.asarray(law)
    _cells_of(law)
    return float(law[1::2].sum())


def apply_Fb(law):
    """Bob's map: cell t of the new column is (old t) OR (old t+1)."""
    law = np.asarray(law, dtype=np.float64)
    m = _cells_of(law)
    if m < 2:
        raise ValueError("need at least 2 cells to merge")
    idx = np.arange(1 << m, dtype=np.int64)
    tgt = (idx | (idx >> 1)) & ((1 << (m - 1)) - 1)
    return np.bincount(tgt, weights=law, minlength=1 << (m - 1))


def upset_transform(vec):
    """g[S] = sum of vec over supersets of S."""
    v = np.array(vec, dtype=np.float64)
    m = _cells_of(v)
    for b in range(m):
        v = v.reshape(-1, 2, 1 << b)
        v[:, 0, :] += v[:, 1, :]
        v = v.reshape(-1)
    return v


def upset_inverse(vec):
    v = np.array(vec, dtype=np.float64)
    m = _cells_of(v)
    for b in range(m):
        v = v.reshape(-1, 2, 1 << b)
        v[:, 0, :] -= v[:, 1, :]
        v = v.reshape(-1)
    return v


def apply_FA(law):
    """Alice's map: the law of the AND of two independent copies.

    Superset sums turn independent AND into a pointwise square:
    g_new[S] = P[both copies contain S] = g[S]^2.
    """
    g = upset_transform(law)
    g *= g
    out = upset_inverse(g)
    # Moebius inversion leaves tiny negative dust
    np.clip(out, 0.0, None, out=out)
    return out


def law_to_csv(law):
    lines = ["index,probability"]
    for i, v in enumerate(np.asarray(law)):
        lines.append("%d,%s" % (i, repr(float(v))))
    return "\n".join(lines) + "\n"


def check_density_bounds(law, tol=1e-9):
    """Check the density relations of the four composite maps on `law`.

    Returns a report dict; on any violation the offending law is
    serialized into the report as CSV.
    """
    law = np.asarray(law, dtype=np.float64)
    d = density(law)
    d_fa = density(apply_FA(law))
    d_fb = density(apply_Fb(law))
    d_f = density(apply_FA(apply_Fb(law)))
    d_fhat = density(apply_Fb(apply_FA(law)))
    checks = [
        {"name": "FA_density_is_square", "lhs": d_fa, "rhs": d * d,
         "ok": abs(d_fa - d * d) <= tol},
        {"name": "Fb_density_at_most_doubled", "lhs": d_fb, "rhs": 2.0 * d,
         "ok": d_fb <= 2.0 * d + tol},
        {"name": "F_density_quadratic", "lhs": d_f, "rhs": 4.0 * d * d,
         "ok": d_f <= 4.0 * d * d + tol},
        {"name": "Fhat_density_quadratic", "lhs": d_fhat, "rhs": 2.0 * d * d,
         "ok": d_fhat <= 2.0 * d * d + tol},
    ]
    ok = all(c["ok"] for c in checks)
    return {"ok": ok, "checks": checks, "law_csv": None if ok else law_to_csv(law)}


def exact_win_prob_Ab(n, p):
    """Exact P[L = 1] for the tree-vs-lattice family: iterate Bob's
    merge then Alice's AND, starting from an (n+1)-cell product law."""
    if n > MAX_COLUMN_ROUNDS:
        raise BudgetError(
            "requested %d rounds, budget MAX_COLUMN_ROUNDS=%d"
            % (n, MAX_COLUMN_ROUNDS)
        )
    law = product_law(n + 1, p)
    for _ in range(n):
        law = apply_FA(apply_Fb(law))
    return density(law)


def exact_win_prob_aB(n, p):
    """Exact P[L = 1] for the lattice-vs-tree family, by flipping roles:
    track Alice's one-probabilities on the complemented board."""
    if n > MAX_COLUMN_ROUNDS:
        raise BudgetError(
            "requested %d rounds, budget MAX_COLUMN_ROUNDS=%d"
            % (n, MAX_COLUMN_ROUNDS)
        )
    law = product_law(n + 1, 1.0 - p)
    for _ in range(n):
        law = apply_Fb(apply_FA(law))
    return 1.0 - density(law)


# Vectorized-over-p variants.  Same maps, rows are p values; Bob's merge
# goes through a cached sparse scatter matrix because its index map is
# not surjective (bincount semantics, batched).

_FB_MATRICES = {}


def _fb_matrix(m):
    mat = _FB_MATRICES.get(m)
    if mat is None:
        idx = np.arange(1 << m, dtype=np.int64)
        tgt = (idx | (idx >> 1)) & ((1 << (m - 1)) - 1)
        mat = scipy.sparse.csr_matrix(
            (np.ones(idx.shape[0]), (idx, tgt)), shape=(1 << m, 1 << (m - 1))
        )
        _FB_MATRICES[m] = mat
    return mat


def _product_law_rows(m, ps):
    pc = _popcounts(m)
    ps = np.asarray(ps, dtype=np.float64)
    return ps[:, None] ** pc[None, :] * (1.0 - ps)[:, None] ** (m - pc)[None, :]


def _upset_rows(a, m, sign):
    for b in range(m):
        a = a.reshape(a.shape[0], -1, 2, 1 << b)
        if sign > 0:
            a[:, :, 0, :] += a[:, :, 1, :]
        else:
            a[:, :, 0, :] -= a[:, :, 1, :]
    return a.reshape(a.shape[0], -1)


def _apply_FA_rows(laws, m):
    g = _upset_rows(laws.copy(), m, +1)
    g *= g
    out = _upset_rows(g, m, -1)
    np.clip(out, 0.0, None, out=out)
    return out


def _grid(n, ps, hat, chunk=4):
    if n > MAX_COLUMN_ROUNDS:
        raise BudgetError(
            "requested %d rounds, budget MAX_COLUMN_ROUNDS=%d"
            % (n, MAX_COLUMN_ROUNDS)
        )
    ps = np.asarray(ps, dtype=np.float64)
    out = np.empty(ps.shape[0])
    for s in range(0, ps.shape[0], chunk):
        block = ps[s : s + chunk]
        m = n + 1
        laws = _product_law_rows(m, (1.0 - block) if hat else block)
        for _ in range(n):
            if hat:
                laws = _apply_FA_rows(laws, m)
                laws = laws @ _fb_matrix(m)
                m -= 1
            else:
                laws = laws @ _fb_matrix(m)
                m -= 1
                laws = _apply_FA_rows(laws, m)
        dens = laws[:, 1::2].sum(axis=1)
        out[s : s + chunk] = (1.0 - dens) if hat else dens
    return out


def exact_win_prob_Ab_grid(n, ps):
    """exact_win_prob_Ab over an array of p values."""
    return _grid(n, ps, hat=False)


def exact_win_prob_aB_grid(n, ps):
    """exact_win_prob_aB over an array of p values."""
    return _grid(n, ps, hat=True)

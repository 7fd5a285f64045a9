"""Pure-numpy implementations of the hot kernels.

This module mirrors _kernels.pyx exactly: same counter layout, same hash,
same reduction order.  Outputs are bit-for-bit identical to the compiled
versions (integer arithmetic throughout; the float sweep uses only exact
max/min operations), so either backend can serve any caller.
"""

import numpy as np

M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = np.float64(2.0**-53)


def hash_words(seed, ctrs):
    """SplitMix64-style finalizer of (seed + ctr * golden), vectorized."""
    z = np.uint64(seed) + np.asarray(ctrs, dtype=np.uint64) * _GOLDEN
    z = z ^ (z >> np.uint64(30))
    z = z * _MIX1
    z = z ^ (z >> np.uint64(27))
    z = z * _MIX2
    z = z ^ (z >> np.uint64(31))
    return z


def sample_packed_bits(seed, p64, p_full, n_leaves, batch, out):
    """64 packed Bernoulli(p) lanes per leaf word, batch `batch`.

    Lane r of word k is replica 64*batch + r.  Each lane compares a
    conceptual 64-bit uniform against p64 = floor(p * 2^64), computed
    most-significant-slice first with early exit once every lane's
    comparison is decided.  Only undecided words are rehashed, so the
    expected number of hash passes per word is ~7.3 regardless of order.
    """
    if p_full:
        out[:] = M64
        return
    ks = np.arange(n_leaves, dtype=np.uint64)
    base = (ks << np.uint64(32)) | np.uint64(batch << 7)
    res = np.zeros(n_leaves, dtype=np.uint64)
    eq = np.full(n_leaves, M64)
    idx = np.arange(n_leaves)
    for i in range(64):
        if idx.size == 0:
            break
        h = hash_words(seed, base[idx] | np.uint64(i))
        e = eq[idx]
        if (p64 >> (63 - i)) & 1:
            res[idx] |= e & ~h
            e = e & h
        else:
            e = e & ~h
        eq[idx] = e
        idx = idx[e != np.uint64(0)]
    out[:] = res


def sweep_packed(buf, na, nb, kinds, ands):
    """Fold a packed (na x nb) leaf level down to the root word.

    kinds per step: 0 = tree fold on the a-axis, 1 = lattice slide on the
    a-axis, 2 = tree fold on the b-axis, 3 = lattice slide on the b-axis.
    ands per step: 1 for AND (first mover), 0 for OR.
    """
    a = np.asarray(buf)[: na * nb].reshape(na, nb)
    for k, use_and in zip(kinds, ands):
        if k == 0:
            half = a.shape[0] >> 1
            x, y = a[0 : 2 * half : 2], a[1 : 2 * half : 2]
        elif k == 1:
            x, y = a[:-1], a[1:]
        elif k == 2:
            half = a.shape[1] >> 1
            x, y = a[:, 0 : 2 * half : 2], a[:, 1 : 2 * half : 2]
        else:
            x, y = a[:, :-1], a[:, 1:]
        a = (x & y) if use_and else (x | y)
    return int(a[0, 0])


def payoff_roots(seed, n_leaves, na, nb, kinds, amax, n_rep, rep0, out):
    """Optimal-payoff root values for replicas rep0 .. rep0 + n_rep - 1.

    Each replica draws i.i.d. uniform leaf payoffs (counter (k << 32) | s)
    and folds with max at the first mover's steps, min at the second's.
    Replicas are processed in small blocks to bound memory.
    """
    ks = np.arange(n_leaves, dtype=np.uint64) << np.uint64(32)
    block = max(1, (1 << 22) // max(1, n_leaves))
    for s0 in range(0, n_rep, block):
        s1 = min(s0 + block, n_rep)
        reps = np.arange(rep0 + s0, rep0 + s1, dtype=np.uint64)
        u = (hash_words(seed, ks[None, :] | reps[:, None]) >> np.uint64(11)).astype(np.float64) * _INV53
        a = u.reshape(-1, na, nb)
        for k, mx in zip(kinds, amax):
            if k == 0:
                half = a.shape[1] >> 1
                x, y = a[:, 0 : 2 * half : 2], a[:, 1 : 2 * half : 2]
            elif k == 1:
                x, y = a[:, :-1], a[:, 1:]
            elif k == 2:
                half = a.shape[2] >> 1
                x, y = a[:, :, 0 : 2 * half : 2], a[:, :, 1 : 2 * half : 2]
            else:
                x, y = a[:, :, :-1], a[:, :, 1:]
            a = np.maximum(x, y) if mx else np.minimum(x, y)
        out[s0:s1] = a[:, 0, 0]


def uniforms(seed, offset, count):
    """Plain uniform[0,1) draws at counters offset .. offset+count-1."""
    ctrs = np.arange(offset, offset + count, dtype=np.uint64)
    return (hash_words(seed, ctrs) >> np.uint64(11)).astype(np.float64) * _INV53

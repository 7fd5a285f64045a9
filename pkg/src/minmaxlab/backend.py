"""Backend selection: compiled kernels when available, numpy fallback otherwise.

Set MINMAXLAB_FORCE_FALLBACK=1 to ignore the compiled extension.  Both
implementations are deterministic functions of (seed, counter) so results
are identical regardless of which backend runs.
"""

import os
from fractions import Fraction

import numpy as np

from . import _fallback

_EXT = None
if os.environ.get("MINMAXLAB_FORCE_FALLBACK", "") != "1":
    try:
        from . import _kernels as _EXT
    except ImportError:
        _EXT = None

HAVE_EXT = _EXT is not None
BACKEND_NAME = "cython" if HAVE_EXT else "numpy"

_M64 = (1 << 64) - 1


def _hash_u64(seed, ctr):
    # scalar SplitMix64 finalizer, same constants as the kernels
    z = (seed + ctr * 0x9E3779B97F4A7C15) & _M64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _M64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return z


# Domain tags keep the bit stream, the payoff stream and the snapshot
# stream independent even for equal user seeds.
_TAG_BITS = 0x42495453
_TAG_PAYOFF = 0x5041594F
_TAG_SNAPSHOT = 0x534E4150


def derive_seed(seed, tag):
    return _hash_u64(int(seed) & _M64, tag)


def bits_seed(seed):
    return derive_seed(seed, _TAG_BITS)


def payoff_seed(seed):
    return derive_seed(seed, _TAG_PAYOFF)


def snapshot_seed(seed):
    return derive_seed(seed, _TAG_SNAPSHOT)


def p64_of(p):
    """Fixed-point threshold: floor(p * 2^64), exact via Fraction.

    A leaf is 1 when its 64-bit uniform word is < p64, so the per-leaf
    success probability is exactly p64 / 2^64.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1], got %r" % (p,))
    frac = Fraction(p)
    v = (frac.numerator << 64) // frac.denominator
    return min(v, _M64 + 1)


def sample_packed_bits(seed, p, n_leaves, batch, out=None):
    """Fill out[k] with 64 replica bits for leaf k (replica r in bit r)."""
    if out is None:
        out = np.empty(n_leaves, dtype=np.uint64)
    p64 = p64_of(p)
    p_full = p64 > _M64
    if p64 == 0:
        out[:n_leaves] = 0
        return out
    if _EXT is not None:
        _EXT.sample_packed_bits(seed, p64 & _M64, p_full, n_leaves, batch, out)
    else:
        _fallback.sample_packed_bits(seed, p64 & _M64, p_full, n_leaves, batch, out)
    return out


def sweep_packed(buf, na, nb, kinds, ands):
    if _EXT is not None:
        return _EXT.sweep_packed(buf, na, nb, kinds, ands)
    return _fallback.sweep_packed(buf, na, nb, kinds, ands)


def payoff_roots(seed, n_leaves, na, nb, kinds, amax, n_rep, rep0, out=None):
    if out is None:
        out = np.empty(n_rep, dtype=np.float64)
    if _EXT is not None:
        _EXT.payoff_roots(seed, n_leaves, na, nb, kinds, amax, n_rep, rep0, out)
    else:
        _fallback.payoff_roots(seed, n_leaves, na, nb, kinds, amax, n_rep, rep0, out)
    return out


def hash_words(seed, ctrs):
    if _EXT is not None:
        return _EXT.hash_words(seed, ctrs)
    return _fallback.hash_words(seed, ctrs)


def uniforms(seed, offset, count):
    return _fallback.uniforms(seed, offset, count)


# Direct handles for the backend comparison benchmark.
fallback_impl = _fallback
ext_impl = _EXT

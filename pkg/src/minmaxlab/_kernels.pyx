# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: packed Bernoulli sampling, packed level sweep,
payoff sweep.  Must stay output-identical to _fallback.py."""

from cython.parallel cimport prange, threadid
cimport openmp
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t

import numpy as np


cdef extern from *:
    """
    #include <stdint.h>

    /* One comparison slice over a dense block of words.  The restrict
       qualifiers let the compiler vectorize; the counter is
       cbase + (t << 32), so the multiply by the increment constant
       strength-reduces to one add per iteration. */

    #define MML_MIX(z) \
        (z) ^= (z) >> 30; (z) *= 0xBF58476D1CE4E5B9ULL; \
        (z) ^= (z) >> 27; (z) *= 0x94D049BB133111EBULL; \
        (z) ^= (z) >> 31;

    static void mml_init_slice(uint64_t seed, uint64_t cbase, int64_t nw, int pb,
                               uint64_t * restrict out, uint64_t * restrict eq) {
        int64_t t;
        for (t = 0; t < nw; t++) {
            uint64_t z = seed + (cbase + ((uint64_t)t << 32)) * 0x9E3779B97F4A7C15ULL;
            MML_MIX(z)
            out[t] = pb ? ~z : 0;
            eq[t] = pb ? z : ~z;
        }
    }

    static void mml_slice_one(uint64_t seed, uint64_t cbase, int64_t nw,
                              uint64_t * restrict out, uint64_t * restrict eq) {
        int64_t t;
        for (t = 0; t < nw; t++) {
            uint64_t z = seed + (cbase + ((uint64_t)t << 32)) * 0x9E3779B97F4A7C15ULL;
            MML_MIX(z)
            out[t] |= eq[t] & ~z;
            eq[t] &= z;
        }
    }

    static void mml_slice_zero(uint64_t seed, uint64_t cbase, int64_t nw,
                               uint64_t * restrict eq) {
        int64_t t;
        for (t = 0; t < nw; t++) {
            uint64_t z = seed + (cbase + ((uint64_t)t << 32)) * 0x9E3779B97F4A7C15ULL;
            MML_MIX(z)
            eq[t] &= ~z;
        }
    }
    """
    void mml_init_slice(uint64_t seed, uint64_t cbase, int64_t nw, int pb,
                        uint64_t* out, uint64_t* eq) nogil
    void mml_slice_one(uint64_t seed, uint64_t cbase, int64_t nw,
                       uint64_t* out, uint64_t* eq) nogil
    void mml_slice_zero(uint64_t seed, uint64_t cbase, int64_t nw,
                        uint64_t* eq) nogil


cdef inline uint64_t _mix(uint64_t z) nogil:
    z ^= z >> 30
    z *= <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z *= <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline uint64_t _hash(uint64_t seed, uint64_t ctr) nogil:
    return _mix(seed + ctr * <uint64_t>0x9E3779B97F4A7C15)


DEF INV53 = 1.1102230246251565e-16  # 2^-53, exact


def max_threads():
    return openmp.omp_get_max_threads()


def hash_words(seed, ctrs):
    cdef uint64_t s = <uint64_t>seed
    arr = np.ascontiguousarray(ctrs, dtype=np.uint64)
    out = np.empty(arr.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] cv = arr
    cdef uint64_t[::1] ov = out
    cdef Py_ssize_t k, n = cv.shape[0]
    for k in prange(n, nogil=True, schedule='static'):
        ov[k] = _hash(s, cv[k])
    return out


DEF BLOCK = 8192


cdef void _draw_block(uint64_t seed, uint64_t boff, Py_ssize_t k0, Py_ssize_t nw,
                      uint8_t* pbits, uint64_t* out,
                      uint64_t* eq, uint32_t* act) nogil:
    # Slice-major over a block of words keeps the hash chains of many
    # words in flight at once; the active list drops words whose
    # comparison is already decided (expected after ~7 slices).
    cdef Py_ssize_t t, na, na2
    cdef uint32_t k
    cdef uint64_t h, eqk
    cdef uint64_t base = boff
    cdef uint64_t khi = (<uint64_t>k0) << 32
    cdef int i
    cdef uint8_t pb
    # Slices 0..5 stay nearly fully occupied whatever p is (a word
    # retires once all 64 replica comparisons are decided, which takes
    # about 7 random slices), so run them dense over the whole block
    # with the vectorizable C helpers.
    mml_init_slice(seed, khi + base, nw, pbits[0], out, eq)
    for i in range(1, 6):
        if pbits[i]:
            mml_slice_one(seed, khi + (base | <uint64_t>i), nw, out, eq)
        else:
            mml_slice_zero(seed, khi + (base | <uint64_t>i), nw, eq)
    na = 0
    for t in range(nw):
        act[na] = <uint32_t>t
        na = na + (eq[t] != 0)
    i = 6
    while na > 0 and i < 64:
        pb = pbits[i]
        na2 = 0
        if pb:
            for t in range(na):
                k = act[t]
                h = _hash(seed, ((<uint64_t>(k0 + k)) << 32) | base | <uint64_t>i)
                eqk = eq[k]
                out[k] |= eqk & (~h)
                eqk = eqk & h
                eq[k] = eqk
                act[na2] = k
                na2 = na2 + (eqk != 0)
        else:
            for t in range(na):
                k = act[t]
                h = _hash(seed, ((<uint64_t>(k0 + k)) << 32) | base | <uint64_t>i)
                eqk = eq[k] & (~h)
                eq[k] = eqk
                act[na2] = k
                na2 = na2 + (eqk != 0)
        na = na2
        i = i + 1


def sample_packed_bits(seed, p64, p_full, n_leaves, batch, out):
    cdef uint64_t s = <uint64_t>seed
    cdef uint64_t pv
    cdef uint64_t boff = (<uint64_t>batch) << 7
    cdef Py_ssize_t k, n = n_leaves
    cdef uint64_t[::1] ov = out
    cdef uint8_t pbits[64]
    cdef int i
    if p_full:
        for k in range(n):
            ov[k] = <uint64_t>0xFFFFFFFFFFFFFFFF
        return
    pv = <uint64_t>p64
    for i in range(64):
        pbits[i] = <uint8_t>((pv >> (63 - i)) & 1)
    cdef Py_ssize_t nblocks = (n + BLOCK - 1) // BLOCK
    cdef Py_ssize_t nt = openmp.omp_get_max_threads()
    scratch_eq = np.empty((nt, BLOCK), dtype=np.uint64)
    scratch_act = np.empty((nt, BLOCK), dtype=np.uint32)
    cdef uint64_t[:, ::1] eqv = scratch_eq
    cdef uint32_t[:, ::1] actv = scratch_act
    cdef Py_ssize_t blk, k0, nw
    for blk in prange(nblocks, nogil=True, schedule='static'):
        k0 = blk * BLOCK
        nw = n - k0
        if nw > BLOCK:
            nw = BLOCK
        _draw_block(s, boff, k0, nw, &pbits[0], &ov[k0],
                    &eqv[threadid(), 0], &actv[threadid(), 0])


def sweep_packed(buf, na, nb, kinds, ands):
    cdef uint64_t[::1] b = buf
    cdef uint8_t[::1] kv = kinds
    cdef uint8_t[::1] av = ands
    cdef Py_ssize_t ra = na, rb = nb
    cdef Py_ssize_t s, q, i, j, h2, dst, src
    cdef bint use_and
    for s in range(kv.shape[0]):
        use_and = av[s]
        if kv[s] == 0:
            h2 = ra >> 1
            for q in range(h2):
                dst = q * rb
                src = 2 * q * rb
                if use_and:
                    for j in range(rb):
                        b[dst + j] = b[src + j] & b[src + rb + j]
                else:
                    for j in range(rb):
                        b[dst + j] = b[src + j] | b[src + rb + j]
            ra = h2
        elif kv[s] == 1:
            for q in range(ra - 1):
                dst = q * rb
                if use_and:
                    for j in range(rb):
                        b[dst + j] = b[dst + j] & b[dst + rb + j]
                else:
                    for j in range(rb):
                        b[dst + j] = b[dst + j] | b[dst + rb + j]
            ra = ra - 1
        elif kv[s] == 2:
            h2 = rb >> 1
            for i in range(ra):
                dst = i * h2
                src = i * rb
                if use_and:
                    for q in range(h2):
                        b[dst + q] = b[src + 2 * q] & b[src + 2 * q + 1]
                else:
                    for q in range(h2):
                        b[dst + q] = b[src + 2 * q] | b[src + 2 * q + 1]
            rb = h2
        else:
            h2 = rb - 1
            for i in range(ra):
                dst = i * h2
                src = i * rb
                if use_and:
                    for q in range(h2):
                        b[dst + q] = b[src + q] & b[src + q + 1]
                else:
                    for q in range(h2):
                        b[dst + q] = b[src + q] | b[src + q + 1]
            rb = h2
    return int(b[0])


cdef inline double _payoff_one(uint64_t seed, uint64_t rep, double* w,
                               Py_ssize_t na, Py_ssize_t nb,
                               uint8_t* kinds, uint8_t* vmax,
                               Py_ssize_t nsteps, Py_ssize_t n_leaves) nogil:
    cdef Py_ssize_t k, s, q, i, j, h2, dst, src
    cdef Py_ssize_t ra = na, rb = nb
    cdef double x, y
    cdef bint mx
    for k in range(n_leaves):
        w[k] = <double>(_hash(seed, ((<uint64_t>k) << 32) | rep) >> 11) * INV53
    for s in range(nsteps):
        mx = vmax[s]
        if kinds[s] == 0:
            h2 = ra >> 1
            for q in range(h2):
                dst = q * rb
                src = 2 * q * rb
                for j in range(rb):
                    x = w[src + j]
                    y = w[src + rb + j]
                    if mx:
                        w[dst + j] = x if x > y else y
                    else:
                        w[dst + j] = x if x < y else y
            ra = h2
        elif kinds[s] == 1:
            for q in range(ra - 1):
                dst = q * rb
                for j in range(rb):
                    x = w[dst + j]
                    y = w[dst + rb + j]
                    if mx:
                        w[dst + j] = x if x > y else y
                    else:
                        w[dst + j] = x if x < y else y
            ra = ra - 1
        elif kinds[s] == 2:
            h2 = rb >> 1
            for i in range(ra):
                dst = i * h2
                src = i * rb
                for q in range(h2):
                    x = w[src + 2 * q]
                    y = w[src + 2 * q + 1]
                    if mx:
                        w[dst + q] = x if x > y else y
                    else:
                        w[dst + q] = x if x < y else y
            rb = h2
        else:
            h2 = rb - 1
            for i in range(ra):
                dst = i * h2
                src = i * rb
                for q in range(h2):
                    x = w[src + q]
                    y = w[src + q + 1]
                    if mx:
                        w[dst + q] = x if x > y else y
                    else:
                        w[dst + q] = x if x < y else y
            rb = h2
    return w[0]


def payoff_roots(seed, n_leaves, na, nb, kinds, amax, n_rep, rep0, out):
    cdef uint64_t s64 = <uint64_t>seed
    cdef uint64_t r0 = <uint64_t>rep0
    cdef Py_ssize_t nl = n_leaves, a = na, b = nb, nr = n_rep
    cdef uint8_t[::1] kv = kinds
    cdef uint8_t[::1] mv = amax
    cdef double[::1] ov = out
    cdef Py_ssize_t nsteps = kv.shape[0]
    cdef Py_ssize_t nt = openmp.omp_get_max_threads()
    scratch = np.empty((nt, nl), dtype=np.float64)
    cdef double[:, ::1] sc = scratch
    cdef Py_ssize_t s
    for s in prange(nr, nogil=True, schedule='static'):
        ov[s] = _payoff_one(s64, r0 + <uint64_t>s, &sc[threadid(), 0],
                            a, b, &kv[0], &mv[0], nsteps, nl)

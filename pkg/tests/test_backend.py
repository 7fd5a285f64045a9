import numpy as np
import pytest

from minmaxlab import _fallback, backend


def test_derive_seed_is_deterministic_and_tag_separated():
    assert backend.derive_seed(12345, 7) == backend.derive_seed(12345, 7)
    seeds = {backend.bits_seed(99), backend.payoff_seed(99), backend.snapshot_seed(99)}
    assert len(seeds) == 3
    assert backend.bits_seed(99) != backend.bits_seed(100)


def test_p64_endpoints_and_midpoint():
    assert backend.p64_of(0.0) == 0
    assert backend.p64_of(1.0) == 1 << 64
    assert backend.p64_of(0.5) == 1 << 63
    assert backend.p64_of(0.25) == 1 << 62
    with pytest.raises(ValueError):
        backend.p64_of(1.5)
    with pytest.raises(ValueError):
        backend.p64_of(-0.1)


def test_packed_bits_determinism_and_degenerate_p():
    a = backend.sample_packed_bits(3, 0.3, 16, 0)
    b = backend.sample_packed_bits(3, 0.3, 16, 0)
    assert np.array_equal(a, b)
    c = backend.sample_packed_bits(3, 0.3, 16, 1)
    assert not np.array_equal(a, c)
    assert not backend.sample_packed_bits(3, 0.0, 16, 0).any()
    ones = backend.sample_packed_bits(3, 1.0, 16, 0)
    assert (ones == np.uint64(0xFFFFFFFFFFFFFFFF)).all()


def test_packed_bits_empirical_rate():
    words = backend.sample_packed_bits(7, 0.3, 256, 0)
    rate = int(np.bitwise_count(words).sum()) / (64 * 256)
    # 16384 Bernoulli(0.3) draws; 5 sigma is about 0.018
    assert abs(rate - 0.3) < 0.02


def test_uniform_stream_is_offset_consistent():
    u = backend.uniforms(11, 0, 100)
    assert u.shape == (100,)
    assert (u >= 0).all() and (u < 1).all()
    assert np.array_equal(u[40:], backend.uniforms(11, 40, 60))
    assert not np.array_equal(u, backend.uniforms(12, 0, 100))


def test_hash_words_matches_scalar_reference():
    ctrs = np.array([0, 1, 2, 2**63, 2**64 - 1], dtype=np.uint64)
    vec = backend.hash_words(1234, ctrs)
    ref = [backend._hash_u64(1234, int(c)) for c in ctrs]
    assert [int(v) for v in vec] == ref


def test_sweep_packed_hand_case():
    # 2x2 leaf level: fold b-axis with OR, then a-axis with AND,
    # per lane: (b00|b01) & (b10|b11)
    buf = np.array([0b0011, 0b0101, 0b1100, 0b0110], dtype=np.uint64)
    kinds = np.array([2, 0], dtype=np.uint8)
    ands = np.array([0, 1], dtype=np.uint8)
    got = backend.sweep_packed(buf, 2, 2, kinds, ands)
    assert got == ((0b0011 | 0b0101) & (0b1100 | 0b0110))


@pytest.mark.skipif(not backend.HAVE_EXT, reason="compiled kernels not built")
def test_compiled_and_numpy_backends_agree():
    ext = backend.ext_impl
    seed = backend.bits_seed(2024)

    ctrs = np.arange(1000, dtype=np.uint64) * np.uint64(2**40 + 17)
    assert np.array_equal(ext.hash_words(seed, ctrs), _fallback.hash_words(seed, ctrs))

    for p in (0.1, 0.5, 1 / 3, 0.9999):
        p64 = backend.p64_of(p)
        a = np.empty(64, dtype=np.uint64)
        b = np.empty(64, dtype=np.uint64)
        ext.sample_packed_bits(seed, p64, False, 64, 3, a)
        _fallback.sample_packed_bits(seed, p64, False, 64, 3, b)
        assert np.array_equal(a, b), "p=%r" % p

    rng = np.random.default_rng(0)
    buf = rng.integers(0, 2**64, size=8 * 4, dtype=np.uint64)
    kinds = np.array([2, 0, 3, 1], dtype=np.uint8)
    ands = np.array([0, 1, 0, 1], dtype=np.uint8)
    assert ext.sweep_packed(buf.copy(), 8, 4, kinds, ands) == _fallback.sweep_packed(
        buf.copy(), 8, 4, kinds, ands)

    amax = np.array([1, 0, 1, 0], dtype=np.uint8)
    pa = np.empty(50, dtype=np.float64)
    pb = np.empty(50, dtype=np.float64)
    ext.payoff_roots(seed, 32, 8, 4, kinds, amax, 50, 7, pa)
    _fallback.payoff_roots(seed, 32, 8, 4, kinds, amax, 50, 7, pb)
    assert np.array_equal(pa, pb)


def test_backend_name_is_coherent():
    assert backend.BACKEND_NAME in ("cython", "numpy")
    assert backend.HAVE_EXT == (backend.BACKEND_NAME == "cython")

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfft.dft import SparseVector, forward_dft, inverse_dft
from sfft.errors import BudgetExceeded, InvalidPermutation
from sfft.filters import build_filter
from sfft.hashing import (FrequencySource, MeasurementCache, Permutation, SampleLedger, apply_P,
                          chi_bins_all, chi_buckets, direct_measurement_oracle, hash_to_bins,
                          make_hashing, measure, permute_index, random_hashing)
from sfft.oracles import e_head

from conftest import crandn


def test_permute_index_examples():
    assert permute_index(Permutation(1, 0, 16), 5) == 5
    assert permute_index(Permutation(3, 0, 8), 5) == 7


def test_permutation_is_bijection(rng):
    n = 256
    for _ in range(20):
        p = Permutation(2 * int(rng.integers(0, n // 2)) + 1, int(rng.integers(0, n)), n)
        img = p(np.arange(n))
        assert np.array_equal(np.sort(img), np.arange(n))
        assert np.array_equal(p.inverse(img), np.arange(n))


def test_even_sigma_rejected():
    with pytest.raises(InvalidPermutation):
        Permutation(4, 0, 16)
    with pytest.raises(InvalidPermutation):
        apply_P(np.ones(16), 2, 0, 0)


def test_apply_P_identity_and_delta(rng):
    xh = crandn(rng, 32)
    assert np.allclose(apply_P(xh, 1, 0, 0), xh)
    d = np.zeros(32, complex)
    d[0] = 1
    out = apply_P(d, 5, 0, 3)
    assert np.flatnonzero(out).tolist() == [0]


def test_permutation_identity(rng):
    n = 64
    for _ in range(50):
        x = crandn(rng, n)
        s = 2 * int(rng.integers(0, n // 2)) + 1
        a, q = int(rng.integers(0, n)), int(rng.integers(0, n))
        y = inverse_dft(apply_P(forward_dft(x), s, a, q))
        i = np.arange(n)
        want = x * np.exp(2j * np.pi * ((a * s * i) % n) / n)
        assert np.abs(y[Permutation(s, q, n)(i)] - want).max() <= 1e-9


def test_bucket_rounding_half_up():
    # n/B = 8: pi = 4 sits exactly half-way between buckets 0 and 1
    H = make_hashing(64, 8, 8, 1, 0)
    assert H.bucket(4) == 1
    assert H.bucket(3) == 0
    assert H.bucket(60) == 0       # wraps to bucket 8 = 0
    assert H.bucket(59) == 7


def test_offsets_are_centred():
    H = make_hashing(64, 8, 8, 3, 5)
    for i in range(64):
        assert abs(int(H.offset(i, i))) <= 4
    o = H.offset(0, np.arange(64))
    assert o.min() > -32 and o.max() <= 32


def _case(rng, n, B, nnz=4):
    x = crandn(rng, n)
    chi = SparseVector(n, rng.choice(n, nnz, replace=False), crandn(rng, nnz))
    H = random_hashing(rng, n, B, 8)
    return x, chi, H, int(rng.integers(0, n))


def test_hash_to_bins_matches_oracle(rng):
    for _ in range(20):
        x, chi, H, a = _case(rng, 512, 8)
        got = hash_to_bins(FrequencySource(forward_dft(x)), chi, H, a).bucket_values
        want = direct_measurement_oracle(x, chi, H, a).bucket_values
        assert np.abs(got - want).max() <= 1e-6 * (np.linalg.norm(x) + chi.norm())


def test_single_tone_lands_in_its_bucket(rng):
    n, B = 1024, 16
    for _ in range(20):
        H = random_hashing(rng, n, B, 8)
        i0 = int(rng.integers(0, n))
        # keep the tone inside its bucket's plateau
        if abs(int(H.offset(i0, i0))) > n // (2 * B):
            continue
        x = np.zeros(n, complex)
        x[i0] = 2 - 1j
        a = int(rng.integers(0, n))
        m = hash_to_bins(FrequencySource(forward_dft(x)), None, H, a).bucket_values
        want = H.G_at(H.offset(i0, i0)) * x[i0] * np.exp(2j * np.pi * (a * H.perm.sigma * i0 % n) / n)
        assert abs(m[H.bucket(i0)] - want) <= 1e-9
        want_all = direct_measurement_oracle(x, None, H, a).bucket_values
        assert np.allclose(m, want_all, atol=1e-9)


def test_zero_inputs_give_zero_buckets(rng):
    H = random_hashing(rng, 256, 16, 8)
    m = hash_to_bins(FrequencySource(np.zeros(256, complex)), SparseVector(256), H, 3)
    assert np.all(m.bucket_values == 0)
    assert len(m) == 16


def test_oracle_linearity_and_residual(rng):
    n = 256
    H = random_hashing(rng, n, 16, 8)
    x, y = crandn(rng, n), crandn(rng, n)
    m = lambda v, c=None: direct_measurement_oracle(v, c, H, 7).bucket_values
    assert np.allclose(m(x + y), m(x) + m(y))
    assert np.allclose(m(3j * x), 3j * m(x))
    xs = SparseVector(n, [1, 50, 99], [1, 2j, -3])
    assert np.allclose(m(xs.to_dense(), xs), 0)


def test_sample_count_per_call_is_linear_in_BF(rng):
    n = 1 << 14
    for B in (8, 16, 32, 64, 128):
        for F in (2, 4, 6, 8):
            H = make_hashing(n, B, F, 1, 0)
            led = SampleLedger(n)
            measure(FrequencySource(np.ones(n, complex)), H, [5], led)
            # window of F(M - 1) + 1 taps with M = 4B + 1
            assert led.count <= 4 * B * F + 1


def test_cache_prevents_new_reads(rng):
    n = 1024
    src = FrequencySource(crandn(rng, n))
    H = random_hashing(rng, n, 16, 8)
    led, cache = SampleLedger(n), MeasurementCache()
    m1 = measure(src, H, [3, 9], led, cache)
    c, r = led.count, led.requested
    m2 = measure(src, H, [9, 3], led, cache)
    assert (led.count, led.requested) == (c, r)
    assert np.array_equal(m1[::-1], m2)


def test_ledger_counts_distinct_and_phases():
    led = SampleLedger(16)
    with led.phase("a"):
        led.record([1, 2, 2, 3])
    with led.phase("b"):
        led.record([3, 4])
    assert led.count == 4 and led.requested == 6
    assert led.per_phase == {"a": 3, "b": 1}
    assert [c for _, c in led.log] == [3, 4]


def test_budget_exceeded_carries_phase():
    led = SampleLedger(64, budget=5)
    with led.phase("location"):
        led.record([0, 1, 2])
        with pytest.raises(BudgetExceeded) as ei:
            led.record([3, 4, 5])
    assert ei.value.phase == "location"
    assert led.count == 3           # nothing recorded by the failing call


def test_callable_source(rng):
    xh = crandn(rng, 128)
    src = FrequencySource(lambda idx: xh[idx], n=128)
    H = random_hashing(rng, 128, 8, 4)
    assert np.allclose(measure(src, H, [2]), measure(FrequencySource(xh), H, [2]))


def test_chi_bucket_paths_agree(rng):
    n = 4096
    for B in (16, 256):
        H = random_hashing(rng, n, B, 8)
        chi = SparseVector(n, rng.choice(n, 30, replace=False), crandn(rng, 30))
        a = rng.integers(0, n, size=3)
        want = np.stack([direct_measurement_oracle(chi.to_dense(), None, H, int(v)).bucket_values for v in a])
        assert np.abs(chi_buckets(chi, H, a, np.arange(B)) - want).max() <= 1e-10
        assert np.abs(chi_bins_all(chi, H, a) - want).max() <= 1e-12 * np.abs(chi.values).sum() + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([8, 32]))
def test_hash_to_bins_property(seed, B):
    rng = np.random.default_rng(seed)
    x, chi, H, a = _case(rng, 256, B)
    got = hash_to_bins(FrequencySource(forward_dft(x)), chi, H, a).bucket_values
    want = direct_measurement_oracle(x, chi, H, a).bucket_values
    assert np.abs(got - want).max() <= 1e-6 * (np.linalg.norm(x) + chi.norm())


def test_expected_head_interference_scales_like_one_over_B():
    # E_H[e_head_i] <= c' ||x'||_1 / B over random hashings
    rng = np.random.default_rng(11)
    n, B = 1024, 32
    S = rng.choice(n, 24, replace=False)
    x = np.zeros(n, complex)
    x[S] = crandn(rng, 24)
    i = int(S[0])
    vals = [e_head(i, random_hashing(rng, n, B, 8), x, S) for _ in range(500)]
    c_fit = np.mean(vals) * B / np.abs(x[S]).sum()
    assert c_fit <= 4.0

import numpy as np
import pytest

from conftest import crandn
from sfft.dft import SparseVector, forward_dft
from sfft.errors import BudgetExceeded, ConfigurationError, DomainError
from sfft.estimation import (EstimateConfig, MeasurementBundle, estimate, estimate_values,
                             lower_median, run_estimate)
from sfft.hashing import FrequencySource, measure, random_hashing
from sfft.oracles import e_head_multi, e_tail_multi


def _bundle(rng, src, B, count, F=8):
    b = MeasurementBundle()
    for _ in range(count):
        H = random_hashing(rng, src.n, B, F)
        a = int(rng.integers(0, src.n))
        b.add(H, a, measure(src, H, [a])[0])
    return b


def _sparse(rng, n, k, scale=1.0):
    x = np.zeros(n, complex)
    S = np.sort(rng.choice(n, k, replace=False))
    x[S] = scale * np.exp(2j * np.pi * rng.random(k)) * (1 + rng.random(k))
    return x, S


def test_lower_median():
    assert lower_median(np.array([3.0, 1.0, 2.0, 4.0])) == 2.0
    assert lower_median(np.array([5.0, 1.0, 3.0])) == 3.0
    v = np.array([[1.0, 9.0], [2.0, 8.0], [3.0, 7.0]])
    assert np.array_equal(lower_median(v, axis=0), [2.0, 8.0])


def test_single_tone(rng):
    n, i0, v = 1024, 321, 1.5 - 0.5j
    x = np.zeros(n, complex)
    x[i0] = v
    src = FrequencySource(forward_dft(x))
    w = estimate_values(SparseVector(n), [i0], _bundle(rng, src, 16, 5))
    assert abs(w.to_dense()[i0] - v) <= 0.25 ** 7 * abs(v) + 1e-6


def test_zero_residual(rng):
    n = 1024
    x, S = _sparse(rng, n, 20)
    src = FrequencySource(forward_dft(x))
    chi = SparseVector(n, S, x[S])
    w = estimate_values(chi, S, _bundle(rng, src, 64, 9))
    assert np.abs(w.values).max() <= 1e-6 * np.linalg.norm(x)


def test_error_bound_from_functionals(rng):
    n = 1 << 9
    for _ in range(4):
        x = 0.05 * crandn(rng, n)
        S = np.sort(rng.choice(n, 12, replace=False))
        x[S] += 3 * crandn(rng, 12)
        chi = SparseVector(n, S[:4], x[S[:4]] * 0.9)
        xr = x.copy()
        xr[chi.indices] -= chi.values
        src = FrequencySource(forward_dft(x))
        b = _bundle(rng, src, 32, 9)
        w = estimate_values(chi, S, b).to_dense()
        Hs = [e.H for e in b.entries]
        pairs = [(e.H, e.a) for e in b.entries]
        for i in S:
            bound = 2 * e_head_multi(int(i), Hs, xr, S) + 2 * e_tail_multi(int(i), pairs, xr, S)
            assert abs(w[i] - xr[i]) <= bound + 1e-9


def test_estimate_values_errors(rng):
    n = 256
    src = FrequencySource(np.zeros(n))
    with pytest.raises(DomainError):
        estimate_values(SparseVector(n), [1], MeasurementBundle())
    b = _bundle(rng, src, 16, 3)
    with pytest.raises(DomainError):
        estimate_values(SparseVector(n), [n], b)
    with pytest.raises(DomainError):
        estimate_values(SparseVector(n), [1], b, r_floor=9)
    assert estimate_values(SparseVector(n), [], b).nnz == 0


def test_exact_support_recovered():
    rng = np.random.default_rng(3)
    n, k = 1 << 12, 16
    x, S = _sparse(rng, n, k)
    chi = estimate(FrequencySource(forward_dft(x)), S, EstimateConfig(k=k, eps=0.1), rng_seed=1)
    assert set(chi.indices.tolist()) <= set(S.tolist())
    d = chi.to_dense()
    assert np.linalg.norm((x - d)[S]) <= 1e-6 * np.linalg.norm(x[S])


def test_support_inside_S_and_deterministic():
    rng = np.random.default_rng(4)
    n, k = 1 << 12, 32
    x = 0.01 * crandn(rng, n)
    S = np.sort(rng.choice(n, k, replace=False))
    x[S] += 10 * crandn(rng, k)
    src = FrequencySource(forward_dft(x))
    cfg = EstimateConfig(k=k, eps=0.2)
    a = run_estimate(src, S, cfg, rng_seed=9, keep_history=True)
    b = run_estimate(src, S, cfg, rng_seed=9)
    assert set(a.chi.indices.tolist()) <= set(S.tolist())
    assert np.array_equal(a.chi.indices, b.chi.indices)
    assert np.array_equal(a.chi.values, b.chi.values)
    assert a.ledger.count == b.ledger.count
    assert set(a.ledger.per_phase) == {"loop", "cleanup"}
    tail = np.delete(x, S)
    assert np.linalg.norm((x - a.chi.to_dense())[S]) ** 2 <= 0.2 * np.linalg.norm(tail) ** 2
    assert len(a.history) >= 1


def test_budget_and_config_errors():
    n = 1 << 10
    src = FrequencySource(np.ones(n))
    with pytest.raises(BudgetExceeded):
        run_estimate(src, [1, 2, 3], EstimateConfig(k=3, eps=0.1, budget=10))
    with pytest.raises(ConfigurationError):
        estimate(src, [1], EstimateConfig(k=1, eps=1.5))
    with pytest.raises(ConfigurationError):
        estimate(src, [1], EstimateConfig(k=0, eps=0.1))

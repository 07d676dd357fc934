import numpy as np
import pytest

from conftest import crandn
from sfft.dft import SparseVector
from sfft.reference import compute_ground_truth, l2l2_error, top_k_indices


def test_exactly_sparse():
    x = np.zeros(64, complex)
    x[[3, 10, 40]] = [1, -2j, 0.5]
    gt = compute_ground_truth(x, 3)
    assert gt.err_k == 0 and gt.mu == 0
    assert list(gt.S) == [3, 10, 40]
    assert np.array_equal(gt.best_k, x)


def test_all_ones_full_k():
    assert compute_ground_truth(np.ones(16), 16).err_k == 0


def test_err_k_second_implementation(rng):
    x = crandn(rng, 1024)
    gt = compute_ground_truth(x, 32)
    mags = np.abs(x)
    rest = np.partition(mags, 1024 - 32)[:1024 - 32]
    assert gt.err_k == pytest.approx(np.sqrt((rest ** 2).sum()), rel=1e-12)
    assert gt.mu == pytest.approx(gt.err_k / np.sqrt(32))


def test_ties_go_to_lower_index():
    x = np.array([1, 3, 3, 3, 0.5])
    assert list(top_k_indices(x, 2)) == [1, 2]


def test_deterministic(rng):
    x = crandn(rng, 256)
    a, b = compute_ground_truth(x, 8), compute_ground_truth(x.copy(), 8)
    assert a.err_k == b.err_k and np.array_equal(a.S, b.S)


def test_head_size_bound():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.choice([64, 256, 1024]))
        k = int(rng.integers(1, 40))
        kind = rng.integers(3)
        if kind == 0:
            x = crandn(rng, n)
        elif kind == 1:
            x = crandn(rng, n) * rng.pareto(1.0, n)
        else:
            x = np.round(rng.standard_normal(n))
        gt = compute_ground_truth(x, k)
        assert gt.S.size <= 2 * k


def test_l2l2_examples(rng):
    x = crandn(rng, 128)
    assert l2l2_error(x, x.copy(), 5) == (0.0, 0.0, False)
    s = np.zeros(128, complex)
    s[[1, 2]] = [3, 4]
    ab, rel, flag = l2l2_error(s, SparseVector(128), 2)
    assert ab == pytest.approx(25.0) and flag and np.isnan(rel)


def test_l2l2_direct(rng):
    x = crandn(rng, 128)
    chi = SparseVector(128, [0, 7], [x[0], 0.5])
    ab, rel, _ = l2l2_error(x, chi, 4)
    d = x.copy()
    d[0] = 0
    d[7] -= 0.5
    ek2 = np.sort(np.abs(x) ** 2)[:-4].sum()
    assert ab == pytest.approx((np.abs(d) ** 2).sum(), rel=1e-12)
    assert rel == pytest.approx(ab / ek2, rel=1e-12)

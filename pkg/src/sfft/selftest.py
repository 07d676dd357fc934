"""Quick oracle-equivalence checks run by ``sfft selftest``."""
from __future__ import annotations

import numpy as np

from .dft import SparseVector, forward_dft, inverse_dft
from .filters import build_filter, check_flatness
from .hashing import (FrequencySource, apply_P, direct_measurement_oracle, hash_to_bins,
                      random_hashing)
from .semi_equi import semi_equi_fft

__all__ = ["run_selftest"]


def _dft_direct(seed=0, n=64):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    j = np.arange(n)
    W = np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)
    err = np.abs(forward_dft(x) - W @ x).max() + np.abs(inverse_dft(forward_dft(x)) - x).max()
    return err <= 1e-10 * np.linalg.norm(x), f"max err {err:.2e}"


def _filters(n=1 << 12):
    bad = 0
    for B in (8, 16, 32, 64, 128, 256, 512):
        for F in (2, 4, 6, 8, 10):
            r = check_flatness(build_filter(n, B, F).G, n, B, F)
            bad += not (r["range"] and r["plateau"] and r["decay"])
    return bad == 0, f"{bad} violating (B, F) cells"


def _perm_identity(seed=1, n=64, cases=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        s, a, q = 2 * int(rng.integers(0, n // 2)) + 1, int(rng.integers(0, n)), int(rng.integers(0, n))
        y = inverse_dft(apply_P(forward_dft(x), s, a, q))
        i = np.arange(n)
        want = x * np.exp(2j * np.pi * (a * s * i % n) / n)
        worst = max(worst, np.abs(y[(s * (i - q)) % n] - want).max())
    return worst <= 1e-9, f"max err {worst:.2e}"


def _hash_to_bins(seed=2, n=1 << 10, cases=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for c in range(cases):
        B = (8, 32)[c % 2]
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        idx = rng.choice(n, 5, replace=False)
        chi = SparseVector(n, idx, rng.standard_normal(5) + 1j * rng.standard_normal(5))
        H = random_hashing(rng, n, B, 8)
        a = int(rng.integers(0, n))
        got = hash_to_bins(FrequencySource(forward_dft(x)), chi, H, a).bucket_values
        want = direct_measurement_oracle(x, chi, H, a).bucket_values
        worst = max(worst, np.abs(got - want).max() / (np.linalg.norm(x) + chi.norm()))
    return worst <= 1e-6, f"max rel err {worst:.2e}"


def _semi_equi(seed=3, n=1 << 10):
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, 12, replace=False)
    x = SparseVector(n, idx, rng.standard_normal(12) + 1j * rng.standard_normal(12))
    f, v = semi_equi_fft(x, 33)
    full = forward_dft(x.to_dense())
    err = np.abs(v - full[f % n]).max()
    return err <= 1e-8 * x.norm(), f"max err {err:.2e}"


CHECKS = [
    ("dft matches direct sum", _dft_direct),
    ("flat filter scan n=2^12", _filters),
    ("permutation identity", _perm_identity),
    ("hash_to_bins vs direct oracle", _hash_to_bins),
    ("semi-equispaced vs dense DFT", _semi_equi),
]


def run_selftest(out=print) -> bool:
    ok_all = True
    for name, fn in CHECKS:
        ok, detail = fn()
        ok_all &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    out(f"selftest {'passed' if ok_all else 'FAILED'}")
    return ok_all

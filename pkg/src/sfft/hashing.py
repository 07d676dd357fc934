"""Spectrum permutations, hashings, measurements and the sample ledger.

Every access to the sampled side goes through a :class:`FrequencySource`,
which reports the coordinates it hands out to a :class:`SampleLedger`.

Notation used below (n a power of two, omega = exp(2 pi i / n)):

* pi(i) = sigma (i - q) mod n, sigma odd;
* h(i) = round(B pi(i) / n) mod B, the bucket of i;
* o_i(j) = pi(j) - (n/B) h(i), the offset of j relative to i's bucket;
* m_s(x, H, a) = sum_j G[pi(j) - (n/B) s] x_j omega^{a sigma j}.
"""
from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dft import SparseVector
from .errors import BudgetExceeded, ConfigurationError, InvalidPermutation
from .filters import FlatFilter, build_filter
from .semi_equi import SemiEquiPlan

__all__ = [
    "Permutation",
    "Hashing",
    "Measurement",
    "SampleLedger",
    "FrequencySource",
    "MeasurementCache",
    "permute_index",
    "apply_P",
    "make_hashing",
    "random_hashing",
    "measure",
    "hash_to_bins",
    "chi_buckets",
    "chi_bins_all",
    "direct_measurement_oracle",
]

_ids = itertools.count()


@dataclass(frozen=True)
class Permutation:
    sigma: int
    q: int
    n: int

    def __post_init__(self):
        if self.sigma % 2 == 0:
            raise InvalidPermutation(f"sigma={self.sigma} is even, not invertible mod {self.n}")
        object.__setattr__(self, "sigma", int(self.sigma) % self.n)
        object.__setattr__(self, "q", int(self.q) % self.n)

    @property
    def sigma_inv(self) -> int:
        return pow(self.sigma, -1, self.n)

    def __call__(self, i):
        return (self.sigma * ((np.asarray(i, dtype=np.int64) - self.q) % self.n)) % self.n

    def inverse(self, p):
        return (self.sigma_inv * np.asarray(p, dtype=np.int64) + self.q) % self.n


def permute_index(perm: Permutation, i):
    """pi_{sigma,q}(i) = sigma (i - q) mod n."""
    return perm(i)


def apply_P(x_hat, sigma: int, a: int, q: int) -> np.ndarray:
    """(P_{sigma,a,q} x_hat)_i = x_hat[sigma (i - a)] * omega^{i sigma q}."""
    if sigma % 2 == 0:
        raise InvalidPermutation(f"sigma={sigma} is even")
    v = np.asarray(getattr(x_hat, "values", x_hat), dtype=np.complex128)
    n = v.size
    i = np.arange(n, dtype=np.int64)
    src = (sigma * (i - a)) % n
    return v[src] * np.exp(2j * np.pi * ((i * sigma % n) * q % n) / n)


@dataclass(frozen=True, eq=False)
class Hashing:
    perm: Permutation
    B: int
    F: int
    filter: FlatFilter = field(repr=False)
    id: int = field(default_factory=lambda: next(_ids))

    @property
    def n(self) -> int:
        return self.perm.n

    def bucket(self, i):
        """h(i), rounding half up before reducing mod B."""
        p = self.perm(i)
        return ((self.B * p + self.n // 2) // self.n) % self.B

    def offset(self, i, j):
        """o_i(j) as a centred residue in (-n/2, n/2]."""
        n = self.n
        o = (self.perm(j) - (n // self.B) * self.bucket(i)) % n
        return np.where(o > n // 2, o - n, o)

    def G_at(self, offsets):
        return self.filter.G[np.asarray(offsets) % self.n]


def make_hashing(n, B, F, sigma, q, filt: FlatFilter | None = None) -> Hashing:
    if filt is None:
        filt = build_filter(n, B, F)
    return Hashing(Permutation(sigma, q, n), B, F, filt)


def random_hashing(rng: np.random.Generator, n, B, F, q=None) -> Hashing:
    """sigma odd uniform; q uniform unless fixed by the caller."""
    sigma = 2 * int(rng.integers(0, n // 2)) + 1
    q = int(rng.integers(0, n)) if q is None else int(q)
    return make_hashing(n, B, F, sigma, q)


@dataclass(frozen=True)
class Measurement:
    bucket_values: np.ndarray
    a: int
    hashing_id: int

    def __len__(self):
        return self.bucket_values.size


class SampleLedger:
    """Counts distinct sampled coordinates (``count``) and raw requests.

    ``count`` is the number of distinct coordinates of x_hat handed out so
    far and never decreases. ``requested`` is the total number of reads
    including repeats. Each new coordinate is attributed to the phase active
    when it was first read.
    """

    def __init__(self, n: int, budget: int | None = None):
        self.n = int(n)
        self.budget = budget
        self._seen = np.zeros(self.n, dtype=bool)
        self.count = 0
        self.requested = 0
        self.per_phase: dict[str, int] = {}
        self.requested_per_phase: dict[str, int] = {}
        self.log: list[tuple[str, int]] = []
        self._phase = "default"
        self._lock = threading.Lock()

    @property
    def phase_name(self) -> str:
        return self._phase

    @contextmanager
    def phase(self, name: str):
        prev = self._phase
        self._phase = name
        try:
            yield self
        finally:
            self._phase = prev
            self.log.append((name, self.count))

    def record(self, idx) -> None:
        idx = np.asarray(idx, dtype=np.int64).ravel()
        with self._lock:
            if self.budget is not None:
                fresh = np.unique(idx[~self._seen[idx]]).size
                if self.count + fresh > self.budget:
                    raise BudgetExceeded(self._phase, self.count + fresh, self.budget)
            self._seen[idx] = True
            # an O(n) recount beats sorting large requests
            total = int(np.count_nonzero(self._seen))
            fresh = total - self.count
            self.count = total
            self.requested += int(idx.size)
            p = self._phase
            self.per_phase[p] = self.per_phase.get(p, 0) + fresh
            self.requested_per_phase[p] = self.requested_per_phase.get(p, 0) + int(idx.size)


class FrequencySource:
    """Access point for x_hat: a dense vector or any callable ``idx -> values``."""

    def __init__(self, data: np.ndarray | Callable, n: int | None = None):
        if callable(data):
            if n is None:
                raise ConfigurationError("callable source needs n")
            self._f, self.n = data, int(n)
        else:
            arr = np.asarray(getattr(data, "values", data), dtype=np.complex128)
            self._arr, self.n = arr, arr.size
            self._f = None

    def read(self, idx, ledger: SampleLedger | None) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64) % self.n
        if ledger is not None:
            ledger.record(idx)
        if self._f is None:
            return self._arr[idx]
        return np.asarray(self._f(idx), dtype=np.complex128).reshape(idx.shape)


class MeasurementCache:
    """Stores m(x, H, a) keyed by (hashing id, a)."""

    def __init__(self):
        self._d: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def get(self, hid, a):
        return self._d.get((hid, int(a)))

    def put(self, hid, a, vals):
        with self._lock:
            self._d[(hid, int(a))] = vals

    def __len__(self):
        return len(self._d)


def _fold(vals: np.ndarray, taps: np.ndarray, B: int) -> np.ndarray:
    """Alias the last axis (indexed by consecutive taps) modulo B."""
    start = (int(taps[0]) // B) * B
    pad_lo = int(taps[0]) - start
    total = pad_lo + taps.size
    blocks = -(-total // B)
    buf = np.zeros(vals.shape[:-1] + (blocks * B,), dtype=np.complex128)
    buf[..., pad_lo:pad_lo + taps.size] = vals
    return buf.reshape(vals.shape[:-1] + (blocks, B)).sum(axis=-2)


def _bins_from_window(window_vals: np.ndarray, H: Hashing) -> np.ndarray:
    """u_j = sum_i G_hat_i * v_i * omega^{i sigma q} * e^{2 pi i i j / B}."""
    filt = H.filter
    n, B = H.n, H.B
    taps = filt.taps
    mod = np.exp(2j * np.pi * (((taps % n) * H.perm.sigma % n) * H.perm.q % n) / n) * filt.ghat
    b = _fold(window_vals * mod, taps, B)
    return np.fft.ifft(b, axis=-1) * B


def _window_positions(H: Hashing, a_vals: np.ndarray) -> np.ndarray:
    return (H.perm.sigma * (H.filter.taps[None, :] - a_vals[:, None])) % H.n


def measure(source: FrequencySource, H: Hashing, a_vals, ledger: SampleLedger | None = None,
            cache: MeasurementCache | None = None, chunk_elems: int = 1 << 22) -> np.ndarray:
    """m(x, H, a) for each a in ``a_vals``; shape (len(a_vals), B).

    Reads the window x_hat[sigma (i - a)], i in supp(G_hat); cached
    evaluation points take no new samples.
    """
    a_vals = np.atleast_1d(np.asarray(a_vals, dtype=np.int64)) % H.n
    out = np.empty((a_vals.size, H.B), dtype=np.complex128)
    todo = []
    for e, a in enumerate(a_vals):
        hit = cache.get(H.id, a) if cache is not None else None
        if hit is None:
            todo.append(e)
        else:
            out[e] = hit
    if todo:
        todo = np.asarray(todo)
        # repeated a's inside one call are measured once
        uniq, inv = np.unique(a_vals[todo], return_inverse=True)
        step = max(1, chunk_elems // max(H.filter.support_size, 1))
        res = np.empty((uniq.size, H.B), dtype=np.complex128)
        for s in range(0, uniq.size, step):
            pos = _window_positions(H, uniq[s:s + step])
            res[s:s + step] = _bins_from_window(source.read(pos, ledger), H)
        out[todo] = res[inv]
        if cache is not None:
            for a, row in zip(uniq, res):
                cache.put(H.id, a, row)
    return out


def _chi_window_values(chi: SparseVector, H: Hashing, a_vals: np.ndarray, delta: float) -> np.ndarray:
    """chi_hat at sigma (i - a) for i in supp(G_hat), via the semi-equispaced transform."""
    n = H.n
    taps = H.filter.taps
    plan = SemiEquiPlan(n, H.perm.sigma * chi.indices, int(taps[0]), taps.size, delta)
    # chi_hat[sigma j' - sigma a] = n^-1/2 sum_l chi_l omega^{l sigma a} omega^{-(sigma l) j'}
    ph = ((chi.indices[:, None] * H.perm.sigma) % n * (a_vals[None, :] % n)) % n
    coeffs = chi.values[:, None] * np.exp(2j * np.pi * ph / n)
    return plan.apply(coeffs)


def hash_to_bins(source: FrequencySource, chi: SparseVector | None, H: Hashing, a: int,
                 ledger: SampleLedger | None = None, cache: MeasurementCache | None = None,
                 delta: float = 1e-9) -> Measurement:
    """Bucket values of the residual x - chi at evaluation point a.

    The signal part reads O(F B) samples (or hits the cache); chi's part is
    computed from chi_hat on the same window by the semi-equispaced transform
    and never touches the source.
    """
    a = int(a) % H.n
    mx = measure(source, H, [a], ledger, cache)[0]
    if chi is not None and chi.nnz:
        cw = _chi_window_values(chi, H, np.array([a]), delta)
        mx = mx - _bins_from_window(cw, H)[0]
    return Measurement(mx, a, H.id)


def chi_buckets(chi: SparseVector, H: Hashing, a_vals, buckets) -> np.ndarray:
    """Exact m_s(chi, H, a) for the listed buckets; shape (len(a_vals), len(buckets)).

    Direct O(|buckets| * nnz) evaluation with the dense G, used when only a
    few buckets are needed (estimation).
    """
    a_vals = np.atleast_1d(np.asarray(a_vals, dtype=np.int64))
    buckets = np.atleast_1d(np.asarray(buckets, dtype=np.int64))
    if chi.nnz == 0 or buckets.size == 0:
        return np.zeros((a_vals.size, buckets.size), dtype=np.complex128)
    n = H.n
    pj = H.perm(chi.indices)
    gam = H.filter.G[(pj[None, :] - (n // H.B) * buckets[:, None]) % n]      # (nb, nnz)
    ph = ((chi.indices * H.perm.sigma) % n)[:, None] * (a_vals[None, :] % n) % n
    phi = chi.values[:, None] * np.exp(2j * np.pi * ph / n)                # (nnz, E)
    return (gam @ phi).T


def chi_bins_all(chi: SparseVector, H: Hashing, a_vals, tol: float = 1e-13) -> np.ndarray:
    """m(chi, H, a) for all B buckets, spreading each chi_j over nearby buckets.

    G is truncated where it drops below ``tol`` (checked against the stored
    filter), so the error per bucket is at most tol * ||chi||_1.
    """
    a_vals = np.atleast_1d(np.asarray(a_vals, dtype=np.int64))
    B, n = H.B, H.n
    out = np.zeros((a_vals.size, B), dtype=np.complex128)
    if chi.nnz == 0:
        return out
    nb = n // B
    radius = _spread_radius(H.filter, tol)
    pj = H.perm(chi.indices)
    hb = ((B * pj + n // 2) // n) % B
    rel = np.arange(-radius, radius + 1) if 2 * radius + 1 < B else np.arange(B)
    buckets = (hb[:, None] + rel[None, :]) % B                  # (nnz, 2r+1)
    w = H.filter.G[(pj[:, None] - nb * buckets) % n]
    ph = ((chi.indices * H.perm.sigma) % n)[:, None] * (a_vals[None, :] % n) % n
    phi = chi.values[:, None] * np.exp(2j * np.pi * ph / n)    # (nnz, E)
    contrib = w[:, :, None] * phi[:, None, :]                    # (nnz, 2r+1, E)
    flat_b = buckets.ravel()
    acc = np.zeros((B, a_vals.size), dtype=np.complex128)
    np.add.at(acc, flat_b, contrib.reshape(-1, a_vals.size))
    return acc.T


_radius_cache: dict = {}


def _spread_radius(filt: FlatFilter, tol: float) -> int:
    key = (filt.n, filt.B, filt.F, filt.support_const, filt.half_width, tol)
    r = _radius_cache.get(key)
    if r is None:
        n, B = filt.n, filt.B
        nb = n // B
        j = np.arange(n)
        c = np.abs(np.where(j > n // 2, j - n, j))
        big = c[filt.G > tol]
        # a bucket at distance d collects offsets down to (d - 1/2) * n/B
        r = int(min(B // 2, np.ceil(big.max() / nb + 1.0))) if big.size else 0
        _radius_cache[key] = r
    return r


def direct_measurement_oracle(x, chi: SparseVector | None, H: Hashing, a: int) -> Measurement:
    """m_s = sum_j G[pi(j) - (n/B) s] (x - chi)_j omega^{a sigma j}, by brute force."""
    x = np.asarray(getattr(x, "values", x), dtype=np.complex128).copy()
    n, B = x.size, H.B
    if chi is not None and chi.nnz:
        x[chi.indices] -= chi.values
    j = np.arange(n, dtype=np.int64)
    pj = H.perm(j)
    s = np.arange(B)
    G = H.filter.G[(pj[None, :] - (n // B) * s[:, None]) % n]
    ph = np.exp(2j * np.pi * (((j * H.perm.sigma) % n) * (int(a) % n) % n) / n)
    return Measurement(G @ (x * ph), int(a) % n, H.id)

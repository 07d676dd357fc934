"""Median estimation from bucket measurements and the sample-optimal
estimator for a known support set."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .dft import SparseVector
from .errors import ConfigurationError, DomainError, PartitionFailure
from .hashing import (FrequencySource, Hashing, SampleLedger, hash_to_bins, measure,
                      random_hashing, chi_buckets)
from .partition import PartitionSchedule, IsolatingPartition, construct_partition

__all__ = [
    "BundleEntry",
    "MeasurementBundle",
    "EstimateConfig",
    "EstimateResult",
    "lower_median",
    "estimate_values",
    "estimate",
    "run_estimate",
]


@dataclass
class BundleEntry:
    H: Hashing
    a: int
    m: np.ndarray                       # B bucket values
    baseline: SparseVector | None = None  # chi already subtracted inside m


@dataclass
class MeasurementBundle:
    entries: list = field(default_factory=list)

    def add(self, H, a, m, baseline=None):
        self.entries.append(BundleEntry(H, int(a), np.asarray(m), baseline))

    @property
    def r_max(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)


def lower_median(v: np.ndarray, axis=0) -> np.ndarray:
    """Median along ``axis``; even counts take the lower middle element."""
    v = np.sort(v, axis=axis)
    m = (v.shape[axis] - 1) // 2
    return np.take(v, m, axis=axis)


def estimate_values(chi: SparseVector, L, bundle: MeasurementBundle, r_floor: int = 1) -> SparseVector:
    """Coordinatewise median estimate of the residual (x - chi) on L.

    For each measurement r and i in L the single-shot estimate is
    G_{o_i(i)}^-1 * m_{h_r(i)}(x - chi, H_r, a_r) * omega^{-a_r sigma_r i};
    real and imaginary parts are medianed separately.
    """
    L = np.asarray(sorted(set(int(v) for v in L)), dtype=np.int64)
    n = chi.n
    if L.size and (L.min() < 0 or L.max() >= n):
        raise DomainError("index in L outside [0, n)")
    R = bundle.r_max
    if R == 0:
        raise DomainError("empty measurement bundle")
    if R < r_floor:
        raise DomainError(f"bundle has {R} measurements, need at least {r_floor}")
    if L.size == 0:
        return SparseVector(n)
    est = np.empty((R, L.size), dtype=np.complex128)
    for r, e in enumerate(bundle.entries):
        H = e.H
        b = H.bucket(L)
        ub, inv = np.unique(b, return_inverse=True)
        vals = e.m[ub]
        delta_chi = chi if e.baseline is None else chi - e.baseline
        if delta_chi.nnz:
            vals = vals - chi_buckets(delta_chi, H, [e.a], ub)[0]
        g = H.G_at(H.perm(L) - (n // H.B) * b)
        ph = np.exp(-2j * np.pi * ((e.a % n) * ((H.perm.sigma * L) % n) % n) / n)
        est[r] = vals[inv] / g * ph
    w = lower_median(est.real) + 1j * lower_median(est.imag)
    return SparseVector(n, L, w)


@dataclass
class EstimateConfig:
    k: int
    eps: float
    delta: float = 0.25
    R_star: float | None = None       # defaults to n^3
    C1: float = 0.5
    C2: float = 64.0
    c_T: int = 3
    b_min: int = 4
    C_loop: float = 1.0
    r_max_cleanup: int = 9
    C_cleanup: float = 1.0
    F: int = 8
    max_retries: int = 3
    delta_semi: float = 1e-9
    budget: int | None = None

    def validate(self, n: int):
        if not (1.0 / n < self.eps < 1):
            raise ConfigurationError(f"eps={self.eps} must lie in (1/n, 1)")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.R_star is not None and self.R_star < 1:
            raise ConfigurationError("R* must be >= 1")


@dataclass
class EstimateResult:
    chi: SparseVector
    chi_loop: SparseVector
    ledger: SampleLedger
    partition: IsolatingPartition
    retries: int
    history: list = field(default_factory=list)   # chi after each outer round


def _cleanup_buckets(n: int, k: int, eps: float, c: float) -> int:
    B = 1 << max(2, math.ceil(math.log2(max(4.0, c * k / eps))))
    return min(B, max(2, n // 4))


def run_estimate(source: FrequencySource, S, cfg: EstimateConfig, rng_seed=0,
                 ledger: SampleLedger | None = None, keep_history: bool = False) -> EstimateResult:
    """Estimate x on the given index set S from samples of x_hat.

    Phase 1 draws R_t hashings with random (sigma, q) and one random
    evaluation point each for t = 1..T; phase 2 builds an isolating partition
    of S for them (redrawing everything on failure); phase 3 runs the
    l1-reduction loop; phase 4 corrects on all of S from fresh, finer
    measurements of the residual.
    """
    n = source.n
    cfg.validate(n)
    rng = np.random.default_rng(rng_seed)
    S = np.asarray(sorted(set(int(v) for v in S)), dtype=np.int64)
    if ledger is None:
        ledger = SampleLedger(n, cfg.budget)
    sched = PartitionSchedule(n, max(cfg.k, S.size), cfg.delta, cfg.C1, cfg.C2, cfg.c_T, cfg.b_min)
    R_star = float(n) ** 3 if cfg.R_star is None else float(cfg.R_star)

    # The partition depends on the hashings only, so it is built before any
    # sample is read; a failed draw costs no samples.
    part = None
    retries = 0
    for attempt in range(cfg.max_retries + 1):
        hashings = [[random_hashing(rng, n, sched.B_t(t), cfg.F) for _ in range(sched.R_t(t))]
                    for t in range(1, sched.T + 1)]
        points = [[int(rng.integers(0, n)) for _ in range(sched.R_t(t))] for t in range(1, sched.T + 1)]
        try:
            part = construct_partition(S, sched, hashings)
            break
        except PartitionFailure:
            retries += 1
    if part is None:
        raise PartitionFailure(f"no isolating partition after {cfg.max_retries} retries")

    bundles = []
    with ledger.phase("loop"):
        for t in range(sched.T):
            b = MeasurementBundle()
            for H, a in zip(hashings[t], points[t]):
                b.add(H, a, measure(source, H, [a], ledger)[0])
            bundles.append(b)

    chi = SparseVector(n)
    history = []
    rounds = max(1, math.ceil(cfg.C_loop * math.log(R_star, 4)))
    for _ in range(rounds):
        for t in range(sched.T):
            St = part.sets[t]
            if not St:
                continue
            chi = chi + estimate_values(chi, St, bundles[t])
        if keep_history:
            history.append(chi)
    chi_loop = chi

    B = _cleanup_buckets(n, cfg.k, cfg.eps, cfg.C_cleanup)
    clean = MeasurementBundle()
    with ledger.phase("cleanup"):
        for _ in range(cfg.r_max_cleanup):
            H = random_hashing(rng, n, B, cfg.F)
            a = int(rng.integers(0, n))
            m = hash_to_bins(source, chi_loop, H, a, ledger, delta=cfg.delta_semi)
            clean.add(H, a, m.bucket_values, baseline=chi_loop)
    chi_star = chi_loop + estimate_values(chi_loop, S, clean)
    return EstimateResult(chi_star, chi_loop, ledger, part, retries, history)


def estimate(source: FrequencySource, S, cfg: EstimateConfig, rng_seed=0) -> SparseVector:
    """chi* with support inside S; see :func:`run_estimate`."""
    return run_estimate(source, S, cfg, rng_seed).chi

"""Location by digit decoding, the SNR-reduction loop and the full sparse FFT.

The location primitive reads the frequency of the dominant element in each
bucket from phase ratios m_j(alpha + w beta) / m_j(alpha), one base-Delta
digit at a time. The sparse FFT takes all of its location measurements up
front, then alternates locate / estimate / prune rounds that never read new
samples, and finishes with a constant-SNR cleanup.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dft import SparseVector
from .errors import ConfigurationError
from .estimation import MeasurementBundle, estimate_values
from .hashing import (FrequencySource, Hashing, SampleLedger,
                      chi_bins_all, measure, random_hashing)
from .partition import PartitionSchedule

__all__ = [
    "LocationGeometry",
    "EvalPointSet",
    "RecoveryConfig",
    "RecoveryResult",
    "check_balanced",
    "eval_set_size",
    "random_eval_points",
    "location_points",
    "locate_signal",
    "recover_at_constant_snr",
    "sparse_fft",
    "run_sparse_fft",
]


@dataclass(frozen=True)
class LocationGeometry:
    """Digit base Delta, extended length N = Delta^ceil(log_Delta n) and the shifts N Delta^-g."""

    n: int
    Delta: int = field(init=False)
    N: int = field(init=False)
    digits: int = field(init=False)
    shifts: tuple = field(init=False)

    def __post_init__(self):
        n = self.n
        if n < 4:
            raise ConfigurationError("location needs n >= 4")
        D = 2 ** int(math.floor(0.5 * math.log2(math.log2(n))))
        bits = int(math.log2(D))
        G = -(-int(math.log2(n)) // bits)
        N = D ** G
        object.__setattr__(self, "Delta", D)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "digits", G)
        object.__setattr__(self, "shifts", tuple(N // D ** g for g in range(1, G + 1)))


@dataclass(frozen=True)
class EvalPointSet:
    alpha: np.ndarray
    beta: np.ndarray

    def __len__(self):
        return self.alpha.size


def check_balanced(betas, Delta: int) -> bool:
    """For every r in [1, Delta-1], at least 49/100 of omega_Delta^{r beta} have Re <= 0."""
    b = np.asarray(betas, dtype=np.int64) % Delta
    if b.size == 0:
        return False
    for r in range(1, Delta):
        # Re(omega_Delta^m) <= 0 iff m/Delta lies in [1/4, 3/4]; exact integer test
        m = (r * b) % Delta
        left = (4 * m >= Delta) & (4 * m <= 3 * Delta)
        if 100 * int(left.sum()) < 49 * b.size:
            return False
    return True


def eval_set_size(n: int, C_A: float) -> int:
    return max(1, math.ceil(C_A * math.log2(math.log2(n))))


def random_eval_points(rng: np.random.Generator, n: int, size: int, Delta: int | None = None,
                       max_tries: int = 1000) -> EvalPointSet:
    """Uniform (alpha, beta) pairs; redrawn until balanced when Delta is given.

    Redraws cost no samples since no measurement has been taken yet.
    """
    for _ in range(max_tries):
        al = rng.integers(0, n, size=size)
        be = rng.integers(0, n, size=size)
        if Delta is None or check_balanced(be, Delta):
            return EvalPointSet(al, be)
    raise ConfigurationError(f"no balanced set of size {size} in {max_tries} draws")


def location_points(A: EvalPointSet, geom: LocationGeometry) -> np.ndarray:
    """(|A|, 1 + digits) evaluation points alpha + w beta mod n, w = 0 first."""
    w = np.array((0,) + geom.shifts, dtype=np.int64)
    n = geom.n
    return (A.alpha[:, None] + (w[None, :] % n) * (A.beta[:, None] % n)) % n


def locate_signal(chi: SparseVector | None, H: Hashing, meas: np.ndarray, A: EvalPointSet,
                  geom: LocationGeometry, chi_tol: float = 1e-13) -> np.ndarray:
    """One candidate per bucket, decoded from the measurements of x at
    location_points(A, geom) (shape (|A|, 1 + digits, B)).

    The residual x - chi is formed bucket-wise; buckets whose w=0 value is
    zero are skipped, and a digit with no unique passing r is left at 0.
    """
    n, B = H.n, H.B
    D, N = geom.Delta, geom.N
    meas = np.asarray(meas).reshape(len(A), geom.digits + 1, B)
    if chi is not None and chi.nnz:
        pts = location_points(A, geom)
        meas = meas - chi_bins_all(chi, H, pts.ravel(), chi_tol).reshape(meas.shape)
    base = meas[:, 0, :]
    live = np.all(base != 0, axis=0)
    if not live.any():
        return np.zeros(0, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = meas[:, 1:, live] / base[:, None, live]            # (|A|, G, B')
    beta = A.beta.astype(np.int64)
    f = np.zeros(int(live.sum()), dtype=np.int64)
    rot = np.exp(-2j * np.pi * (np.arange(D)[:, None] * (beta[None, :] % D) % D) / D)   # (D, |A|)
    need = 3 * len(A)
    for g in range(1, geom.digits + 1):
        w = N // D ** g
        ph = np.exp(-2j * np.pi * ((w * ((beta[:, None] % N) * f[None, :] % N)) % N) / N)
        z = ph * ratio[:, g - 1, :]                                 # (|A|, B')
        ok = np.abs(rot[:, :, None] * z[None, :, :] - 1) < 1.0 / 3
        passing = 5 * ok.sum(axis=1) >= need                        # (D, B')
        unique = passing.sum(axis=0) == 1
        r = np.argmax(passing, axis=0)
        f = f + np.where(unique, r, 0) * D ** (g - 1)
    pos = ((f * n + N // 2) // N) % n
    return np.unique((H.perm.sigma_inv * pos) % n)


@dataclass
class RecoveryConfig:
    k: int
    eps: float
    mu: float
    delta: float = 0.25
    R_star: float | None = None       # defaults to n^3
    alpha_est: float = 0.25
    C_est: float = 20.0
    C1: float = 0.5
    C2: float = 64.0
    C2_loc: float | None = None      # location bucket constant, defaults to C2
    C_A: float = 4.0
    c_T: int = 3
    b_min: int = 4
    F: int = 8
    C_rec: float = 4.0
    rec_rounds: int | None = None
    rec_r_est: int = 9
    literal_indices: bool = False
    budget: int | None = None

    def validate(self, n: int):
        if not (1.0 / n < self.eps < 1):
            raise ConfigurationError(f"eps={self.eps} must lie in (1/n, 1)")
        if self.k < 1 or self.k >= n:
            raise ConfigurationError("k must lie in [1, n)")
        if not self.mu >= 0 or not math.isfinite(self.mu):
            raise ConfigurationError("mu must be finite and >= 0")
        if not 0 < self.alpha_est < 1:
            raise ConfigurationError("alpha_est must lie in (0, 1)")
        if self.R_star is not None and self.R_star < 1:
            raise ConfigurationError("R* must be >= 1")


@dataclass
class RecoveryResult:
    chi: SparseVector
    chi_loop: SparseVector
    ledger: SampleLedger
    history: list = field(default_factory=list)   # chi after every (r, t) step
    rounds: int = 0


def _pow2_buckets(n: int, v: float) -> int:
    B = 1 << max(2, math.ceil(math.log2(max(4.0, v))))
    return min(B, max(4, n // 4))


def _estimation_bundle(source, rng, n, B, F, count, ledger) -> MeasurementBundle:
    bundle = MeasurementBundle()
    for _ in range(count):
        H = random_hashing(rng, n, B, F)
        z = int(rng.integers(0, n))
        bundle.add(H, z, measure(source, H, [z], ledger)[0])
    return bundle


def _prune(w: SparseVector, thr: float, keep=None) -> SparseVector:
    m = np.abs(w.values) >= thr
    if keep is not None and keep.size:
        m |= np.isin(w.indices, keep)
    return SparseVector(w.n, w.indices[m], w.values[m])


def recover_at_constant_snr(source: FrequencySource, chi: SparseVector, k2: int, eps: float,
                            rng: np.random.Generator, mu: float, ledger: SampleLedger | None = None,
                            F: int = 8, C_rec: float = 4.0, rounds: int | None = None,
                            r_est: int = 9, C_A: float = 4.0) -> SparseVector:
    """Correction chi'' for the residual x - chi once its head l1 norm is
    O(mu k). Not the cited construction: a plain locate / estimate / prune
    iteration at B ~ C_rec k2 / eps buckets, finished by one unpruned
    re-estimate of everything found.
    """
    n = source.n
    if ledger is None:
        ledger = SampleLedger(n)
    geom = LocationGeometry(n)
    B = _pow2_buckets(n, C_rec * k2 / eps)
    if rounds is None:
        rounds = math.ceil(math.log(1.0 / eps, 4)) + 2
    r_est = max(1, int(r_est)) | 1
    size_A = eval_set_size(n, C_A)
    thr = mu * math.sqrt(eps)
    out = SparseVector(n)
    for _ in range(rounds):
        H = random_hashing(rng, n, B, F)
        A = random_eval_points(rng, n, size_A, geom.Delta)
        with ledger.phase("location"):
            meas = measure(source, H, location_points(A, geom).ravel(), ledger)
        cur = chi + out
        L = locate_signal(cur, H, meas, A, geom)
        with ledger.phase("estimation"):
            bundle = _estimation_bundle(source, rng, n, B, F, r_est, ledger)
        w = estimate_values(cur, L, bundle)
        out = out + _prune(w, thr, keep=out.indices)
    if out.nnz:
        with ledger.phase("estimation"):
            bundle = _estimation_bundle(source, rng, n, B, F, r_est, ledger)
        out = out + estimate_values(chi + out, out.indices, bundle)
    return out


def run_sparse_fft(source: FrequencySource, cfg: RecoveryConfig, rng_seed=0,
                   ledger: SampleLedger | None = None, keep_history: bool = False) -> RecoveryResult:
    """Sparse FFT from samples of x_hat; see the module docstring."""
    n = source.n
    cfg.validate(n)
    rng = np.random.default_rng(rng_seed)
    if ledger is None:
        ledger = SampleLedger(n, cfg.budget)
    geom = LocationGeometry(n)
    C2_loc = cfg.C2 if cfg.C2_loc is None else cfg.C2_loc
    sched = PartitionSchedule(n, cfg.k, cfg.delta, cfg.C1, C2_loc, cfg.c_T, cfg.b_min)
    R_star = float(n) ** 3 if cfg.R_star is None else float(cfg.R_star)
    size_A = eval_set_size(n, cfg.C_A)

    # location measurements, q = 0 in every location hashing
    loc = []
    with ledger.phase("location"):
        for t in range(1, sched.T + 1):
            row = []
            for _ in range(sched.R_t(t)):
                H = random_hashing(rng, n, sched.B_t(t), cfg.F, q=0)
                A = random_eval_points(rng, n, size_A, geom.Delta)
                row.append((H, A, measure(source, H, location_points(A, geom).ravel(), ledger)))
            loc.append(row)

    B_est = _pow2_buckets(n, cfg.k / cfg.alpha_est ** 2)
    n_est = max(1, math.ceil(cfg.C_est * math.log2(n)))
    with ledger.phase("estimation"):
        est = _estimation_bundle(source, rng, n, B_est, cfg.F, n_est, ledger)

    chi_prev = SparseVector(n)     # chi^{(r', t')}
    corr = SparseVector(n)         # chi'
    history = []
    n_rounds = max(0, int(math.floor(math.log(R_star, 4))) - 2)
    for r in range(n_rounds):
        thr = R_star * cfg.mu * 0.25 ** r / 16.0
        for t in range(sched.T):
            chi_cur = chi_prev + corr
            # the printed loop locates and estimates against chi^{(r',t')},
            # which predates the last correction; default uses the current chi
            base = chi_prev if cfg.literal_indices else chi_cur
            L = np.unique(np.concatenate(
                [locate_signal(base, H, m, A, geom) for H, A, m in loc[t]] or [np.zeros(0, np.int64)]))
            w = estimate_values(base, L, est)
            corr = _prune(w, thr)
            chi_prev = chi_cur
            if keep_history:
                history.append(chi_prev + corr)
    chi_loop = chi_prev + corr
    chi_rec = recover_at_constant_snr(source, chi_loop, 2 * cfg.k, cfg.eps, rng, cfg.mu, ledger,
                                      F=cfg.F, C_rec=cfg.C_rec, rounds=cfg.rec_rounds,
                                      r_est=cfg.rec_r_est, C_A=cfg.C_A)
    return RecoveryResult(chi_loop + chi_rec, chi_loop, ledger, history, n_rounds)


def sparse_fft(source: FrequencySource, cfg: RecoveryConfig, rng_seed=0) -> SparseVector:
    return run_sparse_fft(source, cfg, rng_seed).chi

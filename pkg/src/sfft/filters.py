"""Flat filters with B buckets and sharpness F.

The filter lives on the sparse (time) side as a real, symmetric window G
that is ~1 over one bucket width and decays like |j|^-(F-1) beyond it, while
its transform G_hat is supported on O(F*B) taps of the sampled side.

Construction: G = box_h (*) K where box_h is the indicator of |j| <= h,
h ~ 0.75 n/B, and K = D^F / sum(D^F) with D the length-M Dirichlet kernel,
M ~ 4B. Since F is even, K >= 0 and sums to one, so 0 <= G <= 1 without
clipping. K_hat is the F-fold self-convolution of a width-M boxcar, hence
compactly supported on F(M-1)+1 taps, and so is G_hat = box_h_hat * K_hat.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dft import is_power_of_two
from .errors import ConfigurationError, InvalidBucketing, InvalidSharpness

__all__ = ["FlatFilter", "build_filter", "eval_G", "check_flatness"]

# Dirichlet length is about SUPPORT_CONST * B; the exhaustive (B, F) scan at
# n=4096 passes from 3.5 upward, 4 leaves margin everywhere.
SUPPORT_CONST = 4.0
PLATEAU = 0.75


@dataclass(frozen=True, eq=False)
class FlatFilter:
    n: int
    B: int
    F: int
    G: np.ndarray = field(repr=False)          # length n, indexed by j mod n
    taps: np.ndarray = field(repr=False)       # centred offsets of nonzero G_hat
    ghat: np.ndarray = field(repr=False)       # G_hat at those offsets (real)
    half_width: int = 0
    dirichlet_len: int = 0
    support_const: float = SUPPORT_CONST

    @property
    def support_size(self) -> int:
        return int(self.taps.size)

    def ghat_dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.taps % self.n] = self.ghat
        return out


def _dirichlet_power(n: int, M: int, F: int) -> np.ndarray:
    """D_j**F for j in [0, n/2], D_j = sin(pi M j/n) / (M sin(pi j/n))."""
    j = np.arange(n // 2 + 1, dtype=np.int64)
    # reduce M*j mod 2n before scaling so the sine keeps full relative accuracy
    num = np.sin(np.pi * ((M * j) % (2 * n)) / n)
    den = M * np.sin(np.pi * j / n)
    d = np.ones(j.size)
    d[1:] = num[1:] / den[1:]
    return d ** F


def _box_smooth(Kh: np.ndarray, n: int, h: int) -> np.ndarray:
    """G_c = sum_{|l|<=h} K_{c-l} for c in [0, n/2], K symmetric on Z_n.

    Uses tail sums taken from the antipode inward, so tiny far-field values
    keep relative (not just absolute) accuracy.
    """
    half = n // 2
    T = np.concatenate([np.cumsum(Kh[::-1])[::-1], [0.0]])  # T[d] = sum_{l=d}^{n/2} K_l

    def mass(a, b):
        # sum of K_l for integer l in [a, b] with -n/2 < a <= b <= n/2
        lo = np.maximum(a, 0)
        pos = np.where(b >= lo, T[np.clip(lo, 0, half + 1)] - T[np.clip(b + 1, 0, half + 1)], 0.0)
        hi = np.minimum(b, -1)
        neg = np.where(hi >= a, T[np.clip(-hi, 0, half + 1)] - T[np.clip(-a + 1, 0, half + 1)], 0.0)
        return pos + neg

    c = np.arange(half + 1)
    a, b = c - h, c + h
    wrap = b > half
    g = np.where(wrap,
                 mass(a, np.full_like(b, half)) + mass(np.full_like(a, -half + 1), np.minimum(b - n, half)),
                 mass(a, np.minimum(b, half)))
    return np.clip(g, 0.0, 1.0)


def check_flatness(G: np.ndarray, n: int, B: int, F: int) -> dict:
    """Pointwise check of the three flat-filter conditions; returns worst ratios."""
    j = np.arange(n)
    a = np.abs(np.where(j > n // 2, j - n, j))
    leak = 0.25 ** (F - 1)
    c1 = bool(np.all((G >= 0) & (G <= 1)))
    inner = a <= n / (2 * B)
    c2 = bool(np.all(G[inner] >= 1 - leak))
    outer = a >= n / B
    bound = leak * (n / (B * np.maximum(a, 1).astype(float))) ** (F - 1)
    c3 = bool(np.all(G[outer] <= bound[outer]))
    return {
        "range": c1,
        "plateau": c2,
        "decay": c3,
        "plateau_ratio": float((1 - G[inner]).max() / leak),
        "decay_ratio": float((G[outer] / bound[outer]).max()) if outer.any() else 0.0,
    }


@lru_cache(maxsize=128)
def _build(n: int, B: int, F: int, support_const: float, plateau: float) -> FlatFilter:
    M = 2 * int(support_const * B / 2) + 1
    h = int(round(plateau * n / B))
    if n // B <= 2:
        # two taps per bucket: the plain indicator of |j| <= 1 is already flat
        M, h = 1, 1
        Kh = np.zeros(n // 2 + 1)
        Kh[0] = 1.0
    else:
        Kh = _dirichlet_power(n, M, F)
        # full-circle normalisation: l = 0 and n/2 once, others twice
        Kh = Kh / (2 * Kh.sum() - Kh[0] - Kh[-1])
    gh = _box_smooth(Kh, n, h)
    G = np.concatenate([gh, gh[1:-1][::-1]])

    # G_hat_f = Dir_h(f) * K_hat(f) / sqrt(n), with K_hat the unnormalised DFT of K
    K = np.concatenate([Kh, Kh[1:-1][::-1]])
    khat = np.fft.fft(K).real
    f = np.arange(n)
    fc = np.where(f > n // 2, f - n, f)
    s = np.sin(np.pi * f / n)
    dirh = np.full(n, 2.0 * h + 1)
    nz = s != 0
    dirh[nz] = np.sin(np.pi * ((((2 * h + 1) * f) % (2 * n))[nz]) / n) / s[nz]
    ghat = dirh * khat / np.sqrt(n)
    radius = F * (M - 1) // 2 if M > 1 else n
    if 2 * radius + 1 < n:
        keep = np.abs(fc) <= radius
    else:
        keep = np.ones(n, dtype=bool)
    taps = np.sort(fc[keep])
    vals = ghat[taps % n]
    G.setflags(write=False)
    vals.setflags(write=False)
    taps.setflags(write=False)
    rep = check_flatness(G, n, B, F)
    if not (rep["range"] and rep["plateau"] and rep["decay"]):
        raise ConfigurationError(f"filter ({n},{B},{F}) fails flatness check: {rep}")
    return FlatFilter(n=n, B=B, F=F, G=G, taps=taps, ghat=vals, half_width=h,
                      dirichlet_len=M, support_const=support_const)


def build_filter(n: int, B: int, F: int, support_const: float = SUPPORT_CONST,
                 plateau: float = PLATEAU) -> FlatFilter:
    """Construct an (n, B, F)-flat filter; cached per parameter tuple.

    The three flatness conditions are checked pointwise once per build and a
    violation raises ConfigurationError.
    """
    if not is_power_of_two(n):
        raise ConfigurationError(f"n={n} is not a power of two")
    if not is_power_of_two(B) or B >= n:
        raise InvalidBucketing(f"B={B} must be a power of two below n={n}")
    if F < 2 or F % 2:
        raise InvalidSharpness(f"F={F} must be an even integer >= 2")
    return _build(int(n), int(B), int(F), float(support_const), float(plateau))


def eval_G(filt: FlatFilter, offset):
    """G at a circular offset (scalar or array)."""
    return filt.G[np.asarray(offset) % filt.n]

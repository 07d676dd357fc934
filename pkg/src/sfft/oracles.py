"""Brute-force evaluators for the estimation-error functionals.

These are test and diagnostic tools (O(n) per coordinate or worse); the
recovery path never calls them. All functionals are relative to a head set S
passed explicitly.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .hashing import Hashing

__all__ = [
    "quant",
    "e_head",
    "e_head_multi",
    "e_head_vector",
    "e_tail",
    "e_tail_set",
    "e_tail_multi",
    "mu_sq",
    "e_tail_H",
    "e_tail_H_multi",
    "is_majorant",
]


def quant(values: Iterable[float], f: float) -> float:
    """The ceil(f*s)-th largest of s values."""
    v = np.sort(np.asarray(list(values), dtype=float))[::-1]
    s = v.size
    if s == 0:
        raise DomainError("quant of an empty list")
    if not 0 < f <= 1:
        raise DomainError("quantile level must lie in (0, 1]")
    rank = min(s, max(1, math.ceil(f * s - 1e-9)))
    return float(v[rank - 1])


def _as_set(S) -> np.ndarray:
    return np.asarray(sorted(set(int(v) for v in S)), dtype=np.int64)


def e_head(i: int, H: Hashing, x, S) -> float:
    """G_{o_i(i)}^-1 sum_{j in S, j != i} G_{o_i(j)} |x_j|."""
    x = np.asarray(x)
    S = _as_set(S)
    S = S[S != i]
    if S.size == 0:
        return 0.0
    gi = H.G_at(H.offset(i, i))
    return float((H.G_at(H.offset(i, S)) * np.abs(x[S])).sum() / gi)


def e_head_multi(i: int, Hs: Sequence[Hashing], x, S) -> float:
    return quant([e_head(i, H, x, S) for H in Hs], 0.2)


def e_head_vector(St, Hs: Sequence[Hashing], x, S) -> np.ndarray:
    """Per-element multi-hashing head error over the elements of St."""
    return np.array([e_head_multi(int(i), Hs, x, S) for i in St])


def _tail_sum(i: int, H: Hashing, z, x, S) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    mask = np.ones(n, dtype=bool)
    mask[_as_set(S)] = False
    mask[i] = False
    j = np.flatnonzero(mask)
    z = np.atleast_1d(np.asarray(z, dtype=np.int64))
    g = H.G_at(H.offset(i, j)) * x[j]
    d = (((j - i) % n) * H.perm.sigma) % n
    ph = np.exp(2j * np.pi * ((z[:, None] % n) * d[None, :] % n) / n)
    return np.abs(ph @ g) / H.G_at(H.offset(i, i))


def e_tail(i: int, H: Hashing, z: int, x, S) -> float:
    """|G_{o_i(i)}^-1 sum_{j not in S u {i}} G_{o_i(j)} x_j omega^{z sigma (j - i)}|."""
    return float(_tail_sum(i, H, z, x, S)[0])


def e_tail_set(i: int, H: Hashing, Z, x, S) -> float:
    """quant^{1/5} of e_tail over the evaluation points Z for one hashing."""
    return quant(_tail_sum(i, H, list(Z), x, S), 0.2)


def e_tail_multi(i: int, pairs: Sequence[tuple[Hashing, int]], x, S) -> float:
    """quant^{1/5} over (H_r, z_r) of e_tail."""
    return quant([e_tail(i, H, z, x, S) for H, z in pairs], 0.2)


def mu_sq(i: int, H: Hashing, x) -> float:
    """G_{o_i(i)}^-2 sum_{j != i} |x_j|^2 G_{o_i(j)}^2."""
    x = np.asarray(x)
    j = np.flatnonzero(np.arange(x.size) != i)
    g = H.G_at(H.offset(i, j))
    return float((np.abs(x[j]) ** 2 * g ** 2).sum() / H.G_at(H.offset(i, i)) ** 2)


def e_tail_H(i: int, H: Hashing, A, x, S, H_set) -> float:
    """40 mu + sum_w |e_tail(H, {alpha + w beta}) - 40 mu|_+."""
    base = 40.0 * math.sqrt(mu_sq(i, H, x))
    n = H.n
    total = base
    for w in H_set:
        Z = [(int(al) + int(w) * int(be)) % n for al, be in A]
        total += max(0.0, e_tail_set(i, H, Z, x, S) - base)
    return total


def e_tail_H_multi(i: int, patterns: Sequence[tuple[Hashing, Sequence]], x, S, H_set) -> float:
    return quant([e_tail_H(i, H, A, x, S, H_set) for H, A in patterns], 0.2)


def is_majorant(y, x, S) -> bool:
    """|x_i| <= |y_i| for every i in S."""
    S = _as_set(S)
    y, x = np.asarray(y), np.asarray(x)
    if y.shape != x.shape:
        raise DomainError("length mismatch")
    return bool(np.all(np.abs(x[S]) <= np.abs(y[S])))

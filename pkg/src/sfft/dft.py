"""Orthonormal DFT on power-of-two lengths, signal containers and file IO.

Conventions: ``x`` lives in the time domain and is the sparse side; ``x_hat``
is its orthonormal transform,

    x_hat[f] = n**-0.5 * sum_i x[i] * exp(-2j*pi*i*f/n),

and the inverse carries the conjugate kernel with the same scaling.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Domain",
    "Signal",
    "SparseVector",
    "is_power_of_two",
    "forward_dft",
    "inverse_dft",
    "fft_radix2",
    "circular_convolve",
    "write_signal",
    "read_signal",
]


class Domain(str, Enum):
    TIME = "time"
    FREQUENCY = "frequency"


def is_power_of_two(n) -> bool:
    n = int(n)
    return n >= 1 and (n & (n - 1)) == 0


def _check_length(n: int) -> None:
    if not is_power_of_two(n):
        raise ConfigurationError(f"length {n} is not a power of two")


@dataclass(frozen=True)
class Signal:
    """A length-n complex vector tagged with the domain it lives in."""

    values: np.ndarray
    domain: Domain = Domain.TIME

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).ravel()
        _check_length(v.size)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain", Domain(self.domain))

    @property
    def n(self) -> int:
        return self.values.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


class SparseVector:
    """Sparse complex vector on Z_n stored as sorted (index, value) arrays.

    Explicit zeros are dropped on construction, so ``nnz`` is the true
    support size.
    """

    __slots__ = ("n", "indices", "values")

    def __init__(self, n: int, indices=(), values=()):
        self.n = int(n)
        idx = np.asarray(indices, dtype=np.int64).ravel()
        val = np.asarray(values, dtype=np.complex128).ravel()
        if idx.size != val.size:
            raise ConfigurationError("indices and values differ in length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ConfigurationError("sparse index out of range [0, n)")
        if idx.size:
            # merge duplicates, sort, drop zeros
            uniq, inv = np.unique(idx, return_inverse=True)
            acc = np.zeros(uniq.size, dtype=np.complex128)
            np.add.at(acc, inv, val)
            keep = acc != 0
            idx, val = uniq[keep], acc[keep]
        self.indices = idx
        self.values = val

    @classmethod
    def zeros(cls, n: int) -> "SparseVector":
        return cls(n)

    @classmethod
    def from_dict(cls, n: int, entries: Mapping[int, complex]) -> "SparseVector":
        keys = list(entries.keys())
        return cls(n, keys, [entries[k] for k in keys])

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=np.complex128).ravel()
        idx = np.flatnonzero(x)
        return cls(x.size, idx, x[idx])

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def __len__(self):
        return self.nnz

    def to_dict(self) -> dict:
        return {int(i): complex(v) for i, v in zip(self.indices, self.values)}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.complex128)
        out[self.indices] = self.values
        return out

    def get(self, idx) -> np.ndarray:
        """Values at arbitrary indices (zero off the support)."""
        idx = np.asarray(idx, dtype=np.int64)
        pos = np.searchsorted(self.indices, idx)
        pos = np.clip(pos, 0, max(self.nnz - 1, 0))
        if self.nnz == 0:
            return np.zeros(idx.shape, dtype=np.complex128)
        hit = self.indices[pos] == idx
        return np.where(hit, self.values[pos], 0)

    def __add__(self, other: "SparseVector") -> "SparseVector":
        if other.n != self.n:
            raise ConfigurationError("length mismatch")
        return SparseVector(self.n, np.concatenate([self.indices, other.indices]),
                            np.concatenate([self.values, other.values]))

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "SparseVector":
        return SparseVector(self.n, self.indices, self.values * c)

    def restrict(self, idx: Iterable[int]) -> "SparseVector":
        keep = np.isin(self.indices, np.asarray(list(idx), dtype=np.int64))
        return SparseVector(self.n, self.indices[keep], self.values[keep])

    def norm(self, order=2) -> float:
        return float(np.linalg.norm(self.values, order)) if self.nnz else 0.0

    def __repr__(self):
        return f"SparseVector(n={self.n}, nnz={self.nnz})"


def fft_radix2(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unnormalised iterative radix-2 DFT along the last axis.

    Computes sum_i a_i exp(-+2j pi i f / n) (minus sign for the forward
    direction). Bit-reversal first, then log2(n) vectorised butterfly stages.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[-1]
    _check_length(n)
    if n == 1:
        return a
    bits = n.bit_length() - 1
    # bit-reversal permutation
    rev = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[..., rev]
    sign = 1.0 if inverse else -1.0
    half = 1
    while half < n:
        tw = np.exp(sign * 1j * np.pi * np.arange(half) / half)
        blk = a.reshape(a.shape[:-1] + (n // (2 * half), 2, half))
        top = blk[..., 0, :].copy()
        bot = blk[..., 1, :] * tw
        blk[..., 0, :] = top + bot
        blk[..., 1, :] = top - bot
        a = blk.reshape(a.shape)
        half *= 2
    return a


def _values_of(x, domain: Domain):
    if isinstance(x, Signal):
        if x.domain != domain:
            raise ConfigurationError(f"expected a {domain.value}-domain signal, got {x.domain.value}")
        return x.values
    v = np.asarray(x, dtype=np.complex128)
    _check_length(v.shape[-1])
    return v


def forward_dft(x) -> Signal | np.ndarray:
    """Orthonormal forward DFT. Accepts a time-domain Signal or a raw array."""
    v = _values_of(x, Domain.TIME)
    out = fft_radix2(v) / np.sqrt(v.shape[-1])
    return Signal(out, Domain.FREQUENCY) if isinstance(x, Signal) else out


def inverse_dft(x_hat) -> Signal | np.ndarray:
    """Orthonormal inverse DFT; exact inverse of :func:`forward_dft`."""
    v = _values_of(x_hat, Domain.FREQUENCY)
    out = fft_radix2(v, inverse=True) / np.sqrt(v.shape[-1])
    return Signal(out, Domain.TIME) if isinstance(x_hat, Signal) else out


def circular_convolve(x, y) -> np.ndarray:
    """(x * y)_i = sum_j x_{i-j} y_j by direct O(n^2) summation."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    n = x.size
    i = np.arange(n)
    return (x[(i[:, None] - i[None, :]) % n] * y[None, :]).sum(axis=1)


# -- binary signal files -----------------------------------------------------

_MAGIC = b"SFFT"
_HEADER = struct.Struct("<4sIB")
_DOMAIN_CODE = {Domain.TIME: 0, Domain.FREQUENCY: 1}


def write_signal(path, signal: Signal) -> None:
    """Write ``magic, u32 n, u8 domain`` then n little-endian (re, im) float64 pairs."""
    path = Path(path)
    body = np.empty(2 * signal.n, dtype="<f8")
    body[0::2] = signal.values.real
    body[1::2] = signal.values.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, signal.n, _DOMAIN_CODE[signal.domain]))
        fh.write(body.tobytes())


def read_signal(path) -> Signal:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read signal file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ConfigurationError(f"{path}: truncated header")
    magic, n, code = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ConfigurationError(f"{path}: bad magic {magic!r}")
    if code not in (0, 1):
        raise ConfigurationError(f"{path}: unknown domain code {code}")
    _check_length(n)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * n:
        raise ConfigurationError(f"{path}: expected {2 * n} floats, found {body.size}")
    vals = body[0::2] + 1j * body[1::2]
    return Signal(vals, Domain.TIME if code == 0 else Domain.FREQUENCY)

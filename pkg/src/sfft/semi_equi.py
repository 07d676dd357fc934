"""Semi-equispaced Fourier transform of a sparse vector.

Given a sparse time-domain vector x we want a contiguous band of its
orthonormal DFT, possibly along a dilated and shifted grid

    y[j'] = x_hat[sigma*j' + shift],   -k/2 <= j' <= k/2.

Substituting p_l = sigma*l mod n turns this into a plain band of a
trigonometric sum with integer nodes p_l, which is evaluated by spreading the
coefficients onto an oversampled grid with a compact
exponential-of-semicircle kernel, one FFT of length ~2k, and a diagonal
deconvolution. Cost is O(nnz * w + k log k) with w = O(log 1/delta).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .dft import SparseVector
from .errors import ConfigurationError, DomainError, InvalidPermutation

__all__ = ["SemiEquiPlan", "semi_equi_fft", "kernel_params"]


def kernel_params(delta: float) -> tuple[int, float]:
    """Kernel width (grid points) and shape parameter for target precision."""
    if not 0 < delta < 1:
        raise DomainError("precision must lie in (0, 1)")
    w = int(np.ceil(np.log10(1.0 / delta))) + 2
    return w, 2.30 * w


def _kernel(u, w, beta):
    z = 1.0 - (2.0 * u / w) ** 2
    return np.where(z > 0, np.exp(beta * (np.sqrt(np.clip(z, 0, None)) - 1.0)), 0.0)


@lru_cache(maxsize=64)
def _kernel_ft(w: int, beta: float, grid: int) -> np.ndarray:
    """phi_hat(kappa/grid) for kappa in [-grid/2, grid/2), by Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(4 * w + 40)
    u = nodes * (w / 2.0)
    phi = _kernel(u, w, beta) * weights * (w / 2.0)
    kappa = np.arange(-grid // 2, grid // 2)
    return (phi[None, :] * np.cos(2 * np.pi * np.outer(kappa, u) / grid)).sum(axis=1)


class SemiEquiPlan:
    """Precomputed spreading stencil for fixed nodes and a fixed output band.

    Parameters
    ----------
    n : ambient length.
    nodes : integer nodes p_l in Z_n (already dilated by sigma).
    lo, count : output modes are lo, lo+1, ..., lo+count-1.
    delta : target precision relative to the coefficient l2 norm.
    """

    def __init__(self, n: int, nodes, lo: int, count: int, delta: float = 1e-9):
        self.n = int(n)
        self.nodes = np.asarray(nodes, dtype=np.int64) % self.n
        self.lo = int(lo)
        self.count = int(count)
        w, beta = kernel_params(delta)
        grid = 1
        while grid < 2 * self.count + 2 * w:
            grid *= 2
        self.w, self.beta, self.grid = w, beta, grid
        # centre of the band; coefficients get modulated by it
        self.centre = self.lo + self.count // 2
        pos = self.nodes * (grid / self.n)  # exact for power-of-two sizes, up to rounding
        base = np.floor(pos - w / 2.0).astype(np.int64) + 1
        offs = base[:, None] + np.arange(w)[None, :]
        self.rows = offs % grid
        self.weights = _kernel(pos[:, None] - offs, w, beta)
        ft = _kernel_ft(w, beta, grid)
        kappa = np.arange(self.count) + self.lo - self.centre
        self.kappa = kappa
        self.deconv = 1.0 / ft[kappa + grid // 2]
        self.phase = np.exp(-2j * np.pi * ((self.nodes * (self.centre % self.n)) % self.n) / self.n)

    def apply(self, coeffs) -> np.ndarray:
        """Evaluate n^-1/2 sum_l c_l exp(-2 pi i p_l K / n) for K in the band.

        ``coeffs`` has shape (nnz,) or (nnz, E); the result has shape
        (count,) or (E, count).
        """
        c = np.asarray(coeffs, dtype=np.complex128)
        single = c.ndim == 1
        if single:
            c = c[:, None]
        E = c.shape[1]
        out_shape = (E, self.count)
        if self.nodes.size == 0:
            out = np.zeros(out_shape, dtype=np.complex128)
            return out[0] if single else out
        c = c * self.phase[:, None]
        grid = np.zeros((self.grid, E), dtype=np.complex128)
        for o in range(self.w):
            np.add.at(grid, self.rows[:, o], self.weights[:, o, None] * c)
        spec = np.fft.fft(grid, axis=0)
        out = spec[self.kappa % self.grid, :] * self.deconv[:, None]
        out = out.T / np.sqrt(self.n)
        return out[0] if single else out


def semi_equi_fft(x: SparseVector, k: int, delta: float = 1e-9, sigma: int = 1, shift: int = 0):
    """Approximate x_hat at j = sigma*j' + shift (mod n) for |j'| <= k/2.

    Returns ``(freqs, values)`` with ``freqs[t]`` the frequency index of
    ``values[t]``, ordered by j' from -floor(k/2) to floor(k/2). Every value is
    within delta*||x||_2 of the exact orthonormal DFT.
    """
    n = x.n
    if sigma % 2 == 0:
        raise InvalidPermutation(f"sigma={sigma} is even")
    if not 0 < k <= n:
        raise ConfigurationError(f"band size k={k} must lie in (0, n]")
    half = k // 2
    jp = np.arange(-half, half + 1)
    freqs = (sigma * jp + shift) % n
    if x.nnz == 0:
        return freqs, np.zeros(jp.size, dtype=np.complex128)
    # x_hat[sigma j' + shift] = n^-1/2 sum_l (x_l w^{-l shift}) w^{-(sigma l) j'}
    coeffs = x.values * np.exp(-2j * np.pi * ((x.indices * (shift % n)) % n) / n)
    plan = SemiEquiPlan(n, sigma * x.indices, -half, jp.size, delta)
    return freqs, plan.apply(coeffs)

"""Dense ground truth: best k-term error, noise level and head set."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GroundTruth", "compute_ground_truth", "top_k_indices", "l2l2_error"]


def top_k_indices(x, k: int) -> np.ndarray:
    """Indices of the k largest magnitudes; ties go to the lower index."""
    mag = np.abs(np.asarray(x))
    k = max(0, min(int(k), mag.size))
    # stable sort on -|x| keeps lower indices first among equal magnitudes
    return np.sort(np.argsort(-mag, kind="stable")[:k])


@dataclass(frozen=True)
class GroundTruth:
    x: np.ndarray
    k: int
    top_k: np.ndarray
    err_k: float
    mu: float
    S: np.ndarray

    @property
    def best_k(self) -> np.ndarray:
        y = np.zeros_like(self.x)
        y[self.top_k] = self.x[self.top_k]
        return y


def compute_ground_truth(x, k: int) -> GroundTruth:
    """err_k = l2 norm outside the top k; mu^2 = err_k^2 / k; S = {|x_i| > mu}."""
    x = np.asarray(getattr(x, "values", x), dtype=np.complex128)
    top = top_k_indices(x, k)
    rest = np.ones(x.size, dtype=bool)
    rest[top] = False
    err = float(np.linalg.norm(x[rest]))
    mu = err / np.sqrt(k) if k > 0 else 0.0
    S = np.flatnonzero(np.abs(x) > mu)
    return GroundTruth(x=x, k=int(k), top_k=top, err_k=err, mu=mu, S=S)


def l2l2_error(x, chi, k: int):
    """(||x - chi||_2^2, ||x - chi||_2^2 / err_k^2, err_k_is_zero).

    The relative error is NaN when err_k = 0; the flag says so.
    """
    x = np.asarray(getattr(x, "values", x), dtype=np.complex128)
    c = chi.to_dense() if hasattr(chi, "to_dense") else np.asarray(chi, dtype=np.complex128)
    ab = float(np.linalg.norm(x - c) ** 2)
    ek = compute_ground_truth(x, k).err_k
    if ek == 0:
        return ab, float("nan"), True
    return ab, ab / ek ** 2, False

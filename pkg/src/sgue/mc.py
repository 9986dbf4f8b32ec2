"""Monte Carlo estimate of E_N(z, t) from sampled GUE spectra.

Spectra come from the beta = 2 tridiagonal Hermite model, scaled so the
eigenvalue density carries exp(-x^2/2): diagonal N(0, 1), off-diagonal
sqrt(chi^2_{2(N-k)} / 2). Each chunk of samples draws from its own Philox
stream keyed by (seed, chunk index), so results do not depend on how
chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .precision import InputError

__all__ = [
    "SpectrumSample",
    "EstimateResult",
    "stream",
    "sample_spectrum",
    "sample_spectra",
    "estimate_en",
    "CHUNK",
]

CHUNK = 10_000


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, index)."""
    if seed < 0 or index < 0:
        raise InputError("seed and stream index must be nonnegative")
    key = np.array([seed % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SpectrumSample:
    N: int
    eigenvalues: tuple
    stream_id: tuple = (0, 0)


def sample_spectra(N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` spectra as a (count, N) array, each row sorted ascending."""
    if N < 1:
        raise InputError("N must be positive")
    diag = rng.standard_normal((count, N))
    if N == 1:
        return diag
    dof = 2 * np.arange(N - 1, 0, -1)
    off = np.sqrt(rng.chisquare(dof, size=(count, N - 1)) / 2)
    H = np.zeros((count, N, N))
    idx = np.arange(N)
    H[:, idx, idx] = diag
    H[:, idx[:-1], idx[1:]] = off
    H[:, idx[1:], idx[:-1]] = off
    return np.linalg.eigvalsh(H)


def sample_spectrum(N: int, rng: np.random.Generator, stream_id=(0, 0)) -> SpectrumSample:
    ev = sample_spectra(N, 1, rng)[0]
    return SpectrumSample(N, tuple(float(x) for x in ev), tuple(stream_id))


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    std_error: float
    samples: int
    rejected: int = 0

    def to_json(self) -> dict:
        return {
            "mean": repr(self.mean),
            "std_error": repr(self.std_error),
            "samples": self.samples,
            "rejected": self.rejected,
        }


def _weights(ev: np.ndarray, z: float, t: float) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inv = 1.0 / ev
        expo = np.where(ev == 0, -np.inf, -0.5 * z * z * inv * inv + t * inv)
    bound = t * t / (2 * z * z)
    if np.any(expo > bound + 1e-12 * max(1.0, bound)):
        raise ArithmeticError("sampled factor exceeds exp(t^2/(2 z^2))")
    return np.exp(expo.sum(axis=1))


def estimate_en(N: int, z, t, num_samples: int, seed: int = 0) -> EstimateResult:
    """Sample mean and standard error of prod_j exp(-z^2/(2 x_j^2) + t/x_j).

    Every factor is at most exp(t^2/(2 z^2)), so the estimator has finite
    variance for z > 0. Chunk statistics are merged in chunk order.
    """
    z, t = float(z), float(t)
    if num_samples < 1000:
        raise InputError("num_samples must be at least 1000")
    if not z > 0:
        raise InputError("z must be positive; the estimator is unbounded at z = 0")
    n_tot, mean, m2 = 0, 0.0, 0.0
    for chunk, start in enumerate(range(0, num_samples, CHUNK)):
        count = min(CHUNK, num_samples - start)
        ev = sample_spectra(N, count, stream(seed, chunk))
        w = _weights(ev, z, t)
        cm = float(np.mean(w))
        c2 = float(np.sum((w - cm) ** 2))
        # Chan et al. pairwise merge
        delta = cm - mean
        n_new = n_tot + count
        mean += delta * count / n_new
        m2 += c2 + delta * delta * n_tot * count / n_new
        n_tot = n_new
    var = m2 / (n_tot - 1)
    return EstimateResult(mean, math.sqrt(var / n_tot), n_tot, 0)

"""Measurement model ``y_t = A_t x_t + w_t`` with bounded noise.

Random streams come from :class:`numpy.random.SeedSequence` keyed by integer
tuples, e.g. ``(master_seed, realization, purpose, t)``, so any frame of any
realization can be regenerated independently of the others (PCG64 under
the hood).
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeasurementFrame",
    "NoiseSpec",
    "gen_bounded_uniform_noise",
    "gen_gaussian_unit_columns",
    "measure",
    "noise_bound",
    "stream",
]


def stream(*key):
    """Independent generator for an integer key such as ``(seed, r, t)``."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return stream(*seed)
    return stream(seed)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-entry uniform(-c, c) noise."""
    c: float

    def __post_init__(self):
        if not (self.c >= 0):
            raise ValueError(f"noise half-width must be >= 0, got {self.c}")


@dataclass(frozen=True)
class MeasurementFrame:
    t: int
    y: np.ndarray
    epsilon: float
    noise: np.ndarray = None

    @property
    def n_t(self):
        return self.y.shape[0]


def noise_bound(c, n):
    """Worst-case l2 norm of ``n`` entries bounded by ``c``: ``c * sqrt(n)``."""
    return float(c) * np.sqrt(n)


def gen_gaussian_unit_columns(n, m, seed):
    """``n x m`` zero-mean Gaussian matrix with unit-norm columns."""
    if n < 1 or m < 1:
        raise ValueError(f"matrix shape must be positive, got ({n}, {m})")
    A = _rng(seed).standard_normal((n, m))
    A /= np.linalg.norm(A, axis=0)
    return A


def gen_bounded_uniform_noise(n, spec, seed):
    if n < 1:
        raise ValueError("noise length must be >= 1")
    if isinstance(spec, (int, float)):
        spec = NoiseSpec(float(spec))
    if spec.c == 0:
        return np.zeros(n)
    return _rng(seed).uniform(-spec.c, spec.c, size=n)


def measure(A, x, w, t=0, c=None):
    """Form a frame ``y = A x + w``.

    ``epsilon`` is ``c * sqrt(n)`` when the noise half-width `c` is given,
    otherwise ``||w||_2`` (the tightest bound for the realized noise).
    """
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if A.ndim != 2 or A.shape[1] != x.shape[0] or A.shape[0] != w.shape[0]:
        raise ValueError(f"dimension mismatch: A {A.shape}, x {x.shape}, w {w.shape}")
    eps = noise_bound(c, A.shape[0]) if c is not None else float(np.linalg.norm(w))
    if np.linalg.norm(w) > eps * (1 + 1e-12):
        raise ValueError("injected noise exceeds the declared bound")
    return MeasurementFrame(t=int(t), y=A @ x + w, epsilon=eps, noise=w)

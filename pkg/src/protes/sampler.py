"""Sampling multi-indices from a TT tensor.

Each draw walks the modes left to right, forming the univariate conditional
of the next index from the left prefix product and the precomputed right
interfaces. Absolute values are used throughout, so for a nonnegative tensor
the draws are exact samples from ``p / sum(p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_train import TensorTrain, right_interfaces


@dataclass(frozen=True)
class SampleBatch:
    indices: np.ndarray  # (K, d) int64
    rng_seed: int

    def __len__(self):
        return self.indices.shape[0]


def categorical_draw(weights, u: float) -> int:
    """Inverse-CDF draw: smallest ``n`` whose cumulative normalised weight exceeds ``u``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights sum to zero")
    return int(_inverse_cdf(w[None, :], np.array([u]))[0])


def _inverse_cdf(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    # w: (K, N) nonnegative rows with positive sums, u: (K,) in [0, 1)
    cum = np.cumsum(w, axis=1)
    target = u * cum[:, -1]
    n = (cum <= target[:, None]).sum(axis=1)
    # rounding can push the target past the last atom; fall back to the
    # last index carrying positive weight
    over = n >= w.shape[1]
    if np.any(over):
        last = w.shape[1] - 1 - np.argmax(w[over, ::-1] > 0, axis=1)
        n[over] = last
    return n


def _philox(rng_seed: int) -> np.random.Philox:
    if rng_seed < 0:
        raise ValueError("rng_seed must be nonnegative")
    return np.random.Philox(key=rng_seed)


def sample_uniforms(rng_seed: int, K: int, d: int) -> np.ndarray:
    """(K, d) uniforms from a counter-based stream keyed by ``rng_seed``.

    Row ``j`` is the block of draws ``[j*d, (j+1)*d)`` of that stream, so it
    depends only on (seed, j); see :func:`sample_uniform_row`.
    """
    return np.random.Generator(_philox(rng_seed)).random((K, d))


def sample_uniform_row(rng_seed: int, j: int, d: int) -> np.ndarray:
    """Row ``j`` of :func:`sample_uniforms`, computed without the rows before it."""
    bg = _philox(rng_seed)
    # Philox emits four 64-bit words per counter step, one word per double
    q, r = divmod(int(j) * int(d), 4)
    bg.advance(q)
    return np.random.Generator(bg).random(r + d)[r:]


def tt_sample(tt: TensorTrain, K: int, rng_seed: int) -> SampleBatch:
    """Draw ``K`` multi-indices with probability proportional to ``|p[x]|``.

    Sampling is with replacement. Every sample position owns an independent
    random stream, so the batch does not depend on evaluation order.
    """
    if K < 1:
        raise ValueError("K must be positive")
    U = sample_uniforms(rng_seed, K, tt.d)
    return SampleBatch(_sample_with_uniforms(tt, U), rng_seed)


def _sample_with_uniforms(tt: TensorTrain, U: np.ndarray) -> np.ndarray:
    K = U.shape[0]
    right = right_interfaces(tt)
    X = np.empty((K, tt.d), dtype=np.int64)
    left = np.ones((K, 1))
    rows = np.arange(K)
    for i, core in enumerate(tt.cores):
        # Z[k, n, :] = left[k] @ G_i[:, n, :]
        Z = np.einsum("kr,rns->kns", left, core)
        q = np.abs(Z @ right[i])
        if np.any(~np.isfinite(q)) or np.any(q.sum(axis=1) <= 0):
            raise ValueError(f"degenerate distribution at mode {i}")
        n = _inverse_cdf(q, U[:, i])
        X[:, i] = n
        left = Z[rows, n, :]
        m = np.max(np.abs(left), axis=1)
        m[m == 0] = 1.0
        left = left / m[:, None]
    return X

"""Tensor-train (TT) container and the read-only operations on it.

A TT tensor of shape ``(N_1, ..., N_d)`` is a list of order-3 cores; core ``i``
has shape ``(R_{i-1}, N_i, R_i)`` with ``R_0 = R_d = 1``. An element is the
product of the matrix slices ``G_i[:, n_i, :]`` selected by the multi-index.

Multi-indices are 0-based throughout the package (``n_i`` in ``[0, N_i)``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LOG_FLOOR = 1e-300
_LOG_FLOOR = np.log(LOG_FLOOR)
# beyond this gap the floor is below double resolution of |p|
_FLOOR_GAP = 40.0


def _add_floor(logp):
    logp = np.asarray(logp, dtype=float)
    return np.where(logp - _LOG_FLOOR > _FLOOR_GAP, logp, np.logaddexp(logp, _LOG_FLOOR))


@dataclass(frozen=True)
class TensorTrain:
    """Immutable list of TT-cores.

    The cores themselves are numpy arrays; callers must not mutate them in
    place while the tensor is shared (the learner always builds new cores).
    """

    cores: tuple[np.ndarray, ...]

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = tuple(np.asarray(c, dtype=float) for c in cores)
        _validate(cores)
        object.__setattr__(self, "cores", cores)

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def size(self) -> int:
        """Number of parameters stored in the cores."""
        return sum(c.size for c in self.cores)

    def __eq__(self, other):
        if not isinstance(other, TensorTrain) or self.d != other.d:
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.cores, other.cores))

    __hash__ = None

    def full(self) -> np.ndarray:
        """Dense tensor. Only sensible for small shapes."""
        res = np.ones((1, 1))
        for core in self.cores:
            r0, n, r1 = core.shape
            res = res @ core.reshape(r0, n * r1)
            res = res.reshape(-1, r1)
        return res.reshape(self.shape)

    def scaled(self, i: int, c: float) -> TensorTrain:
        cores = list(self.cores)
        cores[i] = cores[i] * c
        return TensorTrain(cores)

    def to_json(self) -> str:
        return json.dumps(
            {
                "shape": list(self.shape),
                "ranks": list(self.ranks),
                "cores": [c.ravel().tolist() for c in self.cores],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> TensorTrain:
        obj = json.loads(text)
        shape, ranks = obj["shape"], obj["ranks"]
        if len(obj["cores"]) != len(shape) or len(ranks) != len(shape) + 1:
            raise ValueError("inconsistent TT document")
        cores = [
            np.asarray(flat, dtype=float).reshape(ranks[i], shape[i], ranks[i + 1])
            for i, flat in enumerate(obj["cores"])
        ]
        return cls(cores)


def _validate(cores: tuple[np.ndarray, ...]) -> None:
    if len(cores) == 0:
        raise ValueError("empty shape")
    prev = 1
    for i, core in enumerate(cores):
        if core.ndim != 3:
            raise ValueError(f"core {i} is not order-3")
        if core.shape[0] != prev:
            raise ValueError(f"rank mismatch between cores {i - 1} and {i}")
        if min(core.shape) < 1:
            raise ValueError(f"core {i} has an empty axis")
        if not np.all(np.isfinite(core)):
            raise ValueError(f"core {i} has non-finite entries")
        prev = core.shape[2]
    if prev != 1:
        raise ValueError("last rank must be 1")


def tt_random(rank: int, shape: Sequence[int], rng_seed: int) -> TensorTrain:
    """Random TT with constant inner rank and entries i.i.d. uniform on (0, 1)."""
    shape = list(shape)
    if len(shape) == 0:
        raise ValueError("empty shape")
    if rank < 1:
        raise ValueError("zero rank")
    if any(n < 1 for n in shape):
        raise ValueError("mode sizes must be positive")
    rng = np.random.default_rng(rng_seed)
    d = len(shape)
    ranks = [1] + [rank] * (d - 1) + [1]
    cores = []
    for i, n in enumerate(shape):
        u = rng.random((ranks[i], n, ranks[i + 1]))
        # random() is [0, 1); keep the open interval
        u[u == 0.0] = np.finfo(float).tiny
        cores.append(u)
    return TensorTrain(cores)


def check_index(tt: TensorTrain, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (tt.d,):
        raise ValueError(f"multi-index has length {x.size}, expected {tt.d}")
    for i, (n, size) in enumerate(zip(x, tt.shape)):
        if not 0 <= n < size:
            raise IndexError(f"index out of bounds at mode {i}")
    return x


def tt_eval(tt: TensorTrain, x) -> float:
    """Value of the tensor at multi-index ``x`` (plain chained product)."""
    x = check_index(tt, x)
    v = np.ones(1)
    for core, n in zip(tt.cores, x):
        v = v @ core[:, n, :]
    return float(v[0])


def _log_forward(tt: TensorTrain, x: np.ndarray) -> tuple[np.ndarray, float]:
    # returns (unit max-norm final vector, accumulated log-scale)
    v = np.ones(1)
    logscale = 0.0
    for core, n in zip(tt.cores, x):
        v = v @ core[:, n, :]
        m = np.max(np.abs(v))
        if m == 0.0:
            return v, -np.inf
        v = v / m
        logscale += np.log(m)
    return v, logscale


def tt_log(tt: TensorTrain, x) -> float:
    """``log(|p[x]| + 1e-300)`` with per-step rescaling against over/underflow."""
    x = check_index(tt, x)
    v, logscale = _log_forward(tt, x)
    if not np.isfinite(logscale):
        return float(_LOG_FLOOR)
    # |p| = |v| * exp(logscale), |v| == 1 after the final rescale
    return float(_add_floor(logscale + np.log(abs(v[0]))))


def tt_log_batch(tt: TensorTrain, X) -> np.ndarray:
    """Vectorised :func:`tt_log` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] != tt.d:
        raise ValueError("expected a (batch, d) array of multi-indices")
    for i, n in enumerate(tt.shape):
        if X.size and (X[:, i].min() < 0 or X[:, i].max() >= n):
            raise IndexError(f"index out of bounds at mode {i}")
    v = np.ones((X.shape[0], 1))
    logscale = np.zeros(X.shape[0])
    for i, core in enumerate(tt.cores):
        slices = core.transpose(1, 0, 2)[X[:, i]]
        v = np.einsum("br,brs->bs", v, slices)
        m = np.max(np.abs(v), axis=1)
        zero = m == 0.0
        m[zero] = 1.0
        v = v / m[:, None]
        logscale += np.log(m)
        logscale[zero] = -np.inf
    with np.errstate(divide="ignore"):
        logp = logscale + np.log(np.abs(v[:, 0]))
    return _add_floor(logp)


def right_interfaces(tt: TensorTrain) -> list[np.ndarray]:
    """Right-to-left marginalisation vectors used for conditional sampling.

    Returns ``[v_2, ..., v_d, v_{d+1}]`` (so ``result[i]`` is the vector to the
    right of mode ``i``). ``v_{d+1} = [1]`` and
    ``v_i = (sum_n |G_i[:, n, :]|) v_{i+1}``, each rescaled to unit max-norm.
    """
    out = [np.ones(1)]
    for core in reversed(tt.cores[1:]):
        v = np.abs(core).sum(axis=1) @ out[-1]
        m = np.max(v)
        out.append(v / m if m > 0 else v)
    out.reverse()
    return out

"""The optimisation loop: sample, evaluate, keep the best ``k``, raise their likelihood.

The log-likelihood gradient is computed in closed form. For one multi-index
``x`` the value is ``p = L_{i-1} G_i[:, n_i, :] R_{i+1}`` for every mode ``i``,
so ``d log|p| / d G_i[:, n_i, :] = outer(L_{i-1}, R_{i+1}) / p``. Prefix and
suffix vectors are kept at unit max-norm; the scales cancel in that ratio.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .sampler import tt_sample
from .tensor_train import LOG_FLOOR, TensorTrain, tt_log_batch, tt_random

LOG_LOG_FLOOR = math.log(LOG_FLOOR)


@dataclass
class ProtesConfig:
    M: int = 10_000
    K: int = 100
    k: int = 10
    k_gd: int = 1
    lr: float = 0.05
    R: int = 5
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    normalize: bool = True

    def __post_init__(self):
        for name in ("M", "K", "k", "k_gd", "R"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.k <= self.K <= self.M:
            raise ValueError("need k <= K <= M")
        if not self.lr > 0:
            raise ValueError("lr must be positive")

    @property
    def iterations(self) -> int:
        return self.M // self.K


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, tt: TensorTrain) -> AdamState:
        return cls([np.zeros_like(c) for c in tt.cores], [np.zeros_like(c) for c in tt.cores])


@dataclass
class TraceRecord:
    iter: int
    evals: int
    best_y: float
    best_x: Optional[list[int]]
    t_s: float


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self, header: Optional[dict] = None) -> str:
        lines = []
        if header is not None:
            lines.append(json.dumps({"header": header}, sort_keys=True))
        lines.extend(json.dumps(asdict(r)) for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> RunTrace:
        trace = cls()
        for line in text.splitlines():
            obj = json.loads(line)
            if "header" in obj:
                continue
            trace.records.append(TraceRecord(**obj))
        return trace


def _check_selection(tt: TensorTrain, selected) -> np.ndarray:
    X = np.asarray(selected, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[0] == 0:
        raise ValueError("empty selection")
    if X.shape[1] != tt.d:
        raise ValueError("multi-index length does not match the tensor")
    return X


def loss(tt: TensorTrain, selected) -> float:
    """Sum of ``log|p[x]|`` over the selected multi-indices."""
    X = _check_selection(tt, selected)
    return float(tt_log_batch(tt, X).sum())


def loss_gradient(tt: TensorTrain, selected) -> list[np.ndarray]:
    X = _check_selection(tt, selected)
    k, d = X.shape
    if np.any(tt_log_batch(tt, X) <= LOG_LOG_FLOOR + 1e-9):
        raise ValueError("vanishing likelihood at selected index")
    slices = [core.transpose(1, 0, 2)[X[:, i]] for i, core in enumerate(tt.cores)]

    prefix = [np.ones((k, 1))]
    for i in range(d - 1):
        prefix.append(_unit(np.einsum("br,brs->bs", prefix[-1], slices[i])))
    suffix = [np.ones((k, 1))]
    for i in range(d - 1, 0, -1):
        suffix.append(_unit(np.einsum("brs,bs->br", slices[i], suffix[-1])))
    suffix.reverse()

    grads = []
    for i, core in enumerate(tt.cores):
        L, R = prefix[i], suffix[i]
        p = np.einsum("br,brs,bs->b", L, slices[i], R)
        outer = L[:, :, None] * R[:, None, :] / p[:, None, None]
        g = np.zeros((core.shape[1],) + outer.shape[1:])
        np.add.at(g, X[:, i], outer)
        grads.append(g.transpose(1, 0, 2))
    return grads


def log_partition(tt: TensorTrain) -> float:
    """``log Z`` with ``Z`` the contraction of ``sum_n |G_i[:, n, :]|`` over all cores.

    ``Z >= sum_x |p[x]|`` (equality for nonnegative cores), so
    ``log|p[x]| - log Z <= 0`` for every ``x``.
    """
    v = np.ones(1)
    logscale = 0.0
    for core in tt.cores:
        v = v @ np.abs(core).sum(axis=1)
        m = np.max(v)
        v = v / m
        logscale += math.log(m)
    return logscale + math.log(v[0])


def log_partition_gradient(tt: TensorTrain) -> list[np.ndarray]:
    sums = [np.abs(c).sum(axis=1) for c in tt.cores]
    d = tt.d
    left = [np.ones(1)]
    for i in range(d - 1):
        left.append(_unit(left[-1][None, :] @ sums[i])[0])
    right = [np.ones(1)]
    for i in range(d - 1, 0, -1):
        right.append(_unit((sums[i] @ right[-1])[None, :])[0])
    right.reverse()
    grads = []
    for i, core in enumerate(tt.cores):
        z = left[i] @ sums[i] @ right[i]
        g = np.outer(left[i], right[i]) / z
        grads.append(np.sign(core) * g[:, None, :])
    return grads


def normalized_loss(tt: TensorTrain, selected) -> float:
    """Log-likelihood of the selection under the normalised distribution ``|p| / Z``."""
    X = _check_selection(tt, selected)
    return loss(tt, X) - X.shape[0] * log_partition(tt)


def normalized_loss_gradient(tt: TensorTrain, selected) -> list[np.ndarray]:
    X = _check_selection(tt, selected)
    k = X.shape[0]
    return [g - k * gz for g, gz in zip(loss_gradient(tt, X), log_partition_gradient(tt))]


def _unit(v: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(v), axis=1, keepdims=True)
    m[m == 0] = 1.0
    return v / m


def adam_step(
    tt: TensorTrain,
    grad: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    mask: Optional[Sequence[np.ndarray]] = None,
) -> tuple[TensorTrain, AdamState]:
    """One bias-corrected Adam *ascent* step. ``state`` is updated in place.

    ``mask`` (boolean, per core) freezes entries where it is False.
    """
    if len(grad) != tt.d:
        raise ValueError("gradient has the wrong number of cores")
    for g, c in zip(grad, tt.cores):
        if g.shape != c.shape:
            raise ValueError("gradient shape does not match core shape")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    cores = []
    for i, (c, g) in enumerate(zip(tt.cores, grad)):
        if mask is not None:
            g = np.where(mask[i], g, 0.0)
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        cores.append(c + lr * (state.m[i] / bc1) / (np.sqrt(state.v[i] / bc2) + eps))
    return TensorTrain(cores), state


def select_top_k(ys, k: int) -> np.ndarray:
    """Positions of the ``k`` smallest values; ties go to the earlier position."""
    ys = np.asarray(ys, dtype=float)
    if k > ys.size:
        raise ValueError("k exceeds the number of values")
    return np.argsort(ys, kind="stable")[:k]


def _iteration_seed(seed: int, it: int) -> int:
    return int(np.random.SeedSequence([seed, it]).generate_state(1)[0])


def protes_minimize(
    problem,
    config: ProtesConfig,
    init: Optional[TensorTrain] = None,
    *,
    admissible: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    freeze_zeros: bool = False,
    on_batch: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
    return_tensor: bool = False,
):
    """Minimise ``problem`` over its index grid within ``config.M`` evaluations.

    Returns ``(best_x, best_y, trace)`` (plus the final tensor when
    ``return_tensor`` is set). ``best_x`` is None if nothing finite was seen.

    ``admissible`` optionally drops invalid samples from the top-k (their
    values are treated as +inf). ``freeze_zeros`` keeps zero entries of the
    initial cores at zero, which preserves the support of an indicator init.
    ``on_batch(iter, X, ys)`` sees every evaluated batch.
    """
    shape = tuple(problem.shape)
    if init is None:
        tt = tt_random(config.R, shape, config.seed)
    else:
        if init.shape != shape:
            raise ValueError("init shape does not match problem shape")
        tt = init
    mask = [c != 0 for c in tt.cores] if freeze_zeros else None
    state = AdamState.zeros_like(tt)
    trace = RunTrace()
    best_x, best_y = None, math.inf
    evals = 0
    t0 = time.perf_counter()

    for it in range(config.iterations):
        X = tt_sample(tt, config.K, _iteration_seed(config.seed, it)).indices
        ys = np.asarray(problem.evaluate(X), dtype=float)
        if ys.shape != (config.K,):
            raise ValueError("problem returned a batch of the wrong length")
        evals += config.K
        if on_batch is not None:
            on_batch(it, X, ys)
        nan = np.isnan(ys)
        if nan.all():
            raise ValueError("no finite objective values")
        ys = np.where(nan, np.inf, ys)
        if admissible is not None:
            ys = np.where(admissible(X), ys, np.inf)

        top = select_top_k(ys, config.k)
        j = top[0]
        if ys[j] < best_y:
            best_y, best_x = float(ys[j]), X[j].copy()

        sel = X[top]
        grad_fn = normalized_loss_gradient if config.normalize else loss_gradient
        for _ in range(config.k_gd):
            g = grad_fn(tt, sel)
            tt, state = adam_step(
                tt, g, state, config.lr,
                config.adam_beta1, config.adam_beta2, config.adam_eps, mask,
            )
        trace.records.append(
            TraceRecord(
                iter=it,
                evals=evals,
                best_y=best_y,
                best_x=None if best_x is None else [int(v) for v in best_x],
                t_s=time.perf_counter() - t0,
            )
        )

    out_x = None if best_x is None else np.asarray(best_x)
    if return_tensor:
        return out_x, best_y, trace, tt
    return out_x, best_y, trace

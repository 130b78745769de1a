"""Indicator tensors in TT format built from finite automata.

A deterministic automaton reading one symbol per mode maps directly onto TT
cores: rank channels are automaton states, core ``k`` holds the transition
matrix for each symbol, and the last core folds in acceptance. Rejection is a
dedicated absorbing channel that the last core maps to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .tensor_train import TensorTrain

REJECT = None

Transition = Callable[[int, int, int], Optional[int]]


@dataclass(frozen=True)
class AutomatonSpec:
    """``transition(k, n, s)`` gives the next state (or REJECT) for the symbol
    ``n`` at 0-based mode ``k < d - 1``; ``accept(n, s)`` decides the last mode.
    """

    n_states: int
    transition: Transition
    accept: Callable[[int, int], bool]
    d: int
    N: int = 2

    def run(self, x) -> int:
        """Brute-force evaluation of the indicator at one string."""
        s = 0
        for k in range(self.d - 1):
            s = self.transition(k, int(x[k]), s)
            if s is REJECT:
                return 0
        return int(bool(self.accept(int(x[self.d - 1]), s)))


def min_run_spec(d: int, l: int) -> AutomatonSpec:
    """Strings over {0, 1} whose every maximal run of ones has length >= ``l``.

    The state counts consecutive ones seen so far, capped at ``l``.
    """
    if d < 1 or l < 1:
        raise ValueError("need d >= 1 and l >= 1")

    def transition(k, n, s):
        if n == 1:
            return min(l, s + 1)
        return 0 if s in (0, l) else REJECT

    def accept(n, s):
        if n == 0:
            return s in (0, l)
        return s >= l - 1

    return AutomatonSpec(n_states=l + 1, transition=transition, accept=accept, d=d, N=2)


def accept_all_spec(d: int, N: int = 2) -> AutomatonSpec:
    return AutomatonSpec(1, lambda k, n, s: 0, lambda n, s: True, d, N)


def build_indicator_tt(spec: AutomatonSpec) -> TensorTrain:
    """TT whose value is 1 on accepted strings and 0 elsewhere.

    Interior ranks are ``n_states + 1`` (the extra channel is REJECT). For
    ``d == 1`` the single core is the acceptance row of the start state.
    """
    S, N, d = spec.n_states, spec.N, spec.d
    rej = S
    cores = []
    if d == 1:
        core = np.zeros((1, N, 1))
        for n in range(N):
            core[0, n, 0] = 1.0 if spec.accept(n, 0) else 0.0
        return TensorTrain([core])

    for k in range(d - 1):
        rows = 1 if k == 0 else S + 1
        core = np.zeros((rows, N, S + 1))
        for s in range(rows):
            for n in range(N):
                if s == rej:
                    core[s, n, rej] = 1.0
                    continue
                t = spec.transition(k, n, s)
                core[s, n, rej if t is REJECT else t] = 1.0
        cores.append(core)

    last = np.zeros((S + 1, N, 1))
    for s in range(S):
        for n in range(N):
            last[s, n, 0] = 1.0 if spec.accept(n, s) else 0.0
    cores.append(last)
    return TensorTrain(cores)


def constrained_init(indicator: TensorTrain, rank_pad: int = 0, seed: int = 0) -> TensorTrain:
    """Indicator tensor, optionally padded to inner rank ``rank_pad``.

    Padded channels receive 1e-6 uniform noise on the blocks leading into and
    between them; the block leading back into the original channels is zero,
    so the padded tensor evaluates exactly like the indicator while the extra
    parameters still receive gradient.
    """
    if rank_pad <= 0 or all(r >= rank_pad for r in indicator.ranks[1:-1]):
        return indicator
    rng = np.random.default_rng(seed)
    ranks = indicator.ranks
    new_ranks = [1] + [max(r, rank_pad) for r in ranks[1:-1]] + [1]
    cores = []
    for i, core in enumerate(indicator.cores):
        r0, n, r1 = core.shape
        q0, q1 = new_ranks[i], new_ranks[i + 1]
        padded = np.zeros((q0, n, q1))
        padded[:, :, r1:] = 1e-6 * rng.random((q0, n, q1 - r1))
        padded[:r0, :, :r1] = core
        cores.append(padded)
    return TensorTrain(cores)


def indicator_values(spec: AutomatonSpec) -> np.ndarray:
    """Dense brute-force indicator over all ``N**d`` strings (small ``d`` only)."""
    grid = np.indices((spec.N,) * spec.d).reshape(spec.d, -1).T
    return np.array([spec.run(x) for x in grid]).reshape((spec.N,) * spec.d)


def is_min_run_admissible(X, l: int) -> np.ndarray:
    """Vectorised check that every run of ones in each row has length >= ``l``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    B, d = X.shape
    run = np.zeros(B, dtype=np.int64)
    ok = np.ones(B, dtype=bool)
    for t in range(d):
        one = X[:, t] == 1
        ended = ~one & (run > 0)
        ok &= ~(ended & (run < l))
        run = np.where(one, run + 1, 0)
    ok &= ~((run > 0) & (run < l))
    return ok


@lru_cache(maxsize=None)
def count_min_run(d: int, l: int) -> int:
    """Number of binary strings of length ``d`` with all runs of ones >= ``l``.

    Counts strings as concatenations of blocks ``0`` and ``1^m 0`` (m >= l),
    with an optional trailing ``1^m``.
    """
    if d < 0:
        return 0
    # a[n]: strings of length n that are empty or end in 0
    a = [0] * (d + 1)
    a[0] = 1
    for n in range(1, d + 1):
        a[n] = a[n - 1] + sum(a[n - 1 - m] for m in range(l, n))
    return a[d] + sum(a[d - m] for m in range(l, d + 1))

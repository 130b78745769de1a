from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Problem:
    """Black-box objective on the index grid ``shape``.

    ``func`` maps a ``(batch, d)`` integer array to a ``(batch,)`` float array.
    """

    name: str
    shape: tuple[int, ...]
    func: Callable[[np.ndarray], np.ndarray]
    metadata: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.shape)

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise ValueError(f"expected multi-indices of length {self.d}")
        if np.any(X < 0) or np.any(X >= np.asarray(self.shape)):
            raise IndexError("multi-index out of bounds")
        y = np.asarray(self.func(X), dtype=float)
        if y.shape != (X.shape[0],):
            raise ValueError("objective returned a batch of the wrong length")
        return y

    def negated(self) -> Problem:
        """Same grid, objective ``-f``; used to maximise with the minimiser."""
        return Problem(
            self.name, self.shape, lambda X: -self.func(X), {**self.metadata, "negated": True}
        )

    def describe(self) -> dict:
        """JSON-ready description, enough to rebuild the instance."""
        return {"name": self.name, "d": self.d, "shape": list(self.shape), **self.metadata}


def all_indices(shape) -> np.ndarray:
    """Every multi-index of ``shape`` in row-major order."""
    return np.indices(shape).reshape(len(shape), -1).T


def brute_force_min(problem: Problem, chunk: int = 1 << 16) -> tuple[np.ndarray, float]:
    """Exhaustive minimum (first minimiser in row-major order)."""
    total = int(np.prod(problem.shape))
    best_y, best_x = np.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk))
        X = np.stack(np.unravel_index(flat, problem.shape), axis=1)
        y = problem.evaluate(X)
        j = int(np.argmin(y))
        if y[j] < best_y:
            best_y, best_x = float(y[j]), X[j]
    return best_x, best_y

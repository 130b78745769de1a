from __future__ import annotations

import numpy as np

from .base import Problem


def planted_problem(d: int = 6, N: int = 4, seed: int = 0) -> Problem:
    """Lookup-table objective: 0 at one random multi-index, ``1 + u`` with ``u in (0, 1)`` elsewhere.

    The noise carries no information about where the minimum is.
    """
    shape = (N,) * d
    rng = np.random.default_rng([seed, 0x5EED])
    table = 1.0 + rng.random(N**d)
    table[table == 1.0] = 1.5
    star = int(rng.integers(N**d))
    table[star] = 0.0
    x_star = np.array(np.unravel_index(star, shape))

    def evaluate(X):
        return table[np.ravel_multi_index(X.T, shape)]

    meta = {"kind": "planted", "seed": seed, "x_star": x_star.tolist()}
    return Problem(f"planted_d{d}_n{N}", shape, evaluate, meta)

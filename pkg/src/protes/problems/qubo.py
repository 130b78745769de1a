"""Seeded QUBO instances: max-cut, vertex cover and two knapsack variants.

The objective is ``x^T Q x`` over ``x in {0, 1}^d``. The knapsack variants add
a capacity penalty ``penalty * max(0, w.x - C)``; the penalty coefficient is
large enough that every minimiser is feasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import Problem

KINDS = ("max_cut", "min_vertex_cover", "quadratic_knapsack", "binary_knapsack")
ALIASES = {"knapsack": "binary_knapsack", "maxcut": "max_cut", "vertex_cover": "min_vertex_cover"}


@dataclass(frozen=True)
class QuboInstance:
    Q: np.ndarray
    weights: Optional[np.ndarray] = None
    capacity: float = np.inf
    penalty: float = 0.0

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    def energy(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.einsum("bi,ij,bj->b", X, self.Q, X)
        if self.weights is not None:
            y = y + self.penalty * np.maximum(0.0, X @ self.weights - self.capacity)
        return y


def random_graph(d: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric 0/1 adjacency matrix of an Erdos-Renyi graph G(d, p)."""
    upper = np.triu(rng.random((d, d)) < p, k=1)
    return (upper | upper.T).astype(float)


def max_cut_qubo(adj: np.ndarray) -> np.ndarray:
    Q = adj.copy()
    np.fill_diagonal(Q, -adj.sum(axis=1))
    return Q


def vertex_cover_qubo(adj: np.ndarray, P: float = 8.0) -> tuple[np.ndarray, float]:
    """``sum x_i + P * sum_{edges} (1 - x_i)(1 - x_j)`` as ``x^T Q x + offset``."""
    Q = P / 2 * adj
    np.fill_diagonal(Q, 1.0 - P * adj.sum(axis=1))
    offset = P * adj.sum() / 2
    return Q, float(offset)


def qubo_problem(kind: str, d: int = 50, seed: int = 0, **params) -> Problem:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown QUBO kind: {kind!r}")
    if d < 1:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(seed)
    meta = {"kind": "qubo", "qubo_kind": kind, "seed": seed}

    if kind == "max_cut":
        p = params.get("edge_prob", 0.5)
        adj = random_graph(d, p, rng)
        inst = QuboInstance(max_cut_qubo(adj))
        meta.update(edge_prob=p, edges=int(adj.sum() // 2))
    elif kind == "min_vertex_cover":
        p = params.get("edge_prob", 0.5)
        P = params.get("penalty", 8.0)
        adj = random_graph(d, p, rng)
        Q, offset = vertex_cover_qubo(adj, P)
        inst = QuboInstance(Q)
        meta.update(edge_prob=p, penalty=P, edges=int(adj.sum() // 2), offset=offset)
    elif kind == "quadratic_knapsack":
        density = params.get("density", 0.5)
        upper = np.triu(rng.integers(1, 101, (d, d)) * (rng.random((d, d)) < density))
        profit = upper + np.triu(upper, k=1).T
        w = rng.integers(1, 51, d).astype(float)
        C = float(params.get("capacity", rng.integers(50, max(51, int(w.sum())) + 1)))
        # symmetric Q with x^T Q x = sum_i p_ii x_i + sum_{i<j} p_ij x_i x_j
        Q = -(np.diag(np.diag(profit)) + (profit - np.diag(np.diag(profit))) / 2)
        lam = 10.0 * float(profit.sum(axis=1).max())
        inst = QuboInstance(Q, w, C, lam)
        meta.update(density=density, capacity=C, penalty=lam, weights=w.tolist())
    else:
        w = rng.integers(5, 21, d).astype(float)
        p = rng.integers(50, 101, d).astype(float)
        C = float(params.get("capacity", min(1000.0, np.floor(w.sum() / 2))))
        lam = 10.0 * float(p.max())
        inst = QuboInstance(-np.diag(p), w, C, lam)
        meta.update(capacity=C, penalty=lam, weights=w.tolist(), profits=p.tolist())

    meta["Q"] = inst.Q.tolist()
    prob = Problem(kind, (2,) * d, inst.energy, meta)
    return prob


def qubo_instance(problem: Problem) -> QuboInstance:
    """Rebuild the instance from a QUBO problem's metadata."""
    meta = problem.metadata
    Q = np.asarray(meta["Q"])
    if "weights" in meta:
        return QuboInstance(Q, np.asarray(meta["weights"]), meta["capacity"], meta["penalty"])
    return QuboInstance(Q)

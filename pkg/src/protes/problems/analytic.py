"""Discretised analytic benchmark functions.

Each function is evaluated at uniform grid nodes
``a_i + n_i * (b_i - a_i) / (grid - 1)`` over its conventional domain.
"""

from __future__ import annotations

import numpy as np

from .base import Problem


def ackley(x):
    d = x.shape[1]
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2, axis=1) / d))
    b = -np.exp(np.sum(np.cos(2 * np.pi * x), axis=1) / d)
    return a + b + 20.0 + np.e


def alpine(x):
    return np.sum(np.abs(x * np.sin(x) + 0.1 * x), axis=1)


def exponential(x):
    return -np.exp(-0.5 * np.sum(x**2, axis=1))


def griewank(x):
    i = np.arange(1, x.shape[1] + 1)
    return np.sum(x**2, axis=1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=1) + 1.0


def michalewicz(x, m=10):
    i = np.arange(1, x.shape[1] + 1)
    return -np.sum(np.sin(x) * np.sin(i * x**2 / np.pi) ** (2 * m), axis=1)


def piston(x):
    """Cycle time of a piston; inputs (M, S, V0, k, P0, Ta, T0)."""
    M, S, V0, k, P0, Ta, T0 = x.T
    A = P0 * S + 19.62 * M - k * V0 / S
    V = S / (2 * k) * (np.sqrt(A**2 + 4 * k * P0 * V0 * Ta / T0) - A)
    return 2 * np.pi * np.sqrt(M / (k + S**2 * P0 * V0 * Ta / (T0 * V**2)))


def qing(x):
    i = np.arange(1, x.shape[1] + 1)
    return np.sum((x**2 - i) ** 2, axis=1)


def rastrigin(x):
    return 10.0 * x.shape[1] + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=1)


def schaffer(x):
    s = x[:, :-1] ** 2 + x[:, 1:] ** 2
    return np.sum(0.5 + (np.sin(np.sqrt(s)) ** 2 - 0.5) / (1 + 0.001 * s) ** 2, axis=1)


def schwefel(x):
    return 418.9829 * x.shape[1] - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=1)


PISTON_BOUNDS = [
    (30.0, 60.0),
    (0.005, 0.020),
    (0.002, 0.010),
    (1000.0, 5000.0),
    (90000.0, 110000.0),
    (290.0, 296.0),
    (340.0, 360.0),
]

# name -> (function, per-coordinate domain or None for Piston's fixed bounds)
FUNCTIONS = {
    "ackley": (ackley, (-32.768, 32.768)),
    "alpine": (alpine, (-10.0, 10.0)),
    "exponential": (exponential, (-1.0, 1.0)),
    "griewank": (griewank, (-600.0, 600.0)),
    "michalewicz": (michalewicz, (0.0, np.pi)),
    "piston": (piston, None),
    "qing": (qing, (-500.0, 500.0)),
    "rastrigin": (rastrigin, (-5.12, 5.12)),
    "schaffer": (schaffer, (-100.0, 100.0)),
    "schwefel": (schwefel, (-500.0, 500.0)),
}


def domain_bounds(name: str, d: int) -> np.ndarray:
    func, dom = FUNCTIONS[name]
    if dom is None:
        return np.array(PISTON_BOUNDS)
    return np.tile(dom, (d, 1))


def grid_points(bounds: np.ndarray, grid: int, X: np.ndarray) -> np.ndarray:
    a, b = bounds[:, 0], bounds[:, 1]
    return a + X * (b - a) / (grid - 1)


def analytic_problem(name: str, d: int = 7, grid: int = 16) -> Problem:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown analytic function: {name!r}")
    if name == "piston":
        d = 7
    if d < 1 or grid < 2:
        raise ValueError("need d >= 1 and grid >= 2")
    if name == "schaffer" and d < 2:
        raise ValueError("schaffer needs d >= 2")
    func = FUNCTIONS[name][0]
    bounds = domain_bounds(name, d)

    def evaluate(X):
        return func(grid_points(bounds, grid, X))

    meta = {"kind": "analytic", "grid": grid, "domain": bounds.tolist()}
    return Problem(name, (grid,) * d, evaluate, meta)

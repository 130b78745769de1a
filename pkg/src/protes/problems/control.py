"""Binary optimal control of ``dz/dt = z^3 - x(t)``.

The control ``x(t)`` is held on ``[t, t + 1)``; the state is integrated with
fixed-step RK4 and the objective is ``0.5 * sum_{t=0}^{T} (z(t) - z_ref)^2``.
Trajectories that escape ``|z| > 1e6`` get an objective of ``+inf``.

``x(T)`` only drives the interval after ``T`` and never affects the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constraints import build_indicator_tt, is_min_run_admissible, min_run_spec
from ..tensor_train import TensorTrain
from .base import Problem

BLOWUP = 1e6


@dataclass(frozen=True)
class ControlInstance:
    T: int
    z0: float = 0.8
    z_ref: float = 0.7
    substeps: int = 10
    interval: float = 1.0

    @property
    def d(self) -> int:
        return self.T + 1

    def rhs(self, z, x):
        return z**3 - x

    def trajectory(self, X) -> np.ndarray:
        """States ``z(0..T)`` for each control row; rows that blew up are NaN from then on."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        B = X.shape[0]
        h = self.interval / self.substeps
        Z = np.empty((B, self.T + 1))
        z = np.full(B, self.z0)
        Z[:, 0] = z
        alive = np.ones(B, dtype=bool)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(self.T):
                u = X[:, t]
                for _ in range(self.substeps):
                    k1 = self.rhs(z, u)
                    k2 = self.rhs(z + 0.5 * h * k1, u)
                    k3 = self.rhs(z + 0.5 * h * k2, u)
                    k4 = self.rhs(z + h * k3, u)
                    z = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                    alive &= np.isfinite(z) & (np.abs(z) <= BLOWUP)
                    z = np.where(alive, z, 0.0)
                Z[:, t + 1] = np.where(alive, z, np.nan)
        return Z

    def objective(self, X) -> np.ndarray:
        Z = self.trajectory(X)
        J = 0.5 * np.sum((Z - self.z_ref) ** 2, axis=1)
        return np.where(np.isnan(J), np.inf, J)


def control_problem(
    T: int = 25,
    substeps: int = 10,
    z0: float = 0.8,
    z_ref: float = 0.7,
    interval: float = 1.0,
) -> Problem:
    """``interval`` is the time each control value is held (1.0 by default)."""
    if T < 1 or substeps < 1:
        raise ValueError("need T >= 1 and substeps >= 1")
    if not interval > 0:
        raise ValueError("interval must be positive")
    inst = ControlInstance(T, z0, z_ref, substeps, interval)
    meta = {
        "kind": "control", "T": T, "z0": z0, "z_ref": z_ref,
        "substeps": substeps, "interval": interval,
    }
    return Problem(f"control_T{T}", (2,) * inst.d, inst.objective, meta)


def constrained_control_problem(
    T: int = 25, l: int = 3, substeps: int = 10, interval: float = 1.0
) -> tuple[Problem, TensorTrain]:
    """Control problem plus the TT indicator of controls whose runs of ones have length >= ``l``.

    The objective itself ignores the constraint; it is enforced only through
    the initial sampling distribution.
    """
    if T < l:
        raise ValueError("need T >= l")
    base = control_problem(T, substeps, interval=interval)
    meta = {**base.metadata, "kind": "control_constrained", "constraint_l": l}
    prob = Problem(f"control_constrained_T{T}", base.shape, base.func, meta)
    return prob, build_indicator_tt(min_run_spec(T + 1, l))


def admissible_fn(l: int):
    return lambda X: is_min_run_admissible(X, l)

"""Carleman ladder for the logistic decay u' = -u (1 - R u)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LogisticLadder:
    u0: float
    R: float
    K: int
    dt: float
    times: np.ndarray
    trajectory: np.ndarray  # u_1(t)

    @property
    def final(self) -> float:
        return float(self.trajectory[-1])


def _check(u0: float, R: float, dt: float) -> None:
    if abs(R * u0) >= 1:
        raise ValueError(f"|R u0| = {abs(R * u0)} must be below 1")
    if dt <= 0:
        raise ValueError("dt must be positive")


def logistic_carleman(u0: float, R: float, K: int, T: float, dt: float = 1e-3) -> LogisticLadder:
    """Explicit Euler on u_k' = -k (u_k - R u_{k+1}), closed by u_{K+1} = 0.

    The monomials u_k = u^k start at u0**k.
    """
    _check(u0, R, dt)
    if K < 1:
        raise ValueError("K must be at least 1")
    n_steps = int(round(T / dt))
    k = np.arange(1, K + 1, dtype=float)
    u = u0 ** k
    traj = np.empty(n_steps + 1)
    traj[0] = u[0]
    for i in range(n_steps):
        upper = np.empty_like(u)
        upper[:-1] = u[1:]
        upper[-1] = 0.0
        u = u - dt * k * (u - R * upper)
        traj[i + 1] = u[0]
    return LogisticLadder(u0, R, K, dt, np.arange(n_steps + 1) * dt, traj)


def logistic_reference(u0: float, R: float, T: float, dt: float = 1e-6) -> float:
    """Fine-step Euler integration of the nonlinear equation."""
    _check(u0, R, dt)
    u = u0
    for _ in range(int(round(T / dt))):
        u -= dt * u * (1.0 - R * u)
    return u


def logistic_exact(u0: float, R: float, t) -> np.ndarray:
    """Closed form of the Bernoulli equation, u = 1 / (R + (1/u0 - R) e^t)."""
    t = np.asarray(t, dtype=float)
    if u0 == 0:
        return np.zeros_like(t)
    return 1.0 / (R + (1.0 / u0 - R) * np.exp(t))

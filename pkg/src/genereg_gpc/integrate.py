"""Fixed-step explicit time integration with trajectory recording."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .io import write_csv
from .kinetics import ModelParams, perturb_rhs, steady_state_r
from .measure_basis import QuadratureRule

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "solve_collocation",
    "stability_dt_hint",
]


class IntegrationError(RuntimeError):
    """Non-finite state encountered during time stepping."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 10.0
    record_every: int = 10

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.lower())
        if self.scheme not in ("rk4", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}; use rk4 or euler")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be >= dt")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states and times differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path, labels=None):
        n = self.states.shape[1]
        labels = list(labels) if labels is not None else [f"y{i}" for i in range(n)]
        rows = (np.concatenate([[t], s]) for t, s in zip(self.times, self.states))
        return write_csv(path, ["t", *labels], rows)


def _step_rk4(rhs, y, dt):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_euler(rhs, y, dt):
    return y + dt * rhs(y)


def integrate(rhs: Callable[[np.ndarray], np.ndarray], initial_state, config: IntegratorConfig,
              meta: dict | None = None) -> Trajectory:
    """Integrate the autonomous system ``y' = rhs(y)`` from t = 0 to ``t_end``.

    The step count is ``round(t_end / dt)`` with the step size adjusted to
    land exactly on ``t_end``. Samples are kept every ``record_every`` steps,
    plus the first and last.
    """
    y = np.array(initial_state, dtype=float)
    if y.ndim == 0:
        y = y.reshape(1)
    step = _step_rk4 if config.scheme == "rk4" else _step_euler
    n = config.n_steps
    h = config.t_end / n
    every = int(config.record_every)

    times = [0.0]
    states = [y.copy()]
    for k in range(1, n + 1):
        # overflow is reported by the finiteness guard below
        with np.errstate(over="ignore", invalid="ignore"):
            y = step(rhs, y, h)
        if not np.all(np.isfinite(y)):
            finite = np.where(np.isfinite(y), np.abs(y), np.inf)
            raise IntegrationError(
                f"non-finite state at step {k} (t={k * h:.6g}); "
                f"largest component index {int(np.argmax(finite))}. "
                "Initial data may violate the smallness thresholds."
            )
        if k % every == 0 or k == n:
            times.append(k * h)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), dict(meta or {}))


def stability_dt_hint(params: ModelParams, rho0_norm: float, m0_norm: float, R: float) -> float:
    """Heuristic explicit-stability step: 0.5 / (a + b + c(|rho0|+|m0|) + cR(a+b))."""
    a, b, c = params.a, params.b, params.c
    return 0.5 / (a + b + c * (rho0_norm + m0_norm) + c * R * (a + b))


def solve_collocation(params: ModelParams, source, quadrature: QuadratureRule,
                      rho0, m0, config: IntegratorConfig) -> Trajectory:
    """Integrate the perturbation system independently at every quadrature node.

    ``rho0``/``m0`` are callables of z or nodal arrays. Returned states are
    ``[rho(z_0..z_{N-1}), m(z_0..z_{N-1})]`` per recorded time.
    """
    z = quadrature.nodes
    n = z.size
    rinf = steady_state_r(params, source, z)
    r0 = rho0(z) if callable(rho0) else rho0
    q0 = m0(z) if callable(m0) else m0
    y0 = np.concatenate([np.broadcast_to(r0, (n,)), np.broadcast_to(q0, (n,))]).astype(float)

    def rhs(y):
        d_rho, d_m = perturb_rhs(y[:n], y[n:], rinf, params)
        return np.concatenate([d_rho, d_m])

    return integrate(rhs, y0, config, meta={"system": "collocation", "nodes": n})

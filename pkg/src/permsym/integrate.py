"""Time integration of ``dP/dt = L P``.

Two explicit Runge-Kutta schemes: classical fixed-step RK4 and the embedded
Bogacki-Shampine 3(2) pair with a PI step-size controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IntegrationError",
    "SolverConfig",
    "SolverStats",
    "rk4_step",
    "evolve",
    "fixed_step_count",
]

METHOD_ALIASES = {
    "rk4": "rk4_fixed",
    "rk4_fixed": "rk4_fixed",
    "rk_adaptive": "rk_adaptive_32",
    "rk_adaptive_32": "rk_adaptive_32",
}

Monitor = Callable[[float, np.ndarray, int], None]


class IntegrationError(RuntimeError):
    """The integrator could not continue (step underflow or divergence)."""


@dataclass
class SolverConfig:
    """Time-integration settings.

    ``dt`` is the fixed step for ``rk4_fixed`` and the initial step for
    ``rk_adaptive_32``.  ``monitor_every`` counts steps (accepted steps for
    the adaptive method).
    """

    method: str = "rk4_fixed"
    t_end: float = 1.0
    dt: float = 1e-2
    rtol: float = 1e-6
    atol: float = 1e-8
    dt_min: float = 1e-12
    dt_max: float = math.inf
    monitor_every: int = 30
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in METHOD_ALIASES:
            raise ValueError(f"unknown integration method {self.method!r}")
        self.method = METHOD_ALIASES[self.method]
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be > 0")
        if not (0 < self.dt_min <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.monitor_every < 1:
            raise ValueError("monitor_every must be >= 1")


@dataclass
class SolverStats:
    steps: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    monitor_calls: int = 0
    times: list = field(default_factory=list)


def fixed_step_count(t_end: float, dt: float) -> tuple[int, float]:
    """Number of equal steps covering ``[0, t_end]`` and the actual step.

    ``round(t_end / dt)`` steps of size ``t_end / n`` so the run ends exactly
    at ``t_end``.
    """
    if t_end == 0:
        return 0, dt
    n = max(1, int(round(t_end / dt)))
    return n, t_end / n


def rk4_step(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _matvec(L):
    m = getattr(L, "matrix", L)
    return lambda y: m @ y


def _check_finite(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite values at t={t:.6g}: the integration diverged")


def evolve(
    L,
    dm: np.ndarray,
    config: SolverConfig,
    monitor: Optional[Monitor] = None,
    stats: Optional[SolverStats] = None,
) -> np.ndarray:
    """Integrate from ``t = 0`` to ``config.t_end`` and return the final vector.

    ``monitor(t, dm, step)`` is called at step 0, after every
    ``monitor_every``-th step, and at ``t_end`` if that step is not already a
    multiple of the cadence.
    """
    y = np.array(dm, dtype=complex)
    n = getattr(L, "shape", (y.size, y.size))[0]
    if y.shape != (n,):
        raise ValueError(f"state length {y.shape} does not match operator size {n}")
    _check_finite(y, 0.0)
    stats = stats if stats is not None else SolverStats()
    rhs = _matvec(L)

    def f(v):
        stats.rhs_evals += 1
        return rhs(v)

    def emit(t, state, step):
        if monitor is not None:
            monitor(t, state, step)
        stats.monitor_calls += 1
        stats.times.append(t)

    emit(0.0, y, 0)
    # overflow is caught by the explicit finiteness checks below
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(f, y, config, emit, stats)


def _run(f, y, config: SolverConfig, emit, stats: SolverStats) -> np.ndarray:
    if config.method == "rk4_fixed":
        steps, h = fixed_step_count(config.t_end, config.dt)
        for i in range(1, steps + 1):
            y = rk4_step(f, y, h)
            _check_finite(y, i * h)
            stats.steps += 1
            if i % config.monitor_every == 0 or i == steps:
                emit(i * h if i < steps else config.t_end, y, i)
        return y
    return _evolve_bs32(f, y, config, emit, stats)


# Bogacki-Shampine 3(2) tableau
_A21 = 0.5
_A32 = 0.75
_B = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)
_E = (2.0 / 9.0 - 7.0 / 24.0, 1.0 / 3.0 - 0.25, 4.0 / 9.0 - 1.0 / 3.0, -0.125)
_SAFETY = 0.9
_ALPHA = 0.7 / 3.0
_BETA = 0.4 / 3.0


def _evolve_bs32(f, y, config: SolverConfig, emit, stats: SolverStats):
    t, t_end = 0.0, config.t_end
    if t_end == 0:
        return y
    h = min(config.dt, config.dt_max, t_end)
    k1 = f(y)
    prev_ratio = 1.0
    step = 0
    while t < t_end:
        if stats.steps + stats.rejected >= config.max_steps:
            raise IntegrationError(f"step budget of {config.max_steps} exhausted at t={t:.6g}")
        last = t + h >= t_end * (1 - 1e-14)
        if last:
            h = t_end - t
        k2 = f(y + h * _A21 * k1)
        k3 = f(y + h * _A32 * k2)
        y_new = y + h * (_B[0] * k1 + _B[1] * k2 + _B[2] * k3)
        k4 = f(y_new)
        err = h * (_E[0] * k1 + _E[1] * k2 + _E[2] * k3 + _E[3] * k4)
        scale = config.atol + config.rtol * max(np.max(np.abs(y)), np.max(np.abs(y_new)))
        ratio = float(np.max(np.abs(err))) / scale
        if not math.isfinite(ratio):
            raise IntegrationError(f"non-finite values at t={t:.6g}: the integration diverged")
        if ratio <= 1.0:
            t = t_end if last else t + h
            y, k1 = y_new, k4
            step += 1
            stats.steps += 1
            if step % config.monitor_every == 0 or t >= t_end:
                emit(t, y, step)
            r = max(ratio, 1e-10)
            factor = _SAFETY * r ** (-_ALPHA) * prev_ratio**_BETA
            prev_ratio = r
            h = h * min(5.0, max(0.2, factor))
        else:
            stats.rejected += 1
            h = h * max(0.2, _SAFETY * ratio ** (-1.0 / 3.0))
        h = min(h, config.dt_max)
        if h < config.dt_min and t < t_end:
            raise IntegrationError(f"step size {h:.3g} fell below dt_min={config.dt_min:.3g} at t={t:.6g}")
    return y

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DivergenceError, KernelDomainError


def time_grid(horizon: float, dt: float) -> np.ndarray:
    """Uniform grid ``0, dt, ..., horizon``; ``horizon`` must be a multiple of ``dt``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not horizon >= dt:
        raise ConfigError(f"horizon {horizon} is shorter than dt {dt}")
    steps = int(round(horizon / dt))
    if abs(steps * dt - horizon) > 1e-9 * horizon:
        raise ConfigError(f"horizon {horizon} is not a multiple of dt {dt}")
    return np.arange(steps + 1) * dt


def rk4(rhs, x0, times: np.ndarray, u) -> np.ndarray:
    """Classical Runge-Kutta on ``x' = rhs(x, u(t))`` with ``u`` sampled at stage times."""
    x = np.array(x0, dtype=float)
    out = np.empty((len(times), x.shape[0]))
    out[0] = x
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        u_mid = u(t + h / 2)
        try:
            k1 = rhs(x, u(t))
            k2 = rhs(x + h / 2 * k1, u_mid)
            k3 = rhs(x + h / 2 * k2, u_mid)
            k4 = rhs(x + h * k3, u(t + h))
        except KernelDomainError as exc:
            raise DivergenceError(f"integration left the kernel's range at t = {t:.6g}: {exc}", t) from exc
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"state became non-finite at t = {times[k + 1]:.6g}", times[k + 1])
        out[k + 1] = x
    return out

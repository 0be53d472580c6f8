"""Exponential dot-product kernels.

The scalar kernel ``k(x, y) = exp(x.y / mu)`` defines the domain space of the
identified operator. The vector-valued space uses a diagonal operator kernel
whose ``j``-th diagonal entry is the scalar kernel with parameter ``mu_v[j]``;
channel 0 pairs with the drift and channels ``1..m`` with the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KernelDomainError

#: Largest admissible ``|x.y| / mu``; ``exp(709.8)`` already overflows float64.
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class KernelConfig:
    """Kernel parameters.

    Attributes:
        mu_d: Parameter of the scalar kernel on the domain space.
        mu_v: One parameter per output channel of the vector-valued kernel,
            ``m + 1`` entries in total.
    """

    mu_d: float
    mu_v: tuple[float, ...]

    def __post_init__(self):
        mu_v = tuple(float(v) for v in np.atleast_1d(self.mu_v))
        object.__setattr__(self, "mu_d", float(self.mu_d))
        object.__setattr__(self, "mu_v", mu_v)
        if not np.isfinite(self.mu_d) or self.mu_d <= 0:
            raise ValueError(f"mu_d must be positive, got {self.mu_d}")
        if len(mu_v) == 0:
            raise ValueError("mu_v must have at least one entry")
        if any(not np.isfinite(v) or v <= 0 for v in mu_v):
            raise ValueError(f"mu_v entries must be positive, got {mu_v}")

    @classmethod
    def shared(cls, mu_d: float, mu_v: float, m: int) -> "KernelConfig":
        """Config with one vector-kernel parameter shared by all ``m + 1`` channels."""
        return cls(mu_d, (float(mu_v),) * (m + 1))

    @property
    def channels(self) -> int:
        return len(self.mu_v)


def exp_dot(a, b, mu: float) -> np.ndarray:
    """Kernel matrix ``exp(a @ b.T / mu)`` for row-stacked points.

    Raises:
        KernelDomainError: if any exponent exceeds ``MAX_EXPONENT`` in magnitude.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    z = (a @ b.T) / mu
    _guard(z)
    return np.exp(z)


def _guard(z):
    if z.size == 0:
        return
    worst = float(np.max(np.abs(z)))
    if not worst <= MAX_EXPONENT:
        raise KernelDomainError(
            f"kernel exponent |x.y|/mu = {worst:.6g} exceeds the guard {MAX_EXPONENT:g}"
        )


def scalar_kernel(x, y, mu: float) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"state dimensions differ: {x.shape[0]} vs {y.shape[0]}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    z = float(np.dot(x, y)) / mu
    _guard(np.array([z]))
    return float(np.exp(z))


def _check_weights(v, cfg: KernelConfig, name="v"):
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != cfg.channels:
        raise ValueError(
            f"{name} has {v.shape[0]} entries but the kernel has {cfg.channels} channels"
        )
    return v


def weighted_kernel_row(v, y, x, cfg: KernelConfig) -> np.ndarray:
    """Row ``v K(y, x)`` of the diagonal operator kernel.

    Entry ``j`` is ``v[j] * exp(y.x / mu_v[j])``.
    """
    v = _check_weights(v, cfg)
    return v * np.array([scalar_kernel(y, x, mu) for mu in cfg.mu_v])


def kernel_quadratic_form(v_left, v_right, y, x, cfg: KernelConfig) -> float:
    """Bilinear form ``v_left K(y, x) v_right^T`` of the diagonal operator kernel."""
    v_left = _check_weights(v_left, cfg, "v_left")
    v_right = _check_weights(v_right, cfg, "v_right")
    k = np.array([scalar_kernel(y, x, mu) for mu in cfg.mu_v])
    return float(np.sum((v_left * v_right) * k))

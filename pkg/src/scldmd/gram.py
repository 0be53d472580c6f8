"""Gram matrices of control occupation kernels and kernel differences.

For trajectories ``(gamma_i, u_i)`` the occupation Gram is

    G_beta[i, j] = int_0^Tj int_0^Ti [1 u_i(tau)] K(gamma_j(t), gamma_i(tau)) [1; u_j(t)] dtau dt

approximated with the tensor product of each trajectory's own Simpson rule.
The difference Gram pairs ``d_i = k(., gamma_i(T_i)) - k(., gamma_i(0))`` and
the endpoint matrix holds ``gamma_j(T_j) - gamma_j(0)`` column-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import KernelDomainError, NumericalError
from .kernels import MAX_EXPONENT, KernelConfig, exp_dot
from .quadrature import simpson_weights

#: Allowed negative eigenvalue of a Gram matrix, relative to the largest one.
PSD_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class StackedSamples:
    """All trajectory samples concatenated for vectorised quadrature.

    ``points`` is ``(P, n)``; ``channel_weights`` is ``(P, m + 1)`` and holds
    the Simpson weight times ``(1, u(t_k))`` for every sample. ``offsets``
    marks where each trajectory starts.
    """

    points: np.ndarray
    channel_weights: np.ndarray
    offsets: np.ndarray

    @property
    def count(self) -> int:
        return len(self.offsets)

    def owner(self, k: int) -> int:
        return int(np.searchsorted(self.offsets, k, side="right") - 1)

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum ``values`` (first axis over samples) within each trajectory."""
        return np.add.reduceat(values, self.offsets, axis=0)


def stack_samples(ds: Dataset) -> StackedSamples:
    rules = {}
    points, weights = [], []
    for tr in ds:
        key = (len(tr), tr.h)
        if key not in rules:
            rules[key] = simpson_weights(*key).weights
        w = rules[key]
        points.append(tr.states)
        weights.append(w[:, None] * np.column_stack([np.ones(len(tr)), tr.controls]))
    offsets = np.cumsum([0] + [len(tr) for tr in ds])[:-1]
    return StackedSamples(np.vstack(points), np.vstack(weights), offsets)


def _channel_groups(cfg: KernelConfig) -> dict[float, list[int]]:
    groups: dict[float, list[int]] = {}
    for c, mu in enumerate(cfg.mu_v):
        groups.setdefault(mu, []).append(c)
    return groups


def _locate_overflow(z: np.ndarray, stacked: StackedSamples) -> int:
    cols = np.nonzero(np.any(np.abs(z) > MAX_EXPONENT, axis=0))[0]
    return stacked.owner(int(cols[0]))


def occupation_gram(ds: Dataset, cfg: KernelConfig, stacked: StackedSamples = None) -> np.ndarray:
    """Occupation-kernel Gram matrix ``G_beta`` (M x M), symmetrised."""
    if cfg.channels != ds.m + 1:
        raise ValueError(f"kernel has {cfg.channels} channels but the data need {ds.m + 1}")
    s = stacked or stack_samples(ds)
    M = s.count
    bounds = list(s.offsets) + [len(s.points)]
    G = np.zeros((M, M))
    for mu, channels in _channel_groups(cfg).items():
        cw = s.channel_weights[:, channels]
        for i in range(M):
            lo, hi = bounds[i], bounds[i + 1]
            z = (s.points[lo:hi] @ s.points.T) / mu
            if not np.max(np.abs(z)) <= MAX_EXPONENT:
                j = _locate_overflow(z, s)
                raise KernelDomainError(
                    f"kernel exponent exceeds {MAX_EXPONENT:g} between trajectories {i} and {j}"
                )
            K = np.exp(z)
            left = cw[lo:hi].T @ K
            G[i] += s.segment_sum(left.T * cw).sum(axis=1)
    return 0.5 * (G + G.T)


def occupation_features(x, stacked: StackedSamples, cfg: KernelConfig) -> np.ndarray:
    """Evaluate every control occupation kernel at ``x``.

    Returns an ``(M, m + 1)`` array whose row ``i`` is the Simpson approximation
    of ``int [1 u_i(t)] K(gamma_i(t), x) dt``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != stacked.points.shape[1]:
        raise ValueError(f"point has dimension {x.shape[0]}, expected {stacked.points.shape[1]}")
    dots = stacked.points @ x
    out = np.empty((stacked.count, cfg.channels))
    for mu, channels in _channel_groups(cfg).items():
        z = dots / mu
        if not np.max(np.abs(z)) <= MAX_EXPONENT:
            j = _locate_overflow(z[:, None], stacked)
            raise KernelDomainError(
                f"kernel exponent exceeds {MAX_EXPONENT:g} at the query point for trajectory {j}"
            )
        out[:, channels] = stacked.segment_sum(np.exp(z)[:, None] * stacked.channel_weights[:, channels])
    return out


def endpoint_matrix(ds: Dataset) -> np.ndarray:
    """``D`` with column ``j`` equal to ``gamma_j(T_j) - gamma_j(0)``."""
    return np.column_stack([tr.states[-1] - tr.states[0] for tr in ds])


def difference_gram(ds: Dataset, mu_d: float) -> np.ndarray:
    """Gram matrix of the kernel differences, via the four-term expansion."""
    a = np.vstack([tr.states[-1] for tr in ds])
    b = np.vstack([tr.states[0] for tr in ds])
    G = exp_dot(a, a, mu_d) - exp_dot(a, b, mu_d) - exp_dot(b, a, mu_d) + exp_dot(b, b, mu_d)
    return 0.5 * (G + G.T)


def check_psd(mat: np.ndarray, rtol: float = PSD_RTOL, name: str = "Gram matrix") -> None:
    lam = np.linalg.eigvalsh(mat)
    top = max(lam[-1], 0.0)
    if lam[0] < -rtol * top:
        raise NumericalError(
            f"{name} is not positive semidefinite: eigenvalue {lam[0]:.3e} vs largest {top:.3e}"
        )


@dataclass(frozen=True, eq=False)
class GramSystem:
    g_beta: np.ndarray
    g_d: np.ndarray
    d_matrix: np.ndarray

    def __post_init__(self):
        M = self.g_beta.shape[0]
        if self.g_beta.shape != (M, M) or self.g_d.shape != (M, M):
            raise ValueError("Gram matrices must be square and of equal size")
        if self.d_matrix.ndim != 2 or self.d_matrix.shape[1] != M:
            raise ValueError(f"endpoint matrix must have {M} columns")
        for name in ("g_beta", "g_d"):
            mat = getattr(self, name)
            mat = 0.5 * (mat + mat.T)
            check_psd(mat, name=name)
            object.__setattr__(self, name, mat)


def assemble(ds: Dataset, cfg: KernelConfig) -> GramSystem:
    return GramSystem(occupation_gram(ds, cfg), difference_gram(ds, cfg.mu_d), endpoint_matrix(ds))

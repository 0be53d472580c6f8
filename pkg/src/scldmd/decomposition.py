"""Singular decomposition of the occupation-Gram pseudoinverse.

``G_beta`` is symmetric positive semidefinite, so its pseudoinverse comes
from one symmetric eigendecomposition ``G_beta = U diag(lam) U^T``. Retained
eigenvalues give singular values ``1 / lam`` and the left and right singular
vectors coincide with the eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError
from .gram import StackedSamples, occupation_features, stack_samples
from .kernels import KernelConfig, exp_dot

#: Default relative eigenvalue cutoff for the pseudoinverse.
DEFAULT_REL_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class PinvFactors:
    """``G_beta^+ = w @ diag(sigma) @ v.T`` with ``sigma`` non-increasing.

    Entries of ``sigma`` past ``rank`` are exactly zero.
    """

    w: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank: int

    def __post_init__(self):
        # C order so that products do not depend on how the factors were produced
        for name in ("w", "sigma", "v"):
            arr = np.array(getattr(self, name), dtype=float, order="C")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def pinv(self) -> np.ndarray:
        r = self.rank
        return (self.w[:, :r] * self.sigma[:r]) @ self.v[:, :r].T


@dataclass(frozen=True, eq=False)
class Decomposition(PinvFactors):
    xi: np.ndarray = None


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def pseudo_svd(g_beta, rel_tol: float = DEFAULT_REL_TOL) -> PinvFactors:
    """Factor the pseudoinverse of a symmetric PSD Gram matrix.

    Eigenvalues ``lam <= rel_tol * lam_max`` are discarded (this also drops
    the slightly negative ones roundoff produces).

    Raises:
        DegenerateDataError: if the largest eigenvalue is not positive.
    """
    g = np.asarray(g_beta, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    if not rel_tol >= 0:
        raise ValueError(f"rel_tol must be non-negative, got {rel_tol}")
    lam, vecs = np.linalg.eigh(g)
    lam_max = lam[-1] if lam.size else 0.0
    if not lam_max > 0:
        raise DegenerateDataError("occupation Gram matrix has no positive eigenvalue")
    keep = lam > rel_tol * lam_max
    sigma = np.zeros_like(lam)
    sigma[keep] = 1.0 / lam[keep]
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    vecs = _fix_signs(vecs[:, order])
    return PinvFactors(vecs, sigma, vecs, int(keep.sum()))


def compute_modes(d_matrix, v) -> np.ndarray:
    """Modes ``xi = D V``."""
    d_matrix = np.asarray(d_matrix, dtype=float)
    v = np.asarray(v, dtype=float)
    if d_matrix.ndim != 2 or v.ndim != 2 or d_matrix.shape[1] != v.shape[0]:
        raise ValueError(f"cannot multiply D {d_matrix.shape} by V {v.shape}")
    return d_matrix @ v


def decompose(g_beta, d_matrix, rel_tol: float = DEFAULT_REL_TOL) -> Decomposition:
    f = pseudo_svd(g_beta, rel_tol)
    return Decomposition(f.w, f.sigma, f.v, f.rank, compute_modes(d_matrix, f.v))


def penrose_residuals(a, p) -> tuple[float, float, float, float]:
    """Relative residuals of the four Moore-Penrose identities for ``p = a^+``."""
    ap, pa = a @ p, p @ a
    na, np_ = np.linalg.norm(a), np.linalg.norm(p)
    return (
        np.linalg.norm(ap @ a - a) / na,
        np.linalg.norm(pa @ p - p) / np_,
        np.linalg.norm(ap - ap.T) / max(np.linalg.norm(ap), 1.0),
        np.linalg.norm(pa - pa.T) / max(np.linalg.norm(pa), 1.0),
    )


@dataclass(frozen=True, eq=False)
class SingularFunctionHandle:
    """Coefficient column ``index`` (0-based) of a decomposition, bound to its data.

    Left singular functions use columns of ``v`` and live in the scalar
    domain space; right singular functions use columns of ``w`` and are
    ``R^(m+1)``-row valued.
    """

    index: int
    coefficients: np.ndarray
    dataset: Dataset
    cfg: KernelConfig
    stacked: StackedSamples = None

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float).ravel()
        if coeffs.shape[0] != len(self.dataset):
            raise ValueError(f"{coeffs.shape[0]} coefficients for {len(self.dataset)} trajectories")
        if not 0 <= self.index < len(self.dataset):
            raise ValueError(f"index {self.index} out of range")
        object.__setattr__(self, "coefficients", coeffs)
        if self.stacked is None:
            object.__setattr__(self, "stacked", stack_samples(self.dataset))


def _column(mat: np.ndarray, j: int) -> np.ndarray:
    if not 0 <= j < mat.shape[1]:
        raise ValueError(f"index {j} out of range for {mat.shape[1]} singular functions")
    return mat[:, j]


def left_handle(dec: PinvFactors, j: int, ds: Dataset, cfg: KernelConfig) -> SingularFunctionHandle:
    return SingularFunctionHandle(j, _column(dec.v, j), ds, cfg)


def right_handle(dec: PinvFactors, j: int, ds: Dataset, cfg: KernelConfig) -> SingularFunctionHandle:
    return SingularFunctionHandle(j, _column(dec.w, j), ds, cfg)


def eval_left_singular(handle: SingularFunctionHandle, x) -> float:
    """``sum_i v_ij (k_d(x, gamma_i(T_i)) - k_d(x, gamma_i(0)))``."""
    x = np.asarray(x, dtype=float).ravel()
    ends = np.vstack([tr.states[-1] for tr in handle.dataset])
    starts = np.vstack([tr.states[0] for tr in handle.dataset])
    mu = handle.cfg.mu_d
    diff = exp_dot(ends, x, mu)[:, 0] - exp_dot(starts, x, mu)[:, 0]
    return float(handle.coefficients @ diff)


def eval_right_singular(handle: SingularFunctionHandle, x) -> np.ndarray:
    """``sum_i w_ij beta_i(x)``, a row of length ``m + 1``."""
    return handle.coefficients @ occupation_features(x, handle.stacked, handle.cfg)

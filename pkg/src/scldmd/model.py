"""The identified control-affine model and its persistence.

The vector field is ``Y(x) = D G_beta^+ beta(x)`` where ``beta(x)`` stacks the
control occupation kernels of the training trajectories evaluated at ``x``.
Column 0 of ``Y(x)`` estimates the drift ``f(x)``; the remaining ``m``
columns estimate the input matrix ``g(x)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _ode
from .data import Dataset, SampledTrajectory
from .decomposition import DEFAULT_REL_TOL, PinvFactors, decompose, penrose_residuals
from .errors import FormatError
from .gram import GramSystem, StackedSamples, assemble, occupation_features, stack_samples
from .kernels import KernelConfig, exp_dot
from .quadrature import simpson_weights
from .signals import as_signal

MAGIC = "SCLDMD1"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class IdentifiedModel:
    """Everything needed to evaluate the identified vector field.

    ``n_modes`` optionally keeps only the leading singular triplets in the
    reconstruction; ``None`` keeps all retained ones.
    """

    cfg: KernelConfig
    d_matrix: np.ndarray
    factors: PinvFactors
    training: Dataset
    n_modes: int | None = None
    _stacked: StackedSamples = field(init=False, repr=False)
    _coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # BLAS rounding depends on memory layout; fix it so reloaded models match exactly
        object.__setattr__(self, "d_matrix", np.ascontiguousarray(self.d_matrix, dtype=float))
        M = len(self.training)
        if self.d_matrix.shape != (self.training.n, M):
            raise ValueError(f"D has shape {self.d_matrix.shape}, expected {(self.training.n, M)}")
        if self.factors.w.shape != (M, M) or self.factors.v.shape != (M, M):
            raise ValueError("singular vector matrices do not match the training set size")
        if self.cfg.channels != self.training.m + 1:
            raise ValueError(f"kernel has {self.cfg.channels} channels, data need {self.training.m + 1}")
        if self.n_modes is not None and self.n_modes < 0:
            raise ValueError("n_modes must be non-negative")
        r = self.effective_rank
        xi = self.d_matrix @ self.factors.v[:, :r]
        object.__setattr__(self, "_coef", (xi * self.factors.sigma[:r]) @ self.factors.w[:, :r].T)
        object.__setattr__(self, "_stacked", stack_samples(self.training))

    @property
    def n(self) -> int:
        return self.training.n

    @property
    def m(self) -> int:
        return self.training.m

    @property
    def rank(self) -> int:
        return self.factors.rank

    @property
    def effective_rank(self) -> int:
        r = self.factors.rank
        return r if self.n_modes is None else min(r, self.n_modes)

    @property
    def modes(self) -> np.ndarray:
        return self.d_matrix @ self.factors.v

    def beta(self, x) -> np.ndarray:
        """All occupation kernels at ``x``, shape ``(M, m + 1)``."""
        return occupation_features(x, self._stacked, self.cfg)

    def beta_row(self, x, i: int) -> np.ndarray:
        return occupation_kernel(x, self.training[i], self.cfg)

    def vector_field(self, x) -> np.ndarray:
        """``[f_hat(x) | g_hat(x)]`` as an ``(n, m + 1)`` array."""
        return self._coef @ self.beta(x)

    def drift(self, x) -> np.ndarray:
        return self.vector_field(x)[:, 0]

    def control_matrix(self, x) -> np.ndarray:
        return self.vector_field(x)[:, 1:]

    def rhs(self, x, u) -> np.ndarray:
        return self.vector_field(x) @ np.concatenate(([1.0], np.atleast_1d(u)))


def occupation_kernel(x, traj: SampledTrajectory, cfg: KernelConfig, order: int = 1) -> np.ndarray:
    """Evaluate the order-``s`` control occupation kernel of one trajectory at ``x``.

    ``1/(s-1)! int_0^T (T - t)^(s-1) [1 u(t)] K(gamma(t), x) dt`` with Simpson's
    rule on the trajectory grid. ``order=1`` is the kernel used for identification.
    """
    if order < 1 or int(order) != order:
        raise ValueError(f"order must be a positive integer, got {order}")
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != traj.n:
        raise ValueError(f"point has dimension {x.shape[0]}, trajectory has {traj.n}")
    if cfg.channels != traj.m + 1:
        raise ValueError(f"kernel has {cfg.channels} channels, trajectory needs {traj.m + 1}")
    w = simpson_weights(len(traj), traj.h).weights
    if order > 1:
        lag = traj.times[-1] - traj.times
        w = w * lag ** (order - 1) / math.factorial(order - 1)
    v = np.column_stack([np.ones(len(traj)), traj.controls])
    k = np.column_stack([exp_dot(traj.states, x, mu)[:, 0] for mu in cfg.mu_v])
    return w @ (v * k)


def identify(
    ds: Dataset,
    cfg: KernelConfig,
    rel_tol: float = DEFAULT_REL_TOL,
    n_modes: int | None = None,
    gram: GramSystem | None = None,
) -> IdentifiedModel:
    """Assemble the Gram system, decompose it and build the model."""
    gram = gram or assemble(ds, cfg)
    dec = decompose(gram.g_beta, gram.d_matrix, rel_tol)
    residual = penrose_residuals(gram.g_beta, dec.pinv())[0]
    if residual > 1e-8:
        warnings.warn(
            f"G P G differs from G by {residual:.2e} (relative); rel_tol={rel_tol:g} truncates "
            "significant eigenvalues",
            RuntimeWarning,
            stacklevel=2,
        )
    return IdentifiedModel(cfg, gram.d_matrix, dec, ds, n_modes)


def predict(model: IdentifiedModel, x0, u, horizon: float, dt: float) -> SampledTrajectory:
    """Integrate the identified model with RK4 from ``x0`` under input ``u``.

    ``u`` may be a callable of time, a constant, or ``None`` for zero input;
    it is evaluated at every Runge-Kutta stage.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape[0] != model.n:
        raise ValueError(f"x0 has dimension {x0.shape[0]}, model has {model.n}")
    signal = as_signal(u, model.m)
    times = _ode.time_grid(horizon, dt)
    states = _ode.rk4(model.rhs, x0, times, signal)
    controls = np.array([signal(t) for t in times]).reshape(len(times), model.m)
    return SampledTrajectory(times, states, controls)


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: IdentifiedModel) -> dict:
    f = model.factors
    return {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "n": model.n,
        "m": model.m,
        "kernel": {"mu_d": model.cfg.mu_d, "mu_v": list(model.cfg.mu_v)},
        "d_matrix": _arr(model.d_matrix),
        "w": _arr(f.w),
        "sigma": _arr(f.sigma),
        "v": _arr(f.v),
        "rank": f.rank,
        "n_modes": model.n_modes,
        "training": {
            "ids": list(model.training.ids),
            "trajectories": [
                {"times": _arr(tr.times), "states": _arr(tr.states), "controls": _arr(tr.controls)}
                for tr in model.training
            ],
        },
    }


def model_from_dict(doc: dict) -> IdentifiedModel:
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise FormatError("not a model file (bad magic string)")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {doc.get('format_version')!r}")
    try:
        m = int(doc["m"])
        trajs = tuple(
            SampledTrajectory(
                t["times"], t["states"], np.asarray(t["controls"], dtype=float).reshape(len(t["times"]), m)
            )
            for t in doc["training"]["trajectories"]
        )
        ds = Dataset(trajs, tuple(doc["training"]["ids"]))
        cfg = KernelConfig(doc["kernel"]["mu_d"], tuple(doc["kernel"]["mu_v"]))
        factors = PinvFactors(
            np.asarray(doc["w"], dtype=float),
            np.asarray(doc["sigma"], dtype=float),
            np.asarray(doc["v"], dtype=float),
            int(doc["rank"]),
        )
        d_matrix = np.asarray(doc["d_matrix"], dtype=float).reshape(int(doc["n"]), len(trajs))
        return IdentifiedModel(cfg, d_matrix, factors, ds, doc.get("n_modes"))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"corrupted model file: {exc}") from exc


def save_model(model: IdentifiedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path) -> IdentifiedModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read model {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path} is not a valid model file: {exc}") from exc
    return model_from_dict(doc)

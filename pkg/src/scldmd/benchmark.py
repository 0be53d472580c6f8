"""Synthetic identification experiments with known ground truth.

The reference experiment records 225 one-second trajectories of the forced
Duffing oscillator from a 15 x 15 grid of initial conditions on [-3, 3]^2,
each driven by its own random sum of 15 sinusoids, identifies the model and
compares it with the true system.
"""

from __future__ import annotations

import csv
import json
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _ode
from .data import Dataset, SampledTrajectory, save_dataset
from .decomposition import DEFAULT_REL_TOL, penrose_residuals
from .errors import ConfigError, ScldmdError
from .gram import assemble
from .kernels import KernelConfig
from .model import IdentifiedModel, identify, predict, save_model
from .signals import SumOfSinusoids, VectorSignal, as_signal, parse_expression


@dataclass(frozen=True)
class TrueSystem:
    """Known control-affine system ``x' = f(x) + g(x) u``."""

    name: str
    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]

    def rhs(self, x, u) -> np.ndarray:
        return self.f(x) + self.g(x) @ np.atleast_1d(u)

    def vector_field(self, x) -> np.ndarray:
        return np.column_stack([self.f(x), self.g(x)])


def duffing_rhs(x, u) -> np.ndarray:
    """Forced Duffing oscillator ``(x2, x1 - x1^3) + (0, 2 + sin x1) u``."""
    x1, x2 = x[0], x[1]
    u = float(np.asarray(u).ravel()[0])
    return np.array([x2, x1 - x1**3 + (2.0 + np.sin(x1)) * u])


DUFFING = TrueSystem(
    "duffing",
    2,
    1,
    lambda x: np.array([x[1], x[0] - x[0] ** 3]),
    lambda x: np.array([[0.0], [2.0 + np.sin(x[0])]]),
)

LINEAR = TrueSystem(
    "linear",
    1,
    1,
    lambda x: -np.asarray(x, dtype=float).ravel()[:1],
    lambda x: np.ones((1, 1)),
)

SYSTEMS = {s.name: s for s in (DUFFING, LINEAR)}

#: Overrides of the (Duffing-shaped) ``ExperimentConfig`` defaults per system.
SYSTEM_DEFAULTS = {
    "duffing": {},
    "linear": {
        "grid_counts": (25,),
        "grid_low": (-2.0,),
        "grid_high": (2.0,),
        "x0": (1.0,),
        "eval_counts": (101,),
        "eval_low": (-1.0,),
        "eval_high": (1.0,),
    },
}


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


def _pair(value, n, name):
    try:
        arr = tuple(float(v) for v in np.broadcast_to(np.asarray(value, dtype=float), (n,)))
    except ValueError as exc:
        raise ConfigError(f"{name}: expected {n} values, got {value!r}") from exc
    if not all(np.isfinite(arr)):
        raise ConfigError(f"{name}: values must be finite")
    return arr


def _counts(value, n, name):
    return tuple(int(c) for c in _pair(value, n, name))


def _range(value, name):
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a [low, high] pair") from exc
    if not lo <= hi:
        raise ConfigError(f"{name}: low {lo} exceeds high {hi}")
    return (lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one synthetic identification run.

    Defaults reproduce the forced Duffing experiment.
    """

    system: str = "duffing"
    grid_counts: tuple[int, ...] = (15, 15)
    grid_low: tuple[float, ...] = (-3.0, -3.0)
    grid_high: tuple[float, ...] = (3.0, 3.0)
    dt: float = 0.05
    duration: float = 1.0
    n_terms: int = 15
    frequency_range: tuple[float, float] = (1.0, 3.0)
    phase_range: tuple[float, float] = (-1.0, 1.0)
    amplitude_range: tuple[float, float] = (-1.0, 1.0)
    shared_control: bool = False
    seed: int = 0
    mu_d: float = 11.0
    mu_v: float | tuple[float, ...] = 10.0
    rel_tol: float = DEFAULT_REL_TOL
    n_modes: int | None = None
    x0: tuple[float, ...] = (2.0, -2.0)
    prediction_input: str = "sin:1:1,cos:1:2"
    horizon: float = 10.0
    prediction_dt: float = 0.05
    eval_counts: tuple[int, ...] = (9, 9)
    eval_low: tuple[float, ...] = (-2.0, -2.0)
    eval_high: tuple[float, ...] = (2.0, 2.0)

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system: unknown system {self.system!r}; choose from {sorted(SYSTEMS)}")
        n = SYSTEMS[self.system].n
        counts = _counts(self.grid_counts, n, "grid_counts")
        if any(c < 1 for c in counts):
            raise ConfigError("grid_counts: every count must be at least 1")
        _set(self, "grid_counts", counts)
        for lo_name, hi_name in (("grid_low", "grid_high"), ("eval_low", "eval_high")):
            lo, hi = _pair(getattr(self, lo_name), n, lo_name), _pair(getattr(self, hi_name), n, hi_name)
            bad = [i for i in range(n) if lo[i] > hi[i]]
            if bad:
                raise ConfigError(f"{lo_name}/{hi_name}: low exceeds high in coordinate {bad[0] + 1}")
            _set(self, lo_name, lo)
            _set(self, hi_name, hi)
        ecounts = _counts(self.eval_counts, n, "eval_counts")
        if any(c < 1 for c in ecounts):
            raise ConfigError("eval_counts: every count must be at least 1")
        _set(self, "eval_counts", ecounts)
        for name in ("frequency_range", "phase_range", "amplitude_range"):
            _set(self, name, _range(getattr(self, name), name))
        for name in ("dt", "duration", "prediction_dt", "horizon", "mu_d"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name}: must be positive, got {getattr(self, name)}")
            _set(self, name, float(getattr(self, name)))
        mu_v = tuple(float(v) for v in np.atleast_1d(self.mu_v))
        if any(not v > 0 for v in mu_v):
            raise ConfigError(f"mu_v: must be positive, got {self.mu_v}")
        _set(self, "mu_v", mu_v[0] if len(mu_v) == 1 else mu_v)
        if int(self.n_terms) < 1:
            raise ConfigError("n_terms: must be at least 1")
        if not float(self.rel_tol) >= 0:
            raise ConfigError(f"rel_tol: must be non-negative, got {self.rel_tol}")
        if self.n_modes is not None and int(self.n_modes) < 0:
            raise ConfigError("n_modes: must be non-negative")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed: must be a non-negative integer, got {self.seed!r}")
        _set(self, "seed", int(self.seed))
        _set(self, "x0", _pair(self.x0, n, "x0"))
        try:
            _ode.time_grid(self.duration, self.dt)
            _ode.time_grid(self.horizon, self.prediction_dt)
        except ConfigError as exc:
            raise ConfigError(f"duration/horizon: {exc}") from exc
        if int(round(self.duration / self.dt)) < 2:
            raise ConfigError("duration: need at least two steps of dt per trajectory")
        parse_expression(self.prediction_input)

    @classmethod
    def for_system(cls, system: str, **overrides) -> "ExperimentConfig":
        """Config with the per-system defaults of ``SYSTEM_DEFAULTS`` applied."""
        if system not in SYSTEMS:
            raise ConfigError(f"system: unknown system {system!r}; choose from {sorted(SYSTEMS)}")
        return cls(system=system, **{**SYSTEM_DEFAULTS.get(system, {}), **overrides})

    @property
    def true_system(self) -> TrueSystem:
        return SYSTEMS[self.system]

    @property
    def kernel(self) -> KernelConfig:
        mu_v = self.mu_v if isinstance(self.mu_v, tuple) else (self.mu_v,) * (self.true_system.m + 1)
        return KernelConfig(self.mu_d, mu_v)

    def initial_conditions(self) -> np.ndarray:
        return grid_points(self.grid_low, self.grid_high, self.grid_counts)

    def eval_points(self) -> np.ndarray:
        return grid_points(self.eval_low, self.eval_high, self.eval_counts)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def grid_points(low, high, counts) -> np.ndarray:
    """Tensor grid, first coordinate varying slowest, as rows."""
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(low, high, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def _rng(seed: int, index: int) -> np.random.Generator:
    # PCG64 seeded through SeedSequence: stable across platforms and numpy versions
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def generate_controls(cfg: ExperimentConfig, seed: int | None = None, count: int | None = None) -> list[SumOfSinusoids]:
    """One random sum of sinusoids per trajectory, reproducible from ``seed``.

    Trajectory ``i`` draws amplitudes, then frequencies, then phases from its
    own stream, so signals do not depend on how many others are generated.
    """
    seed = cfg.seed if seed is None else seed
    count = int(np.prod(cfg.grid_counts)) if count is None else count
    out = []
    for i in range(count):
        if cfg.shared_control and i > 0:
            out.append(out[0])
            continue
        rng = _rng(seed, i)
        k = cfg.n_terms
        amps = rng.uniform(*cfg.amplitude_range, size=k)
        freqs = rng.uniform(*cfg.frequency_range, size=k)
        phases = rng.uniform(*cfg.phase_range, size=k)
        out.append(SumOfSinusoids(amps, freqs, phases))
    return out


def simulate_true(rhs, x0, u, duration: float, dt: float) -> SampledTrajectory:
    """RK4 simulation of ``x' = rhs(x, u(t))`` with ``u`` evaluated at stage times."""
    x0 = np.asarray(x0, dtype=float).ravel()
    probe = np.atleast_1d(np.asarray(u(0.0), dtype=float)) if callable(u) else np.atleast_1d(u)
    signal = as_signal(u, probe.shape[0])
    times = _ode.time_grid(duration, dt)
    states = _ode.rk4(rhs, x0, times, signal)
    controls = np.array([signal(t) for t in times]).reshape(len(times), -1)
    return SampledTrajectory(times, states, controls)


def generate_dataset(cfg: ExperimentConfig) -> Dataset:
    system = cfg.true_system
    x0s = cfg.initial_conditions()
    controls = generate_controls(cfg, count=len(x0s))
    trajs = tuple(
        simulate_true(system.rhs, x0, VectorSignal((u,)), cfg.duration, cfg.dt) for x0, u in zip(x0s, controls)
    )
    return Dataset(trajs)


def vector_field_errors(estimate, truth, points) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``||f - f_hat||_2`` and ``||g - g_hat||_F``.

    ``estimate`` and ``truth`` map a point to its ``(n, m + 1)`` vector field.
    """
    err_f, err_g = np.empty(len(points)), np.empty(len(points))
    for k, x in enumerate(points):
        a, b = np.asarray(estimate(x)), np.asarray(truth(x))
        if a.shape != b.shape:
            raise ValueError(f"vector field shapes differ: {a.shape} vs {b.shape}")
        err_f[k] = np.linalg.norm(a[:, 0] - b[:, 0])
        err_g[k] = np.linalg.norm(a[:, 1:] - b[:, 1:])
    return err_f, err_g


@dataclass(eq=False)
class ExperimentReport:
    config: ExperimentConfig
    dataset: Dataset
    model: IdentifiedModel
    truth: SampledTrajectory
    prediction: SampledTrajectory
    eval_points: np.ndarray
    error_f: np.ndarray
    error_g: np.ndarray
    metrics: dict = field(default_factory=dict)


def _stage(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScldmdError as exc:
        raise type(exc)(f"{label}: {exc}") from exc


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    system = cfg.true_system
    ds = _stage("generate", generate_dataset, cfg)
    gram = _stage("gram", assemble, ds, cfg.kernel)
    model = _stage("identify", identify, ds, cfg.kernel, cfg.rel_tol, cfg.n_modes, gram=gram)
    u = parse_expression(cfg.prediction_input)
    truth = _stage("simulate", simulate_true, system.rhs, cfg.x0, u, cfg.horizon, cfg.prediction_dt)
    pred = _stage("predict", predict, model, cfg.x0, u, cfg.horizon, cfg.prediction_dt)
    points = cfg.eval_points()
    err_f, err_g = _stage("evaluate", vector_field_errors, model.vector_field, system.vector_field, points)

    traj_err = np.max(np.abs(pred.states - truth.states), axis=0)
    sigma = model.factors.sigma[: model.rank]
    metrics = {
        "system": cfg.system,
        "trajectories": len(ds),
        "rank": model.rank,
        "effective_rank": model.effective_rank,
        "rel_tol": cfg.rel_tol,
        "seed": cfg.seed,
        "max_trajectory_error": traj_err.tolist(),
        "max_vf_error_f": float(err_f.max()),
        "max_vf_error_g": float(err_g.max()),
        "sigma_max": float(sigma[0]) if sigma.size else 0.0,
        "sigma_min_retained": float(sigma[-1]) if sigma.size else 0.0,
        "gram_eigenvalue_max": float(1.0 / sigma[-1]) if sigma.size else 0.0,
        "penrose_residual_gpg": float(penrose_residuals(gram.g_beta, model.factors.pinv())[0]),
    }
    return ExperimentReport(cfg, ds, model, truth, pred, points, err_f, err_g, metrics)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_error_surface(path, points, errors) -> None:
    n = points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(n)] + ["error"])
        for p, e in zip(points, errors):
            w.writerow([_fmt(v) for v in p] + [_fmt(e)])


def write_prediction(path, truth: SampledTrajectory | None, pred: SampledTrajectory) -> None:
    n = pred.n
    cols = ["t"]
    if truth is not None:
        cols += [f"x{i + 1}_true" for i in range(n)]
    cols += [f"x{i + 1}_hat" for i in range(n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k, t in enumerate(pred.times):
            row = [t] + (list(truth.states[k]) if truth is not None else []) + list(pred.states[k])
            w.writerow([_fmt(v) for v in row])


def write_report(report: ExperimentReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(report.dataset, out / "dataset.csv")
    save_model(report.model, out / "model.json")
    write_prediction(out / "prediction.csv", report.truth, report.prediction)
    write_error_surface(out / "vf_error_f.csv", report.eval_points, report.error_f)
    write_error_surface(out / "vf_error_g.csv", report.eval_points, report.error_g)
    (out / "metrics.json").write_text(json.dumps(report.metrics, indent=2) + "\n", encoding="utf-8")
    return out

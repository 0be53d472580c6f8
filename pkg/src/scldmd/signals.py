"""Control signals evaluated at arbitrary times."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, FormatError

Signal = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class SumOfSinusoids:
    """Scalar signal ``u(t) = sum_k a_k sin(w_k t + p_k)``."""

    amplitudes: tuple[float, ...]
    frequencies: tuple[float, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        a, w, p = (tuple(float(v) for v in arr) for arr in (self.amplitudes, self.frequencies, self.phases))
        if not len(a) == len(w) == len(p):
            raise ValueError("amplitudes, frequencies and phases must have equal length")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "phases", p)

    def __call__(self, t: float) -> float:
        return float(sum(a * math.sin(w * t + p) for a, w, p in zip(self.amplitudes, self.frequencies, self.phases)))

    def __len__(self):
        return len(self.amplitudes)

    def to_dict(self) -> dict:
        return {"amplitudes": list(self.amplitudes), "frequencies": list(self.frequencies), "phases": list(self.phases)}


@dataclass(frozen=True)
class VectorSignal:
    """One scalar signal per input channel."""

    channels: tuple[Callable[[float], float], ...]

    def __call__(self, t: float) -> np.ndarray:
        return np.array([c(t) for c in self.channels], dtype=float)

    @property
    def m(self) -> int:
        return len(self.channels)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Piecewise-linear interpolation of samples ``values`` (shape ``(K, m)``).

    Outside the sampled range the end values are held.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if len(t) < 2 or v.shape[0] != len(t):
            raise FormatError("a sampled signal needs at least two samples with matching times")
        if np.any(np.diff(t) <= 0):
            raise FormatError("sampled signal times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise FormatError("sampled signal contains non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, col) for col in self.values.T])

    @property
    def m(self) -> int:
        return self.values.shape[1]


def as_signal(u, m: int) -> Signal:
    """Wrap ``u`` so that it returns a length-``m`` float array."""
    if u is None:
        zero = np.zeros(m)
        return lambda t: zero
    if callable(u):
        def wrapped(t):
            val = np.atleast_1d(np.asarray(u(t), dtype=float))
            if val.shape != (m,):
                raise ValueError(f"control signal returned shape {val.shape}, expected ({m},)")
            return val
        return wrapped
    const = np.atleast_1d(np.asarray(u, dtype=float))
    if const.shape != (m,):
        raise ValueError(f"constant control has shape {const.shape}, expected ({m},)")
    return lambda t: const


_KINDS = {"sin": 0.0, "cos": math.pi / 2}


def parse_expression(text: str) -> VectorSignal:
    """Parse a sinusoid-sum expression.

    Terms are ``kind:amplitude:frequency[:phase]`` with ``kind`` either
    ``sin`` or ``cos``; terms are joined by ``,`` and input channels by ``;``.
    ``"sin:1:1,cos:1:2"`` is ``u(t) = sin(t) + cos(2t)``.
    """
    channels = []
    for chan in text.split(";"):
        amps, freqs, phases = [], [], []
        for term in filter(None, (s.strip() for s in chan.split(","))):
            parts = term.split(":")
            if parts[0] not in _KINDS or len(parts) not in (3, 4):
                raise ConfigError(f"bad input term {term!r}; expected kind:amplitude:frequency[:phase]")
            try:
                a, w = float(parts[1]), float(parts[2])
                p = float(parts[3]) if len(parts) == 4 else 0.0
            except ValueError as exc:
                raise ConfigError(f"bad number in input term {term!r}") from exc
            amps.append(a)
            freqs.append(w)
            phases.append(p + _KINDS[parts[0]])
        channels.append(SumOfSinusoids(amps, freqs, phases))
    return VectorSignal(tuple(channels))


def sinusoid_terms(terms: Sequence[dict]) -> SumOfSinusoids:
    """Build a scalar signal from ``{kind, amplitude, frequency, phase}`` mappings."""
    amps, freqs, phases = [], [], []
    for term in terms:
        kind = term.get("kind", "sin")
        if kind not in _KINDS:
            raise ConfigError(f"unknown sinusoid kind {kind!r}")
        amps.append(float(term["amplitude"]))
        freqs.append(float(term["frequency"]))
        phases.append(float(term.get("phase", 0.0)) + _KINDS[kind])
    return SumOfSinusoids(amps, freqs, phases)


def load_sampled_signal(path) -> SampledSignal:
    """Read a ``t,u1,...,um`` CSV."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise FormatError(f"cannot read signal {path}: {exc.strerror or exc}") from exc
    if not rows or rows[0][0] != "t" or len(rows[0]) < 2:
        raise FormatError(f"{path}: header must be 't,u1,...,um'")
    try:
        block = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if block.ndim != 2 or block.shape[1] != len(rows[0]):
        raise FormatError(f"{path}: ragged rows")
    return SampledSignal(block[:, 0], block[:, 1:])

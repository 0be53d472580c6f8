"""Sampled controlled trajectories and their CSV representation.

File layout::

    traj_id,t,x1,...,xn,u1,...,um
    0,0,1.5,-0.25,0.125
    0,0.05,...

Rows are grouped by ``traj_id`` with ascending ``t`` inside each group.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError

#: Maximum relative deviation of any step from the first one.
GRID_RTOL = 1e-9


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _bad_step(times: np.ndarray):
    """Index of the first sample whose step differs from the first step, or None."""
    steps = np.diff(times)
    h = steps[0]
    bad = np.nonzero(~(np.abs(steps - h) <= GRID_RTOL * abs(h)))[0]
    return int(bad[0]) + 1 if bad.size else None


def _check_grid(times: np.ndarray) -> float:
    h = (times[-1] - times[0]) / (len(times) - 1)
    if not h > 0:
        raise FormatError("time grid must be strictly increasing")
    k = _bad_step(times)
    if k is not None:
        raise FormatError(f"non-uniform time grid at sample {k}")
    return float(h)


@dataclass(frozen=True, eq=False)
class SampledTrajectory:
    """A state path and its control signal sampled on a shared uniform grid.

    ``states`` has shape ``(N + 1, n)`` and ``controls`` shape ``(N + 1, m)``.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    h: float = field(init=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        states = np.array(self.states, dtype=float)
        controls = np.array(self.controls, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if controls.ndim == 1:
            controls = controls[:, None]
        if controls.size == 0:
            controls = controls.reshape(len(times), 0)
        if len(times) < 3:
            raise FormatError(f"a trajectory needs at least 3 samples, got {len(times)}")
        if states.ndim != 2 or states.shape[0] != len(times):
            raise FormatError(f"states shape {states.shape} does not match {len(times)} samples")
        if controls.ndim != 2 or controls.shape[0] != len(times):
            raise FormatError(
                f"controls shape {controls.shape} does not match {len(times)} samples"
            )
        if states.shape[1] < 1:
            raise FormatError("state dimension must be at least 1")
        for name, arr in (("times", times), ("states", states), ("controls", controls)):
            if not np.all(np.isfinite(arr)):
                raise FormatError(f"non-finite value in {name}")
        h = _check_grid(times)
        for arr in (times, states, controls):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.controls.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True, eq=False)
class Dataset:
    trajectories: tuple[SampledTrajectory, ...]
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise FormatError("a dataset needs at least one trajectory")
        n, m = trajs[0].n, trajs[0].m
        for i, tr in enumerate(trajs):
            if (tr.n, tr.m) != (n, m):
                raise FormatError(
                    f"trajectory {i} has (n, m) = ({tr.n}, {tr.m}), expected ({n}, {m})"
                )
        ids = tuple(str(i) for i in self.ids) or tuple(str(i) for i in range(len(trajs)))
        if len(ids) != len(trajs):
            raise FormatError(f"{len(ids)} ids for {len(trajs)} trajectories")
        if len(set(ids)) != len(ids):
            raise FormatError("trajectory ids must be unique")
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.trajectories[0].n

    @property
    def m(self) -> int:
        return self.trajectories[0].m

    def __len__(self):
        return len(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def __iter__(self):
        return iter(self.trajectories)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(
            tuple(self.trajectories[i] for i in indices),
            tuple(self.ids[i] for i in indices),
        )


def header(n: int, m: int) -> list[str]:
    return ["traj_id", "t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]


def _parse_header(row: list[str]) -> tuple[int, int]:
    if len(row) < 3 or row[:2] != ["traj_id", "t"]:
        raise FormatError("header must start with 'traj_id,t,x1'")
    xs = [c for c in row[2:] if c.startswith("x")]
    n = len(xs)
    m = len(row) - 2 - n
    if n < 1 or row != header(n, m):
        raise FormatError(f"header {','.join(row)!r} does not match 'traj_id,t,x1,...,xn,u1,...,um'")
    return n, m


def load_dataset(path) -> Dataset:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read dataset {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is not UTF-8 text") from exc
    if not rows:
        raise FormatError(f"{path} is empty")
    n, m = _parse_header(rows[0])
    width = 2 + n + m

    groups: dict[str, list[tuple[int, list[float]]]] = {}
    last_id = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise FormatError(f"row {lineno}: expected {width} fields, got {len(row)}")
        tid = row[0]
        if tid != last_id and tid in groups:
            raise FormatError(f"row {lineno}: rows of trajectory {tid!r} are not contiguous")
        try:
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise FormatError(f"row {lineno}: {exc}") from exc
        if not all(np.isfinite(values)):
            raise FormatError(f"row {lineno}: non-finite value")
        groups.setdefault(tid, []).append((lineno, values))
        last_id = tid

    trajectories = []
    for tid, entries in groups.items():
        block = np.array([v for _, v in entries])
        lines = [ln for ln, _ in entries]
        times = block[:, 0]
        back = np.nonzero(np.diff(times) <= 0)[0]
        if back.size:
            raise FormatError(f"row {lines[back[0] + 1]}: time is not ascending in trajectory {tid!r}")
        if len(times) >= 3:
            k = _bad_step(times)
            if k is not None:
                raise FormatError(f"row {lines[k]}: non-uniform time grid in trajectory {tid!r}")
        try:
            trajectories.append(SampledTrajectory(times, block[:, 1 : 1 + n], block[:, 1 + n :]))
        except FormatError as exc:
            raise FormatError(f"trajectory {tid!r} (row {lines[0]}): {exc}") from exc
    return Dataset(tuple(trajectories), tuple(groups))


def save_dataset(ds: Dataset, path) -> None:
    if not isinstance(ds, Dataset):
        ds = Dataset(tuple(ds))
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header(ds.n, ds.m))
            for tid, tr in zip(ds.ids, ds.trajectories):
                for k in range(len(tr)):
                    writer.writerow(
                        [tid, _fmt(tr.times[k])]
                        + [_fmt(v) for v in tr.states[k]]
                        + [_fmt(v) for v in tr.controls[k]]
                    )
    except OSError as exc:
        raise OSError(f"cannot write dataset {path}: {exc.strerror or exc}") from exc

"""Composite Simpson weights on uniform sample grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    weights: np.ndarray
    h: float

    @property
    def span(self) -> float:
        return (len(self.weights) - 1) * self.h


def simpson_weights(sample_count: int, h: float) -> QuadratureRule:
    """Composite Simpson 1/3 weights for ``sample_count`` equally spaced samples.

    An odd count gives the textbook ``h/3 * [1, 4, 2, 4, ..., 2, 4, 1]`` stencil.
    With an even count the final interval is closed with the trapezoid rule,
    so the rule stays exact on linear functions and sums to the grid span.
    """
    if int(sample_count) != sample_count or sample_count < 3:
        raise ValueError(f"Simpson's rule needs at least 3 samples, got {sample_count}")
    if not h > 0:
        raise ValueError(f"spacing must be positive, got {h}")
    sample_count = int(sample_count)
    odd = sample_count if sample_count % 2 == 1 else sample_count - 1
    w = np.zeros(sample_count)
    w[:odd] = 2.0
    w[1:odd:2] = 4.0
    w[0] = w[odd - 1] = 1.0
    w[:odd] *= h / 3.0
    if odd != sample_count:
        w[-2] += h / 2.0
        w[-1] += h / 2.0
    w.setflags(write=False)
    return QuadratureRule(w, float(h))


def integrate_sampled(values, rule: QuadratureRule):
    """Apply ``rule`` along the first axis of ``values``.

    Scalars per sample give a float; vectors (or arrays) per sample give an
    array of the trailing shape.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.shape[0] != len(rule.weights):
        got = values.shape[0] if values.ndim else 0
        raise ValueError(f"expected {len(rule.weights)} samples, got {got}")
    out = np.tensordot(rule.weights, values, axes=(0, 0))
    return float(out) if out.ndim == 0 else out

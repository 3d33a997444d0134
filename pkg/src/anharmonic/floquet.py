"""Monodromy of the homogeneous Lamé equation over one period of ``x0``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lame import OscillatorParams, x0
from .oracle import rk4
from .stochastic import TimeGrid

__all__ = ["MonodromyReport", "monodromy", "floquet_check"]


@dataclass
class MonodromyReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    trace: float
    det: float
    jordan_offdiag: float
    unstable: bool
    period: float


def monodromy(coefficient: Callable[[np.ndarray], np.ndarray], period: float, n_steps: int = 20_000) -> np.ndarray:
    """Fundamental matrix at ``period`` of ``w'' = coefficient(t) w`` started from the identity."""
    grid = TimeGrid(period, n_steps)
    t = grid.times
    half = np.empty(2 * t.size - 1)
    half[0::2] = t
    half[1::2] = 0.5 * (t[1:] + t[:-1])
    coef = np.asarray(coefficient(half), dtype=float) * np.ones_like(half)

    def f(_t, s, j):
        return np.stack([s[1], coef[j] * s[0]])

    return rk4(f, np.eye(2), t)[-1]


def floquet_check(
    params: OscillatorParams,
    n_steps: int = 20_000,
    coefficient: Callable[[np.ndarray], np.ndarray] | None = None,
    period: float | None = None,
    tol: float = 1e-6,
) -> MonodromyReport:
    """Integrate ``w'' = 2 x0(t) w`` over one period and classify the monodromy.

    Both multipliers of the Lamé problem equal 1; instability shows up as a
    nontrivial Jordan block, i.e. ``M - I`` is nonzero although its spectrum
    is ``{0}``.  ``coefficient``/``period`` override the equation for sanity
    checks of the integrator.

    Raises:
        FloatingPointError: If the integration produces non-finite values.
    """
    if coefficient is None:
        coefficient = lambda t: 2.0 * x0(t, params)  # noqa: E731
    period = params.period if period is None else period
    M = monodromy(coefficient, period, n_steps)
    if not np.all(np.isfinite(M)):
        raise FloatingPointError("monodromy integration produced non-finite values")
    ev = np.linalg.eigvals(M)
    off = float(np.max(np.abs(M - np.eye(2))))
    both_one = bool(np.all(np.abs(ev - 1.0) <= tol))
    unstable = bool(np.any(np.abs(ev) > 1.0 + tol)) or (both_one and off > 1e3 * tol)
    return MonodromyReport(
        matrix=M,
        eigenvalues=ev,
        trace=float(np.trace(M)),
        det=float(np.linalg.det(M)),
        jordan_offdiag=off,
        unstable=unstable,
        period=period,
    )

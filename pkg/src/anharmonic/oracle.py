"""Brute-force reference integrators.

Euler-Maruyama for the full stochastic system and classical RK4 for the
deterministic orbit and the homogeneous Lamé equation.  These deliberately
share nothing with the closed-form machinery except the orbit parameters, so
they can serve as independent checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .elliptic import jacobi_sn_cn_dn
from .lame import OscillatorParams, x0
from .stochastic import BrownianPath, TimeGrid

__all__ = ["SdeRunResult", "euler_maruyama", "rk4", "rk4_deterministic", "rk4_lame"]


@dataclass
class SdeRunResult:
    """Euler-Maruyama trajectory, truncated at the first blow-up if any."""

    x: np.ndarray
    xi: np.ndarray
    exploded: bool
    blowup_index: int | None = None


def euler_maruyama(
    params: OscillatorParams,
    sigma: float,
    path: BrownianPath,
    blowup_threshold: float = 1e6,
    noise_mode: str = "additive",
    y: float | None = None,
    eta: float | None = None,
    driver_increments: np.ndarray | None = None,
) -> SdeRunResult:
    """Integrate ``dx = xi dt, dxi = (x**2 - B) dt + sigma dB``.

    ``path.increments`` may carry a leading batch axis, in which case all paths
    advance together; explosion is then reported for the whole batch only via
    NaN-free truncation of the affected path (single-path use records
    ``blowup_index``).

    Args:
        y, eta: Initial data; default to the orbit's start point and velocity.
        noise_mode: ``"additive"`` or ``"multiplicative"`` (noise scaled by x).
        driver_increments: Replace ``dB`` by increments of another driver
            (e.g. a bounded martingale) on the same grid.
    """
    dt = path.grid.dt
    dW = path.increments if driver_increments is None else driver_increments
    n = dW.shape[-1]
    batch = dW.shape[:-1]
    x = np.empty(batch + (n + 1,))
    xi = np.empty_like(x)
    x[..., 0] = params.y if y is None else y
    xi[..., 0] = params.eta if eta is None else eta
    B = params.B
    mult = noise_mode == "multiplicative"
    if noise_mode not in ("additive", "multiplicative"):
        raise ValueError(f"unknown noise mode {noise_mode!r}")
    for k in range(n):
        xk = x[..., k]
        noise = sigma * dW[..., k]
        if mult:
            noise = noise * xk
        x[..., k + 1] = xk + xi[..., k] * dt
        xi[..., k + 1] = xi[..., k] + (xk * xk - B) * dt + noise
        if not batch and abs(x[k + 1]) > blowup_threshold:
            return SdeRunResult(x[: k + 2].copy(), xi[: k + 2].copy(), True, k + 1)
        if batch and np.any(np.abs(x[..., k + 1]) > blowup_threshold):
            return SdeRunResult(x[..., : k + 2].copy(), xi[..., : k + 2].copy(), True, k + 1)
    return SdeRunResult(x, xi, False, None)


def rk4(f: Callable[[float, np.ndarray, int], np.ndarray], y0, t: np.ndarray) -> np.ndarray:
    """Classical RK4 on the grid ``t``.

    ``f(t, y, j)`` receives ``j``, the index of the stage time in the half-step
    grid ``t0, t0 + h/2, t1, ...`` so callers can use precomputed coefficients.
    """
    y = np.empty((t.size,) + np.shape(y0))
    y[0] = y0
    for k in range(t.size - 1):
        h = t[k + 1] - t[k]
        yk = y[k]
        k1 = f(t[k], yk, 2 * k)
        k2 = f(t[k] + 0.5 * h, yk + 0.5 * h * k1, 2 * k + 1)
        k3 = f(t[k] + 0.5 * h, yk + 0.5 * h * k2, 2 * k + 1)
        k4 = f(t[k + 1], yk + h * k3, 2 * k + 2)
        y[k + 1] = yk + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _half_grid(t: np.ndarray) -> np.ndarray:
    out = np.empty(2 * t.size - 1)
    out[0::2] = t
    out[1::2] = 0.5 * (t[1:] + t[:-1])
    return out


def rk4_deterministic(params: OscillatorParams, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """RK4 for ``x' = xi, xi' = x**2 - B`` from ``(y, eta)``; returns ``(x, xi)``."""
    B = params.B

    def f(_t, s, _j):
        return np.array([s[1], s[0] * s[0] - B])

    sol = rk4(f, np.array([params.y, params.eta]), grid.times)
    return sol[:, 0], sol[:, 1]


def rk4_lame(
    params: OscillatorParams,
    grid: TimeGrid,
    init: tuple[float, float] | np.ndarray,
    scaled: bool = False,
) -> np.ndarray:
    """RK4 for the homogeneous equation ``w'' = 2 x0(t) w``.

    Args:
        init: ``(w(0), w'(0))``, or a 2x2 array whose columns are integrated
            simultaneously (fundamental matrix).
        scaled: Integrate instead the Lamé form in the variable
            ``u = omega t + phase`` with no phase shift, i.e.
            ``u'' = (12/(a-c)) (c - (a+2c) sn(u)**2) u``, on ``grid.times``.

    Returns:
        Array of shape ``(n_steps + 1, 2)`` or ``(n_steps + 1, 2, 2)``.
    """
    half = _half_grid(grid.times)
    if scaled:
        sn, _, _ = jacobi_sn_cn_dn(half, params.q)
        coef = 12.0 / (params.a - params.c) * (params.c - (params.a + 2.0 * params.c) * sn**2)
    else:
        coef = 2.0 * x0(half, params)

    def f(_t, s, j):
        return np.stack([s[1], coef[j] * s[0]])

    return rk4(f, np.asarray(init, dtype=float), grid.times)

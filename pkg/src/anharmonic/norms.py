"""Accurate norms of smooth functions on ``[0, T]``.

Sup norms are taken over the endpoints and the critical points (roots of the
derivative located by sign changes and refined with Brent's method).  L1 and L2
norms use composite Gauss-Legendre panels split at the roots of the integrand,
so the result is smooth in ``T`` and accurate to near machine precision for
the analytic Lamé solutions.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

Func = Callable[[np.ndarray], np.ndarray]

_GL_NODES, _GL_WEIGHTS = leggauss(24)


def _roots(f: Func, T: float, step: float) -> list[float]:
    n = max(8, int(math.ceil(T / step)))
    t = np.linspace(0.0, T, n + 1)
    v = np.asarray(f(t), dtype=float)
    out = []
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        out.append(brentq(lambda s: float(f(np.array([s]))[0]), t[i], t[i + 1], xtol=1e-15, rtol=1e-15))
    out.extend(t[1:-1][v[1:-1] == 0.0].tolist())
    return sorted(out)


def sup_abs(f: Func, df: Func, T: float, step: float) -> float:
    """``max_{[0,T]} |f|`` given the derivative ``df``."""
    if T <= 0.0:
        return float(abs(f(np.array([0.0]))[0]))
    pts = np.array([0.0, T] + _roots(df, T, step))
    return float(np.max(np.abs(f(pts))))


def _panels(a: float, b: float, max_len: float) -> np.ndarray:
    n = max(1, int(math.ceil((b - a) / max_len)))
    return np.linspace(a, b, n + 1)


def integrate_abs(f: Func, T: float, step: float, power: int = 1) -> float:
    """``int_0^T |f|**power`` with panels split at the roots of ``f``."""
    if T <= 0.0:
        return 0.0
    cuts = [0.0] + _roots(f, T, step) + [T]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:], strict=True):
        edges = _panels(a, b, 4.0 * step)
        lo, hi = edges[:-1, None], edges[1:, None]
        nodes = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
        vals = np.abs(np.asarray(f(nodes.ravel())).reshape(nodes.shape)) ** power
        total += float(np.sum(0.5 * (hi - lo)[:, 0] * (vals @ _GL_WEIGHTS)))
    return total


def l1_norm(f: Func, T: float, step: float) -> float:
    return integrate_abs(f, T, step, power=1)


def l2_norm(f: Func, T: float, step: float) -> float:
    return math.sqrt(integrate_abs(f, T, step, power=2))

"""Convergence horizon of the expansion driven by a bounded martingale ``Z``.

With ``N(T) = |w2|_inf |w1|_1 + |w1|_inf |w2|_1`` and
``M(T) = sup_{s<=T} |Z(s)|_inf (|w2'|_inf |w1|_1 + |w1'|_inf |w2|_1)``
(all norms on ``[0, T]``) the coefficients obey
``|chi_n| <= c_n M**n N**(n-1)`` with ``c_n`` the Catalan numbers, and the
series converges on ``[0, T_sigma]`` where ``4 sigma M N = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .lame import FundamentalPair, x0
from .norms import l1_norm, sup_abs
from .stochastic import TimeGrid, kernel_quadrature, x1_path_ibp

__all__ = [
    "DivergedError",
    "OutOfRadiusError",
    "BoundedMartingaleDriver",
    "example_driver",
    "zero_driver",
    "catalan",
    "catalan_series",
    "n_functional",
    "m_functional",
    "solve_T_sigma",
    "tail_bound",
    "driver_coefficients",
    "coefficient_envelope",
    "envelope_ratios",
    "coefficient_envelope_check",
]

VARIANTS = ("standard", "conservative")
T_MAX = 1e6
RADIUS_TOL = 1e-9


class DivergedError(RuntimeError):
    """No convergence horizon below ``T_MAX``."""


class OutOfRadiusError(ValueError):
    """``4 sigma M(T) N(T) > 1``: the Catalan series bound does not apply."""


@dataclass(frozen=True)
class BoundedMartingaleDriver:
    """A bounded continuous martingale written as a function of Brownian motion.

    Attributes:
        name: Label used in reports.
        evaluator: ``(B values, times) -> Z values``; must vanish at ``t = 0``.
        sup_norm: Nondecreasing ``t -> sup_{s<=t} ||Z(s)||_inf``.  It has to be
            an almost-sure bound supplied analytically, not a sample estimate.
    """

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(compare=False)
    sup_norm: Callable[[float], float] = field(compare=False)

    def values(self, brownian_values: np.ndarray, times: np.ndarray) -> np.ndarray:
        return self.evaluator(brownian_values, times)


def example_driver() -> BoundedMartingaleDriver:
    """``Z(t) = sin(B(t)) e**t`` with ``sup ||Z(s)||_inf = e**t``."""
    return BoundedMartingaleDriver(
        name="bounded-example",
        evaluator=lambda b, t: np.sin(b) * np.exp(t),
        sup_norm=math.exp,
    )


def zero_driver() -> BoundedMartingaleDriver:
    """``Z = 0``; every coefficient beyond ``x0`` vanishes and no horizon exists."""
    return BoundedMartingaleDriver(
        name="zero", evaluator=lambda b, t: np.zeros_like(np.asarray(b, dtype=float)), sup_norm=lambda t: 0.0
    )


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    """Shifted Catalan numbers: ``c_1 = c_2 = 1``, ``c_n = sum_{j<n} c_j c_{n-j}``."""
    if n < 1:
        raise ValueError("catalan(n) needs n >= 1")
    if n <= 2:
        return 1
    return sum(catalan(j) * catalan(n - j) for j in range(1, n))


def catalan_series(y: float, terms: int) -> float:
    """Partial sum ``sum_{n=1}^{terms} c_n y**n``."""
    return math.fsum(catalan(n) * y**n for n in range(1, terms + 1))


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def _sup(pair: FundamentalPair, which: str, T: float, step: float | None = None) -> float:
    s = pair.root_step if step is None else step
    table = {
        "w1": (pair.w1, pair.w1_dot),
        "w2": (pair.w2, pair.w2_dot),
        "dw1": (pair.w1_dot, pair.w1_ddot),
        "dw2": (pair.w2_dot, pair.w2_ddot),
    }
    f, df = table[which]
    return sup_abs(f, df, T, s)


def _l1(pair: FundamentalPair, which: str, T: float, step: float | None = None) -> float:
    return l1_norm(pair.w1 if which == "w1" else pair.w2, T, pair.root_step if step is None else step)


def n_functional(pair: FundamentalPair, T: float, variant: str = "standard", step: float | None = None) -> float:
    """``N(T)``; the conservative variant uses ``max(|w|_inf, |w'|_inf)``.

    ``step`` is the root-search sampling step (default: period / 256).
    """
    _check_variant(variant)
    if T <= 0.0:
        return 0.0
    s1, s2 = _sup(pair, "w1", T, step), _sup(pair, "w2", T, step)
    if variant == "conservative":
        s1, s2 = max(s1, _sup(pair, "dw1", T, step)), max(s2, _sup(pair, "dw2", T, step))
    return s2 * _l1(pair, "w1", T, step) + s1 * _l1(pair, "w2", T, step)


def m_functional(
    pair: FundamentalPair,
    driver: BoundedMartingaleDriver,
    T: float,
    variant: str = "standard",
    step: float | None = None,
) -> float:
    """``M(T)`` with the derivative sup norms and the driver's a.s. bound."""
    _check_variant(variant)
    if T <= 0.0:
        return 0.0
    z = driver.sup_norm(T)
    if z == 0.0:
        return 0.0
    d1, d2 = _sup(pair, "dw1", T, step), _sup(pair, "dw2", T, step)
    if variant == "conservative":
        d1, d2 = max(d1, _sup(pair, "w1", T, step)), max(d2, _sup(pair, "w2", T, step))
    return z * (d2 * _l1(pair, "w1", T, step) + d1 * _l1(pair, "w2", T, step))


def _product(pair, driver, T, variant, step=None):
    m = m_functional(pair, driver, T, variant, step)
    return 0.0 if m == 0.0 else m * n_functional(pair, T, variant, step)


def solve_T_sigma(
    pair: FundamentalPair,
    driver: BoundedMartingaleDriver,
    sigma: float,
    variant: str = "standard",
    tol: float = 1e-10,
    step: float | None = None,
) -> float:
    """Unique root of ``4 sigma M(T) N(T) = 1`` by doubling then bisection.

    A log-spaced scan of the bracket asserts a single sign change first.

    Raises:
        DivergedError: No bracket found below ``T_MAX``.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    target = 1.0 / (4.0 * sigma)

    def g(T: float) -> float:
        return _product(pair, driver, T, variant, step) - target

    hi = min(pair.params.period / 8.0, 1.0)
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > T_MAX:
            raise DivergedError(f"M(T) N(T) stays below 1/(4 sigma) up to T = {T_MAX:g}")
    lo = hi / 2.0
    while lo > 1e-12 and g(lo) >= 0.0:
        lo /= 2.0
    scan = np.geomspace(lo, hi, 33)
    signs = np.sign([g(T) for T in scan])
    if np.count_nonzero(np.diff(signs)) != 1:
        raise ArithmeticError("M(T) N(T) - 1/(4 sigma) changes sign more than once")
    i = int(np.nonzero(np.diff(signs))[0][0])
    lo, hi = float(scan[i]), float(scan[i + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(4.0 * sigma * (gm + target) - 1.0) <= tol:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * hi:
            break
    return 0.5 * (lo + hi)


def tail_bound(
    pair: FundamentalPair, driver: BoundedMartingaleDriver, sigma: float, T: float, variant: str = "standard"
) -> float:
    """Uniform bound ``(1 - sqrt(1 - 4 sigma M N)) / (2 N)`` on ``|chi - x0|`` over ``[0, T]``.

    Within ``RADIUS_TOL`` of the radius the square root is taken as zero, so at
    the solver's ``T_sigma`` this returns ``1 / (2 N(T_sigma))``.

    Raises:
        OutOfRadiusError: ``4 sigma M(T) N(T) > 1``.
    """
    if sigma == 0.0 or T <= 0.0:
        return 0.0
    N = n_functional(pair, T, variant)
    y = 4.0 * sigma * m_functional(pair, driver, T, variant) * N
    if y > 1.0 + RADIUS_TOL:
        raise OutOfRadiusError(f"4 sigma M N = {y:.6g} > 1 at T = {T:g}")
    if abs(1.0 - y) <= RADIUS_TOL:
        y = 1.0
    return (1.0 - math.sqrt(1.0 - y)) / (2.0 * N)


def driver_coefficients(
    pair: FundamentalPair,
    driver: BoundedMartingaleDriver,
    grid: TimeGrid,
    brownian_values: np.ndarray,
    order: int,
) -> np.ndarray:
    """Coefficients ``chi_0 .. chi_order`` driven by ``Z``; shape ``(n_paths, order + 1, n_steps + 1)``.

    ``chi_1`` uses the integration-by-parts (pathwise Riemann) form against the
    driver values; higher orders follow the same quadratic recursion as the
    Brownian case.
    """
    b = np.atleast_2d(brownian_values)
    t = grid.times
    z = driver.values(b, t)
    out = np.empty((b.shape[0], order + 1, t.size))
    out[:, 0, :] = x0(t, pair.params)
    if order >= 1:
        out[:, 1, :] = x1_path_ibp(pair, grid, z)
    basis = pair.sample(t)
    lower = out.transpose(1, 0, 2)
    for n in range(2, order + 1):
        src = sum(lower[j] * lower[n - j] for j in range(1, n))
        out[:, n, :] = kernel_quadrature(basis, src, grid.dt)
    return out


def coefficient_envelope(
    pair: FundamentalPair, driver: BoundedMartingaleDriver, T: float, n: int, variant: str = "standard"
) -> np.ndarray:
    """``[c_k M(T)**k N(T)**(k-1) for k = 1..n]``."""
    M, N = m_functional(pair, driver, T, variant), n_functional(pair, T, variant)
    return np.array([catalan(k) * M**k * N ** (k - 1) for k in range(1, n + 1)])


def envelope_ratios(coeffs: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    """Largest ``|chi_k| / envelope_k`` over paths and grid points, per order."""
    n = envelope.size
    sup = np.abs(coeffs[:, 1 : n + 1, :]).max(axis=(0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(envelope > 0, sup / envelope, np.where(sup > 0, np.inf, 0.0))


def coefficient_envelope_check(
    coeffs_from_driver: np.ndarray,
    pair: FundamentalPair,
    driver: BoundedMartingaleDriver,
    T: float,
    n: int,
    envelope_scale: float = 1.0,
    variant: str = "standard",
) -> bool:
    """True iff every path obeys ``|chi_k| <= scale * c_k M**k N**(k-1)`` for ``k = 1..n``.

    ``envelope_scale < 1`` shrinks the envelope (used as a negative control).
    """
    env = envelope_scale * coefficient_envelope(pair, driver, T, n, variant)
    return bool(np.all(envelope_ratios(coeffs_from_driver, env) <= 1.0))

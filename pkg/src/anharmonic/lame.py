"""Periodic orbit of the cubic oscillator and the Lamé fundamental solutions.

The deterministic system is ``x'' = x**2 - B`` with ``B = (a**2 + c**2 + ac)/3``.
For ``c < -a-c < a`` and a start point ``y`` in ``[c, -a-c]`` the orbit is
periodic and has the closed form

    x0(t) = c - (a + 2c) sn(omega t + phase, q)**2

with ``omega = sqrt((a-c)/6)`` and ``q = sqrt((2c+a)/(c-a))``.  Linearising
around it gives the Lamé equation ``u'' + (4 + 4q**2 - 12 q**2 sn**2) u = 0``
whose two solutions ``u1``, ``u2`` are implemented in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (
    EllipticDomainError,
    complete_E,
    complete_K,
    incomplete_F,
    jacobi_epsilon,
    jacobi_sn_cn_dn,
)

__all__ = [
    "ParameterError",
    "OscillatorParams",
    "hamiltonian",
    "x0",
    "x0_dot",
    "lame_eigenvalue",
    "u1",
    "u1_dot",
    "u2",
    "u2_dot",
    "u2_coefficients",
    "mu",
    "SampledPair",
    "FundamentalPair",
    "fundamental_pair",
]


class ParameterError(ValueError):
    """Raised for oscillator parameters that do not give a periodic orbit."""


@dataclass(frozen=True)
class OscillatorParams:
    """Roots ``c < -a-c < a`` of the energy cubic, start point and velocity branch.

    Attributes:
        a: Largest root.
        c: Smallest root.
        y: Initial position, in ``[c, -a-c]``.
        eta_sign: Sign of the initial velocity, +1 or -1.
    """

    a: float = 1.0
    c: float = -1.0
    y: float = 0.0
    eta_sign: int = 1

    def __post_init__(self) -> None:
        a, c, y = self.a, self.c, self.y
        if not all(math.isfinite(v) for v in (a, c, y)):
            raise ParameterError("a, c and y must be finite")
        if not c < 0.0 < a:
            raise ParameterError(f"need c < 0 < a, got a={a}, c={c}")
        if not 2.0 * c + a < 0.0:
            raise ParameterError(f"need 2c + a < 0 (q = 0 excluded), got a={a}, c={c}")
        if not c + 2.0 * a > 0.0:
            raise ParameterError(f"need -a-c < a so that q < 1, got a={a}, c={c}")
        if not c <= y <= -a - c:
            raise ParameterError(f"y={y} must lie in [c, -a-c] = [{c}, {-a - c}]")
        if self.eta_sign not in (1, -1):
            raise ParameterError(f"eta_sign must be +1 or -1, got {self.eta_sign!r}")
        try:
            complete_K(self.q)
        except EllipticDomainError as exc:
            raise ParameterError(str(exc)) from exc

    @property
    def B(self) -> float:
        return (self.a**2 + self.c**2 + self.a * self.c) / 3.0

    @property
    def energy(self) -> float:
        """Energy level ``ac(a+c)/3`` of the periodic orbit."""
        return self.a * self.c * (self.a + self.c) / 3.0

    @property
    def q(self) -> float:
        return math.sqrt((2.0 * self.c + self.a) / (self.c - self.a))

    @property
    def omega(self) -> float:
        return math.sqrt((self.a - self.c) / 6.0)

    @property
    def i_y(self) -> float:
        # clamp guards the endpoints y = c and y = -a-c against round-off
        s = min(max((self.c - self.y) / (2.0 * self.c + self.a), 0.0), 1.0)
        return float(incomplete_F(math.asin(math.sqrt(s)), self.q))

    @property
    def phase(self) -> float:
        """Signed phase: ``i_y`` on the forward branch, ``-i_y`` on the backward one."""
        return self.eta_sign * self.i_y

    @property
    def period(self) -> float:
        """Period ``2 sqrt(6/(a-c)) K(q)`` of ``x0`` and ``w1``."""
        return 2.0 * complete_K(self.q) / self.omega

    @property
    def eta(self) -> float:
        """Initial velocity implied by the energy level and branch."""
        y = self.y
        v2 = 2.0 * (self.energy + y**3 / 3.0 - self.B * y)
        return self.eta_sign * math.sqrt(max(v2, 0.0))


def hamiltonian(x, xi, params: OscillatorParams):
    """``H(x, xi) = xi**2/2 - x**3/3 + B x``."""
    return 0.5 * np.square(xi) - np.power(x, 3) / 3.0 + params.B * np.asarray(x)


def x0(t, params: OscillatorParams):
    """Closed-form periodic solution of the deterministic system."""
    sn, _, _ = jacobi_sn_cn_dn(params.omega * np.asarray(t, dtype=float) + params.phase, params.q)
    return params.c - (params.a + 2.0 * params.c) * np.square(sn)


def x0_dot(t, params: OscillatorParams):
    """Analytic time derivative of :func:`x0`."""
    sn, cn, dn = jacobi_sn_cn_dn(params.omega * np.asarray(t, dtype=float) + params.phase, params.q)
    return -2.0 * (params.a + 2.0 * params.c) * params.omega * sn * cn * dn


def lame_eigenvalue(params: OscillatorParams) -> float:
    """Eigenvalue ``h = 12c/(c-a) = 4 + 4q**2``; both forms are checked."""
    h1 = 12.0 * params.c / (params.c - params.a)
    h2 = 4.0 + 4.0 * params.q**2
    if abs(h1 - h2) > 1e-12 * max(1.0, abs(h1)):
        raise ArithmeticError(f"eigenvalue forms disagree: {h1!r} vs {h2!r}")
    return h1


def u1(t, q: float):
    """Lamé polynomial ``sn cn dn`` with ``u1(0) = 0``, ``u1'(0) = 1``."""
    sn, cn, dn = jacobi_sn_cn_dn(t, q)
    return sn * cn * dn


def u1_dot(t, q: float):
    sn, cn, dn = jacobi_sn_cn_dn(t, q)
    return (cn * dn) ** 2 - (sn * dn) ** 2 - (q * sn * cn) ** 2


def u2_coefficients(q: float) -> tuple[float, float, float, float, float]:
    """``(alpha0, alpha1, alpha2, beta0, beta1)`` of the second solution."""
    m = q * q
    return (
        -1.0 + m,
        -2.0 * m**3 + 3.0 * m**2 - 5.0 * m + 2.0,
        2.0 * m * (m * m - m + 1.0),
        -(m * m) + 3.0 * m - 2.0,
        2.0 * (m * m - m + 1.0),
    )


def _u2_parts(t, q):
    t = np.asarray(t, dtype=float)
    sn, cn, dn = jacobi_sn_cn_dn(t, q)
    a0, a1, a2, b0, b1 = u2_coefficients(q)
    cn2 = np.square(cn)
    periodic = a0 + a1 * cn2 + a2 * cn2 * cn2
    growth = b0 * t + b1 * np.asarray(jacobi_epsilon(t, q))
    return sn, cn, dn, periodic, growth


def u2(t, q: float):
    """Second Lamé solution ``C(t) + D(t) u1(t)``; Wronskian with ``u1`` is ``-(1-q**2)**2``."""
    sn, cn, dn, periodic, growth = _u2_parts(t, q)
    return periodic + growth * sn * cn * dn


def u2_dot(t, q: float):
    sn, cn, dn, _, growth = _u2_parts(t, q)
    a0, a1, a2, b0, b1 = u2_coefficients(q)
    cn2 = np.square(cn)
    p = sn * cn * dn
    dp = (cn * dn) ** 2 - (sn * dn) ** 2 - (q * sn * cn) ** 2
    dperiodic = -2.0 * p * (a1 + 2.0 * a2 * cn2)
    dgrowth = b0 + b1 * np.square(dn)
    return dperiodic + dgrowth * p + growth * dp


def mu(q: float) -> float:
    """Secular growth rate ``beta0 + beta1 E/K`` of ``u2``."""
    if not 0.0 < q < 1.0:
        raise EllipticDomainError(f"mu requires 0 < q < 1, got {q!r}")
    _, _, _, b0, b1 = u2_coefficients(q)
    return b0 + b1 * complete_E(q) / complete_K(q)


@dataclass(frozen=True)
class SampledPair:
    """Values of ``w1, w2`` and their derivatives on a time grid."""

    t: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    dw1: np.ndarray
    dw2: np.ndarray


@dataclass(frozen=True)
class FundamentalPair:
    """Solutions of ``w'' = 2 x0(t) w`` with unit Wronskian.

    ``w1(t) = u1(omega t + phase)`` is kept as is; ``w2`` is ``u2`` at the same
    argument divided by ``wronskian_scale = -omega (1-q**2)**2``.
    """

    params: OscillatorParams
    wronskian_scale: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def _arg(self, t):
        return self.params.omega * np.asarray(t, dtype=float) + self.params.phase

    def w1(self, t):
        return u1(self._arg(t), self.params.q)

    def w2(self, t):
        return u2(self._arg(t), self.params.q) / self.wronskian_scale

    def w1_dot(self, t):
        return self.params.omega * u1_dot(self._arg(t), self.params.q)

    def w2_dot(self, t):
        return self.params.omega * u2_dot(self._arg(t), self.params.q) / self.wronskian_scale

    def w1_ddot(self, t):
        return 2.0 * x0(t, self.params) * self.w1(t)

    def w2_ddot(self, t):
        return 2.0 * x0(t, self.params) * self.w2(t)

    @property
    def root_step(self) -> float:
        """Sampling step fine enough to separate the roots of w, w' and w''."""
        return self.params.period / 256.0

    def wronskian(self, t):
        return self.w1(t) * self.w2_dot(t) - self.w1_dot(t) * self.w2(t)

    def sample(self, t) -> SampledPair:
        """Evaluate everything on the array ``t``; results are cached per grid."""
        t = np.asarray(t, dtype=float)
        key = (t.size, float(t[0]), float(t[-1])) if t.size else (0,)
        hit = self._cache.get(key)
        if hit is not None and np.array_equal(hit.t, t):
            return hit
        q = self.params.q
        arg = self._arg(t)
        sn, cn, dn, periodic, growth = _u2_parts(arg, q)
        a0, a1, a2, b0, b1 = u2_coefficients(q)
        p = sn * cn * dn
        dp = (cn * dn) ** 2 - (sn * dn) ** 2 - (q * sn * cn) ** 2
        du2 = -2.0 * p * (a1 + 2.0 * a2 * np.square(cn)) + (b0 + b1 * np.square(dn)) * p + growth * dp
        om, s = self.params.omega, self.wronskian_scale
        out = SampledPair(t=t, w1=p, w2=(periodic + growth * p) / s, dw1=om * dp, dw2=om * du2 / s)
        if len(self._cache) > 16:
            self._cache.clear()
        self._cache[key] = out
        return out


def fundamental_pair(params: OscillatorParams) -> FundamentalPair:
    """Build the unit-Wronskian pair for the given orbit."""
    scale = -params.omega * (1.0 - params.q**2) ** 2
    return FundamentalPair(params=params, wronskian_scale=scale)

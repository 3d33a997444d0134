"""Elliptic integrals, Jacobi elliptic functions and Jacobi's Epsilon.

Everything here is real-valued and parametrised by the modulus ``q`` (not the
parameter ``m = q**2``).  Complete integrals use the arithmetic-geometric mean,
the Jacobi functions use the descending Landen recursion, and the incomplete
integrals use Carlson's symmetric forms with argument reduction by the
quasi-periodicity of ``F`` and ``E``.

All functions accept scalars or numpy arrays for the position argument and are
pure, so they can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EllipticDomainError",
    "Modulus",
    "Nome",
    "complete_K",
    "complete_E",
    "incomplete_F",
    "incomplete_E",
    "jacobi_am",
    "jacobi_sn_cn_dn",
    "jacobi_epsilon",
    "nome",
    "theta3_zero",
    "theta_log_derivative",
    "epsilon_asymptotic",
]

# Moduli this close to 1 are rejected: K(q) diverges logarithmically.
Q_MAX = 1.0 - 1e-12
_AGM_TOL = 1e-16
_AGM_MAXITER = 64
_CARLSON_TOL = 1e-3  # truncation error ~ tol**6


class EllipticDomainError(ValueError):
    """Raised when a modulus or nome lies outside the supported range."""


def _check_modulus(q: float, *, allow_one: bool = False) -> float:
    q = float(q)
    if not math.isfinite(q) or q < 0.0:
        raise EllipticDomainError(f"modulus must satisfy 0 <= q < 1, got {q!r}")
    if allow_one:
        if q > 1.0:
            raise EllipticDomainError(f"modulus must satisfy 0 <= q <= 1, got {q!r}")
    elif q > Q_MAX:
        raise EllipticDomainError(f"modulus must satisfy 0 <= q < 1, got {q!r} (K diverges)")
    return q


@dataclass(frozen=True)
class Modulus:
    """Elliptic modulus together with its complement ``q'``."""

    q: float

    def __post_init__(self) -> None:
        _check_modulus(self.q)

    @property
    def q_prime(self) -> float:
        return math.sqrt((1.0 - self.q) * (1.0 + self.q))


@dataclass(frozen=True)
class Nome:
    """Nome ``p = exp(-pi K'/K)`` and the complete integrals it is built from."""

    p: float
    K: float
    K_prime: float
    E: float


def _agm_sequence(q: float) -> tuple[list[float], list[float], list[float]]:
    """Return the AGM sequences (a_n, b_n, c_n) started from (1, q', q)."""
    a, b, c = 1.0, math.sqrt((1.0 - q) * (1.0 + q)), q
    As, Bs, Cs = [a], [b], [c]
    for _ in range(_AGM_MAXITER):
        if abs(c) <= _AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        As.append(a)
        Bs.append(b)
        Cs.append(c)
    return As, Bs, Cs


def complete_K(q: float) -> float:
    """Complete elliptic integral of the first kind ``K(q) = F(pi/2, q)``."""
    q = _check_modulus(q)
    As, _, _ = _agm_sequence(q)
    return math.pi / (2.0 * As[-1])


def complete_E(q: float) -> float:
    """Complete elliptic integral of the second kind.

    ``q = 1`` is accepted and returns 1 exactly.
    """
    q = _check_modulus(q, allow_one=True)
    if q == 1.0:
        return 1.0
    As, _, Cs = _agm_sequence(q)
    s = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(Cs))
    return math.pi / (2.0 * As[-1]) * (1.0 - s)


def _carlson_rf(x, y, z):
    """Carlson's R_F(x, y, z) by duplication, vectorised over numpy arrays."""
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    x, y, z = x.copy(), y.copy(), z.copy()
    for _ in range(64):
        mu = (x + y + z) / 3.0
        dev = np.max(np.abs(np.stack([x, y, z]) - mu) / mu) if mu.size else 0.0
        if dev < _CARLSON_TOL:
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * (sy + sz) + sy * sz
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    mu = (x + y + z) / 3.0
    X, Y = 1.0 - x / mu, 1.0 - y / mu
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / np.sqrt(mu)


def _carlson_rd(x, y, z):
    """Carlson's R_D(x, y, z) by duplication, vectorised over numpy arrays."""
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    x, y, z = x.copy(), y.copy(), z.copy()
    acc = np.zeros_like(x)
    fac = 1.0
    for _ in range(64):
        mu = (x + y + 3.0 * z) / 5.0
        dev = np.max(np.abs(np.stack([x, y, z]) - mu) / mu) if mu.size else 0.0
        if dev < _CARLSON_TOL:
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * (sy + sz) + sy * sz
        acc += fac / (sz * (z + lam))
        fac *= 0.25
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    mu = (x + y + 3.0 * z) / 5.0
    X, Y = 1.0 - x / mu, 1.0 - y / mu
    Z = -(X + Y) / 3.0
    ea = X * Y
    eb = Z * Z
    ec = ea - eb
    ed = ea - 6.0 * eb
    ee = ed + ec + ec
    s = 1.0 + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 9.0 / 52.0 * Z * ee) + Z * (
        ee / 6.0 + Z * (-9.0 / 22.0 * ec + 3.0 / 26.0 * Z * ea)
    )
    return 3.0 * acc + fac * s / (mu * np.sqrt(mu))


def _reduce_angle(phi):
    """Split phi = m*pi + r with r in [-pi/2, pi/2]."""
    phi = np.asarray(phi, dtype=float)
    m = np.round(phi / math.pi)
    return m, phi - m * math.pi


def incomplete_F(gamma, q: float):
    """Incomplete elliptic integral of the first kind ``F(gamma, q)``.

    Defined for every real ``gamma`` through ``F(gamma + m*pi) = F(gamma) + 2mK``.
    """
    q = _check_modulus(q)
    m, r = _reduce_angle(gamma)
    s, c = np.sin(r), np.cos(r)
    val = s * _carlson_rf(c * c, 1.0 - q * q * s * s, 1.0)
    if np.any(m != 0):
        val = val + 2.0 * m * complete_K(q)
    return val if np.ndim(val) else float(val)


def incomplete_E(phi, q: float):
    """Incomplete elliptic integral of the second kind ``E(phi, q)``."""
    q = _check_modulus(q)
    m, r = _reduce_angle(phi)
    s, c = np.sin(r), np.cos(r)
    d2 = 1.0 - q * q * s * s
    val = s * _carlson_rf(c * c, d2, 1.0) - (q * q * s**3 / 3.0) * _carlson_rd(c * c, d2, 1.0)
    if np.any(m != 0):
        val = val + 2.0 * m * complete_E(q)
    return val if np.ndim(val) else float(val)


def jacobi_am(u, q: float):
    """Jacobi amplitude ``am(u, q)`` by the descending Landen recursion."""
    q = _check_modulus(q)
    u = np.asarray(u, dtype=float)
    if q == 0.0:
        return u.copy() if u.ndim else float(u)
    As, _, Cs = _agm_sequence(q)
    n = len(As) - 1
    phi = (2.0**n) * As[n] * u
    for k in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(Cs[k] / As[k] * np.sin(phi), -1.0, 1.0)))
    return phi if phi.ndim else float(phi)


def jacobi_sn_cn_dn(u, q: float):
    """Jacobi elliptic functions ``(sn, cn, dn)`` of a real argument.

    Args:
        u: Real argument, scalar or array.
        q: Modulus, ``0 <= q < 1``. ``q = 0`` reduces to ``(sin, cos, 1)``.

    Returns:
        Tuple of three arrays (or floats) of the same shape as ``u``.
    """
    phi = np.asarray(jacobi_am(u, q))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - q * q * sn * sn)
    if sn.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def jacobi_epsilon(x, q: float):
    """Jacobi's Epsilon function, the integral of ``dn**2`` from 0 to ``x``.

    The argument is first shifted into ``[-K, K]`` using
    ``Eps(x + 2K) = Eps(x) + 2E``; on that cell ``Eps(x) = E(am(x), q)``.
    """
    q = _check_modulus(q)
    x = np.asarray(x, dtype=float)
    K = complete_K(q)
    m = np.round(x / (2.0 * K))
    r = x - 2.0 * K * m
    val = np.asarray(incomplete_E(jacobi_am(r, q), q)) + 2.0 * m * complete_E(q)
    return val if val.ndim else float(val)


def nome(q: float) -> Nome:
    """Nome ``p = exp(-pi K(q')/K(q))`` for ``0 < q < 1``."""
    q = _check_modulus(q)
    if q == 0.0:
        raise EllipticDomainError("the nome requires 0 < q < 1")
    K = complete_K(q)
    Kp = complete_K(Modulus(q).q_prime)
    return Nome(p=math.exp(-math.pi * Kp / K), K=K, K_prime=Kp, E=complete_E(q))


def _check_nome(p: float) -> float:
    p = float(p)
    if not (0.0 <= p < 1.0):
        raise EllipticDomainError(f"nome must satisfy 0 < p < 1, got {p!r}")
    return p


def theta3_zero(p: float) -> float:
    """``theta_3(0, p) = 1 + 2 * sum p**(n**2)``."""
    p = _check_nome(p)
    total, n = 1.0, 1
    while True:
        term = 2.0 * p ** (n * n)
        total += term
        if term < 1e-17:
            return total
        n += 1


def theta_log_derivative(z, p: float, tol: float = 1e-16, max_terms: int = 100_000):
    """Logarithmic derivative of ``theta_4(z, p)`` with respect to ``z``.

    Sums ``4 * sum_n p**n / (1 - p**(2n)) * sin(2 n z)`` until the coefficient
    drops below ``tol``.
    """
    p = _check_nome(p)
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    n, pn = 1, p
    while pn > 0.0 and n <= max_terms:
        coef = 4.0 * pn / (1.0 - pn * pn)
        if coef < tol:
            break
        total = total + coef * np.sin(2.0 * n * z)
        n += 1
        pn *= p
    return total if total.ndim else float(total)


def epsilon_asymptotic(x, q: float):
    """Jacobi's Epsilon through its linear part and the theta-function correction.

    Evaluates ``E/K * x + theta_4'(xi)/(theta_3(0)**2 theta_4(xi))`` with
    ``xi = x / theta_3(0)**2``.  Numerically the identity holds for every real
    ``x`` (the correction is the Jacobi zeta function, which is periodic).
    """
    q = _check_modulus(q)
    if q == 0.0:
        raise EllipticDomainError("epsilon_asymptotic requires 0 < q < 1")
    nm = nome(q)
    t3sq = theta3_zero(nm.p) ** 2
    x = np.asarray(x, dtype=float)
    val = nm.E / nm.K * x + np.asarray(theta_log_derivative(x / t3sq, nm.p)) / t3sq
    return val if val.ndim else float(val)

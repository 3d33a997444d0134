"""Independent reference computations shared by the test-suite.

Nothing here touches the AGM/Landen/Carlson code paths under test: integrals
go through QUADPACK, Jacobi functions through scipy.special, and ODEs through
scipy's DOP853 or a plain RK4 loop.
"""

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad, simpson, solve_ivp
from scipy.special import ellipj


def quad_(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(f, a, b, epsabs=1e-14, epsrel=1e-14, limit=400, **kw)[0]


def K_quad(q):
    return quad_(lambda a: 1.0 / math.sqrt(1.0 - q * q * math.sin(a) ** 2), 0.0, math.pi / 2)


def E_quad(q):
    return quad_(lambda a: math.sqrt(1.0 - q * q * math.sin(a) ** 2), 0.0, math.pi / 2)


def F_quad(gamma, q):
    return quad_(lambda a: 1.0 / math.sqrt(1.0 - q * q * math.sin(a) ** 2), 0.0, gamma)


def epsilon_quad(x, q):
    return quad_(lambda t: ellipj(t, q * q)[2] ** 2, 0.0, x)


def am_pendulum(u, q):
    """Amplitude from d(am)/du = sqrt(1 - q^2 sin^2 am), am(0) = 0."""
    sol = solve_ivp(
        lambda _u, y: [math.sqrt(1.0 - q * q * math.sin(y[0]) ** 2)],
        [0.0, u],
        [0.0],
        method="DOP853",
        rtol=2.3e-14,
        atol=1e-15,
    )
    return float(sol.y[0, -1])


def theta4_partial(z, p, terms=60):
    return 1.0 + 2.0 * sum((-1) ** n * p ** (n * n) * np.cos(2 * n * z) for n in range(1, terms))


def theta4_log_derivative_complex_step(z, p, h=1e-20):
    return (theta4_partial(z + 1j * h, p).imag / h) / theta4_partial(z, p).real


def second_derivative(f, t, h=1e-3):
    """Fourth-order five-point second difference."""
    return (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)) / (12 * h * h)


def first_derivative(f, t, h=1e-3):
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


def simpson_on(values, dx):
    return float(simpson(values, dx=dx))

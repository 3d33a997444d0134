"""Small-noise toolkit for the cubic oscillator ``x'' = x**2 - B + sigma dB/dt``.

The deterministic orbit is written with Jacobi elliptic functions, the
linearised (Lamé) equation has a closed-form fundamental pair, and the noisy
solution is expanded in powers of ``sigma`` with coefficients built from that
pair.  Probability bounds, convergence horizons for bounded drivers, and
brute-force reference integrators round out the package.
"""

from .bounds import (
    BoundTables,
    doob_probability_bound,
    empirical_probability,
    gamma_recursion,
    truncation_probability_bound,
)
from .convergence import (
    BoundedMartingaleDriver,
    catalan,
    example_driver,
    m_functional,
    n_functional,
    solve_T_sigma,
    tail_bound,
)
from .elliptic import complete_E, complete_K, jacobi_epsilon, jacobi_sn_cn_dn
from .floquet import floquet_check
from .lame import FundamentalPair, OscillatorParams, ParameterError, fundamental_pair, mu, u1, u2, x0
from .oracle import euler_maruyama, rk4_deterministic, rk4_lame
from .stochastic import BrownianPath, TimeGrid, expand, sample_brownian, truncated_sum, x1_path, xn_path

__version__ = "0.1.0"

__all__ = [
    "BoundTables",
    "BoundedMartingaleDriver",
    "BrownianPath",
    "FundamentalPair",
    "OscillatorParams",
    "ParameterError",
    "TimeGrid",
    "catalan",
    "complete_E",
    "complete_K",
    "doob_probability_bound",
    "empirical_probability",
    "euler_maruyama",
    "example_driver",
    "expand",
    "floquet_check",
    "fundamental_pair",
    "gamma_recursion",
    "jacobi_epsilon",
    "jacobi_sn_cn_dn",
    "m_functional",
    "mu",
    "n_functional",
    "rk4_deterministic",
    "rk4_lame",
    "sample_brownian",
    "solve_T_sigma",
    "tail_bound",
    "truncated_sum",
    "truncation_probability_bound",
    "u1",
    "u2",
    "x0",
    "x1_path",
    "xn_path",
]

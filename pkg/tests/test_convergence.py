import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.special import comb

from anharmonic.convergence import (
    DivergedError,
    OutOfRadiusError,
    catalan,
    catalan_series,
    coefficient_envelope,
    coefficient_envelope_check,
    driver_coefficients,
    envelope_ratios,
    example_driver,
    m_functional,
    n_functional,
    solve_T_sigma,
    tail_bound,
    zero_driver,
)
from anharmonic.lame import OscillatorParams, fundamental_pair, x0
from anharmonic.oracle import euler_maruyama
from anharmonic.stochastic import BrownianPath, TimeGrid, sample_brownian, truncated_sum, x1_path

BASE = OscillatorParams(1.0, -1.0, 0.0)
PAIR = fundamental_pair(BASE)
DRIVER = example_driver()


def dense_norms(T, n=200_001):
    t = np.linspace(0.0, T, n)
    w1, w2, d1, d2 = PAIR.w1(t), PAIR.w2(t), PAIR.w1_dot(t), PAIR.w2_dot(t)
    return dict(
        s1=np.max(np.abs(w1)),
        s2=np.max(np.abs(w2)),
        sd1=np.max(np.abs(d1)),
        sd2=np.max(np.abs(d2)),
        l1=simpson(np.abs(w1), x=t),
        l2=simpson(np.abs(w2), x=t),
    )


@pytest.fixture(scope="module")
def t_sigma():
    return solve_T_sigma(PAIR, DRIVER, 0.01)


@pytest.fixture(scope="module")
def driven(t_sigma):
    grid = TimeGrid.from_dt(t_sigma / 2, 1e-3)
    path = sample_brownian(grid, 2024, 1000)
    return grid, path, driver_coefficients(PAIR, DRIVER, grid, path.values, 8)


class TestCatalan:
    def test_initial_values(self):
        assert [catalan(n) for n in (1, 2, 3, 4, 5)] == [1, 1, 2, 5, 14]

    @pytest.mark.parametrize("n", range(1, 21))
    def test_closed_form(self, n):
        assert catalan(n) == comb(2 * n - 2, n - 1, exact=True) // n

    def test_big_integers(self):
        assert catalan(60) == comb(118, 59, exact=True) // 60

    def test_generating_function(self):
        y = 0.2
        exact = (1 - math.sqrt(1 - 4 * y)) / 2
        # the tail decays like (4y)**n / n**1.5, so 40 terms leave about 2.5e-7
        assert abs(catalan_series(y, 40) - exact) == pytest.approx(2.545e-7, rel=1e-3)
        assert abs(catalan_series(y, 100) - exact) < 1e-10

    def test_invalid(self):
        with pytest.raises(ValueError):
            catalan(0)


class TestFunctionals:
    def test_vanish_at_zero(self):
        assert n_functional(PAIR, 0.0) == 0.0
        assert m_functional(PAIR, DRIVER, 0.0) == 0.0
        assert n_functional(PAIR, 1e-8) < 1e-6

    def test_n_against_dense_oracle(self):
        d = dense_norms(1.0)
        assert abs(n_functional(PAIR, 1.0) - (d["s2"] * d["l1"] + d["s1"] * d["l2"])) < 1e-6

    def test_m_against_dense_oracle(self):
        d = dense_norms(1.0)
        ref = math.e * (d["sd2"] * d["l1"] + d["sd1"] * d["l2"])
        assert abs(m_functional(PAIR, DRIVER, 1.0) - ref) < 1e-6

    def test_conservative_variant(self):
        d = dense_norms(2.0)
        n_ref = max(d["s2"], d["sd2"]) * d["l1"] + max(d["s1"], d["sd1"]) * d["l2"]
        assert abs(n_functional(PAIR, 2.0, "conservative") - n_ref) < 1e-6
        assert m_functional(PAIR, DRIVER, 2.0, "conservative") >= m_functional(PAIR, DRIVER, 2.0)
        with pytest.raises(ValueError):
            n_functional(PAIR, 1.0, "other")

    def test_zero_driver(self):
        assert m_functional(PAIR, zero_driver(), 3.0) == 0.0

    def test_monotone_and_continuous(self):
        T = np.linspace(0.05, 3 * BASE.period, 40)
        n = np.array([n_functional(PAIR, t) for t in T])
        m = np.array([m_functional(PAIR, DRIVER, t) for t in T])
        assert np.all(np.diff(n) >= 0) and np.all(np.diff(m) >= 0)
        for t in (0.5, 1.0, 2.0):
            assert n_functional(PAIR, 2 * t) >= n_functional(PAIR, t)
            assert abs(n_functional(PAIR, t + 1e-7) - n_functional(PAIR, t)) < 1e-5


class TestHorizon:
    def test_residual(self, t_sigma):
        y = 4 * 0.01 * m_functional(PAIR, DRIVER, t_sigma) * n_functional(PAIR, t_sigma)
        assert abs(y - 1) <= 1e-10

    def test_monotone_in_inverse_sigma(self):
        T = [solve_T_sigma(PAIR, DRIVER, s) for s in (0.04, 0.02, 0.01, 0.005)]
        assert all(a < b for a, b in zip(T[:-1], T[1:], strict=True))

    def test_refinement_stable(self, t_sigma):
        for step in (BASE.period / 512, BASE.period / 1024):
            assert abs(solve_T_sigma(PAIR, DRIVER, 0.01, step=step) - t_sigma) < 1e-8

    def test_variants_differ(self, t_sigma):
        cons = solve_T_sigma(PAIR, DRIVER, 0.01, variant="conservative")
        assert cons <= t_sigma

    def test_errors(self):
        with pytest.raises(ValueError):
            solve_T_sigma(PAIR, DRIVER, 0.0)
        with pytest.raises(DivergedError):
            solve_T_sigma(PAIR, zero_driver(), 0.1)


class TestTailBound:
    def test_zero_sigma(self):
        assert tail_bound(PAIR, DRIVER, 0.0, 1.0) == 0.0

    def test_at_horizon(self, t_sigma):
        assert tail_bound(PAIR, DRIVER, 0.01, t_sigma) == 1 / (2 * n_functional(PAIR, t_sigma))

    def test_out_of_radius(self, t_sigma):
        with pytest.raises(OutOfRadiusError):
            tail_bound(PAIR, DRIVER, 0.01, 1.5 * t_sigma)

    def test_monotone(self, t_sigma):
        T = np.linspace(0.05, t_sigma, 30)
        vals = [tail_bound(PAIR, DRIVER, 0.01, t) for t in T]
        assert np.all(np.diff(vals) >= 0)
        half = t_sigma / 2
        assert tail_bound(PAIR, DRIVER, 0.005, half) <= tail_bound(PAIR, DRIVER, 0.01, half)

    def test_ensemble_inside_bound(self, driven, t_sigma):
        grid, _, coeffs = driven
        bound = tail_bound(PAIR, DRIVER, 0.01, grid.t_end)
        dev = np.abs(truncated_sum(coeffs, 0.01, 8) - coeffs[:, 0, :]).max(axis=-1)
        assert np.all(dev <= bound)

    def test_driven_sde_inside_bound(self, driven):
        # the full equation driven by Z itself, not only the truncated series
        grid, path, _ = driven
        z = DRIVER.values(path.values[:50], grid.times)
        run = euler_maruyama(BASE, 0.01, BrownianPath(grid, path.increments[:50]), driver_increments=np.diff(z, axis=-1))
        assert not run.exploded
        bound = tail_bound(PAIR, DRIVER, 0.01, grid.t_end)
        assert np.max(np.abs(run.x - x0(grid.times, BASE))) <= bound


class TestEnvelope:
    def test_brownian_ibp_agrees_with_ito(self):
        path = sample_brownian(TimeGrid(2.0, 4000), 1)
        brownian = type(DRIVER)("brownian", lambda b, t: b, lambda t: math.inf)
        chi = driver_coefficients(PAIR, brownian, path.grid, path.values, 1)[0, 1]
        assert np.max(np.abs(chi - x1_path(PAIR, path))) < 5e-3

    def test_zero_driver(self):
        g = TimeGrid(1.0, 100)
        z = zero_driver()
        coeffs = driver_coefficients(PAIR, z, g, sample_brownian(g, 0, 3).values, 4)
        assert np.all(coeffs[:, 1:, :] == 0.0)
        assert coefficient_envelope_check(coeffs, PAIR, z, 1.0, 4)

    def test_envelope_values(self):
        M, N = m_functional(PAIR, DRIVER, 1.0), n_functional(PAIR, 1.0)
        env = coefficient_envelope(PAIR, DRIVER, 1.0, 4)
        np.testing.assert_allclose(env, [M, M**2 * N, 2 * M**3 * N**2, 5 * M**4 * N**3], rtol=1e-14)

    @pytest.mark.parametrize("n", [4, 8])
    def test_example_driver(self, driven, n):
        grid, _, coeffs = driven
        assert coefficient_envelope_check(coeffs, PAIR, DRIVER, grid.t_end, n)

    def test_negative_control(self, driven):
        grid, _, coeffs = driven
        ratios = envelope_ratios(coeffs, coefficient_envelope(PAIR, DRIVER, grid.t_end, 4))
        scale = 0.9 * ratios.max()
        assert not coefficient_envelope_check(coeffs, PAIR, DRIVER, grid.t_end, 4, envelope_scale=scale)

    def test_ratios_handle_zero_envelope(self):
        coeffs = np.zeros((1, 3, 5))
        coeffs[0, 2, 1] = 1.0
        r = envelope_ratios(coeffs, np.array([0.0, 0.0]))
        assert r[0] == 0.0 and r[1] == np.inf

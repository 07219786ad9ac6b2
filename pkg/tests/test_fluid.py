"""Fluid-limit tests: phi, the critical point and the absorbed ODE."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from rdsim.fluid import (
    FluidParams,
    capped_poisson_mean,
    find_zc,
    phi,
    phi_prime,
    pk,
    poisson_weights,
    solve_fluid,
)


def test_pk_values_and_normalization():
    # p_k(z) is the Poisson(lam*(1-z)) mass
    assert pk(0, 0.5, 2.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert pk(2, 0.0, 2.0) == pytest.approx(2.0 * math.exp(-2.0), abs=1e-15)
    for z, lam in [(0.0, 2.0), (0.3, 1.5), (0.9, 4.0)]:
        total = sum(pk(k, z, lam) for k in range(200))
        assert total == pytest.approx(1.0, abs=1e-12)
    w = poisson_weights(5, 0.2, 2.0)
    assert w == pytest.approx([pk(k, 0.2, 2.0) for k in range(6)], abs=1e-15)


def test_phi_closed_form_value():
    # phi(0.5; lam=2, c=2) = 2 - 2 p0 - p1 with mu = 1: 2 - 3/e
    assert phi(0.5, 2.0, 2) == pytest.approx(2.0 - 3.0 / math.e, abs=1e-14)


def test_phi_is_capped_poisson_mean():
    for lam in (0.5, 2.0, 4.0):
        for c in (1, 2, 5):
            for z in (0.0, 0.3, 0.77, 1.0):
                assert phi(z, lam, c) == pytest.approx(
                    capped_poisson_mean(z, lam, c), abs=1e-12
                )


def test_phi_monotone_and_endpoints():
    zs = np.linspace(0.0, 1.0, 101)
    for lam, c in [(2.0, 2), (2.0, 3), (1.2, 4)]:
        vals = [phi(z, lam, c) for z in zs]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(0.0, abs=1e-14)


def test_phi_prime_matches_finite_differences():
    h = 1e-6
    for lam, c in [(2.0, 1), (2.0, 2), (2.0, 3), (1.5, 5)]:
        for z in (0.1, 0.45, 0.8):
            fd = (phi(z + h, lam, c) - phi(z - h, lam, c)) / (2 * h)
            assert phi_prime(z, lam, c) == pytest.approx(fd, abs=1e-6)


def test_find_zc_against_scipy_root():
    # re-derived independently via brentq on the brute-force mean
    ref = optimize.brentq(
        lambda z: capped_poisson_mean(z, 2.0, 2) - 1.0, 0.0, 1.0, xtol=1e-14
    )
    assert find_zc(2.0, 2) == pytest.approx(ref, abs=1e-10)
    # frozen value
    assert find_zc(2.0, 2) == pytest.approx(0.4269033896894143, abs=1e-10)
    assert find_zc(2.0, 3) == pytest.approx(0.48728009956039386, abs=1e-10)


def test_find_zc_absent_when_subunit():
    # c = 1 keeps phi < 1 everywhere; low lam likewise
    assert find_zc(2.0, 1) is None
    assert find_zc(0.5, 3) is None


def test_zc_outside_published_bracket():
    # phi(1 - 1/lam) = E[min(Poisson(1), c)] < 1, so the root lies BELOW
    # 1 - 1/lam whenever phi(0) > 1 — the claimed bracket is inverted
    for lam, c in [(2.0, 2), (2.0, 3), (3.0, 4)]:
        lower = 1.0 - 1.0 / lam
        assert phi(lower, lam, c) < 1.0
        assert find_zc(lam, c) < lower


def test_lambda_zero_solution():
    # no contacts: a decays at unit rate, b stays 0
    sol = solve_fluid(FluidParams(0.0, 2, 0.25), 1e-3)
    assert sol.t0 == pytest.approx(0.25, abs=1e-8)
    mask = sol.t <= 0.25
    assert sol.a[mask] == pytest.approx(0.25 - sol.t[mask], abs=1e-9)
    assert np.all(sol.a[~mask] == 0.0)
    assert np.max(np.abs(sol.b)) < 1e-12


def test_quadrature_inversion_oracle():
    # s = t + a satisfies ds/dt = phi(s) before absorption, so
    # t(s) = integral_{a0}^{s} du / phi(u); invert to check a(t)
    lam, c, a0 = 2.0, 3, 0.01
    sol = solve_fluid(FluidParams(lam, c, a0), 1e-4)

    def t_of_s(s):
        val, _ = integrate.quad(
            lambda u: 1.0 / phi(u, lam, c), a0, s, epsabs=1e-12, epsrel=1e-12
        )
        return val

    for t_chk in (0.1, 0.3, 0.5, 0.7):
        s = optimize.brentq(
            lambda s: t_of_s(s) - t_chk, a0, 0.9999, xtol=1e-13
        )
        assert float(sol.a_at(t_chk)) == pytest.approx(s - t_chk, abs=1e-6)
    # absorption: s(t0) = t0
    t0_ref = optimize.brentq(lambda s: t_of_s(s) - s, a0, 0.9999, xtol=1e-13)
    assert sol.t0 == pytest.approx(t0_ref, abs=1e-6)


def test_t0_grid_convergence():
    # halving dt changes t0 by less than 1e-8 (event located by bisection)
    fp = FluidParams(2.0, 2, 0.005)
    t0_coarse = solve_fluid(fp, 2e-4).t0
    t0_fine = solve_fluid(fp, 1e-4).t0
    assert abs(t0_coarse - t0_fine) < 1e-8


def test_b_mass_balance():
    # t + a + b <= 1 along the path, and the explored fraction grows
    sol = solve_fluid(FluidParams(2.0, 2, 0.005), 1e-3)
    seen = sol.explored
    assert np.all(seen <= 1.0 + 1e-9)
    assert np.all(np.diff(seen) > -1e-12)
    assert np.all(sol.b >= -1e-12)


def test_t0_when_never_absorbed():
    # a0 = 1: everyone starts couponed, a = 1 - t stays positive until t=1
    sol = solve_fluid(FluidParams(2.0, 2, 1.0), 1e-3)
    assert sol.t0 == pytest.approx(1.0, abs=1e-6)


@given(
    lam=st.floats(0.5, 4.0),
    c=st.integers(1, 5),
    z=st.floats(0.0, 1.0),
)
@settings(max_examples=80, deadline=None)
def test_phi_bounds(lam, c, z):
    val = phi(z, lam, c)
    assert -1e-12 <= val <= min(c, lam * (1.0 - z)) + 1e-12


def test_param_validation():
    with pytest.raises(ValueError):
        FluidParams(2.0, 0, 0.1)
    with pytest.raises(ValueError):
        FluidParams(2.0, 2, 0.0)
    with pytest.raises(ValueError):
        FluidParams(2.0, 2, 0.1, b0=0.1)
    with pytest.raises(ValueError):
        solve_fluid(FluidParams(2.0, 2, 0.1), dt=0.5)

import math

import numpy as np
import pytest
import sympy as sp

from dilutebose.asymptotics import (LHY_COEFF, PHI0, PHI_PRIME0, fit_kappa, fit_power_law,
                                    g_from_values, integrand_F, integrand_G, kappa_coefficient,
                                    lhy_prediction, linear_fit, phi, phi_prime0,
                                    phi_prime0_integrand, phi_tail, q_from_integral, q_of_h,
                                    s_lambda, vanishing_locus)
from dilutebose.errors import DomainError

# mpmath, 60 digits, direct integrand up to y = 1e12 plus the two-term tail
PHI_MPMATH = {0.1: 1.6779300381349513306, 0.5: 2.2033457318247437718}


def test_phi_zero():
    r = phi(0.0)
    assert r.value == pytest.approx(math.sqrt(512) / 15, abs=1e-13)
    assert r.quadrature_error < 1e-12


@pytest.mark.parametrize("h", sorted(PHI_MPMATH))
def test_phi_golden(h):
    assert phi(h).value == pytest.approx(PHI_MPMATH[h], rel=1e-13)
    assert phi(h).value > PHI0


def test_phi_negative_h():
    with pytest.raises(DomainError):
        phi(-0.01)


def test_tail_expansion_coefficients():
    y, h, u = sp.symbols("y h u", positive=True)
    expr = sp.sqrt(y) * (sp.sqrt((y + 2 * h) * (y + 2 + 2 * h)) - (y + 1 + 2 * h) + 1 / (2 * y))
    ser = sp.expand(sp.series(expr.subs(y, 1 / u), u, 0, 3).removeO())
    s = 1 + 2 * h
    assert sp.simplify(ser.coeff(u ** sp.Rational(3, 2)) - s / 2) == 0
    assert sp.simplify(ser.coeff(u ** sp.Rational(5, 2)) + s ** 2 / 2 + sp.Rational(1, 8)) == 0
    Y = 1e4
    val = float(sp.integrate((s / 2 * y ** sp.Rational(-3, 2)
                              - (s ** 2 / 2 + sp.Rational(1, 8)) * y ** sp.Rational(-5, 2)).subs(h, 0.3),
                             (y, Y, sp.oo)))
    assert phi_tail(0.3, Y) == pytest.approx(val, rel=1e-14)


def test_phi_prime0():
    assert phi_prime0() == pytest.approx(PHI_PRIME0, rel=1e-11)
    fd = (phi(1e-5).value - phi(0.0).value) / 1e-5
    assert fd == pytest.approx(phi_prime0(), rel=1e-4)
    assert phi_prime0_integrand(1e-12) == pytest.approx(math.sqrt(2), rel=1e-5)


def test_lhy_identity():
    assert math.sqrt(32 / math.pi) * PHI0 == pytest.approx(128 / (15 * math.sqrt(math.pi)), rel=1e-15)
    assert LHY_COEFF == pytest.approx(4.81441778, abs=1e-8)


def test_q_of_h():
    a, rho, N = 0.02, 1e-5, 100.0
    assert q_of_h(0.0, a, rho, N) == pytest.approx(
        4 * math.pi * a * N * rho * LHY_COEFF * math.sqrt(a ** 3 * rho), rel=1e-13)
    assert q_of_h(0.1, a, 0.0, N) == 0.0
    for bad in ((-0.1, a, rho, N), (0.1, 0.0, rho, N), (0.1, a, -1.0, N)):
        with pytest.raises(DomainError):
            q_of_h(*bad)


def test_s_lambda():
    assert s_lambda(0.0) == pytest.approx(1.0, abs=1e-15)
    assert s_lambda(0.2) > s_lambda(0.1) > 1


def test_lhy_prediction_golden():
    assert lhy_prediction(1e-6, 1e-2) == pytest.approx(4 * math.pi * 1e-8 * (1 + 4.81441778e-6),
                                                       rel=1e-14)
    assert lhy_prediction(1e-14, 1.0) / (4 * math.pi * 1e-14) == pytest.approx(1.0, abs=1e-6)


def test_integrand_forms_agree():
    x = np.geomspace(1e-6, 1e8, 200)
    f, v = 0.3, 1.7
    g = v - f
    stable = g_from_values(x, f, v, g)
    for form in ("first", "second"):
        assert np.allclose(g_from_values(x, f, v, g, form), stable, rtol=1e-10)
    direct = g_from_values(x[:100], f, v, g, "direct")
    assert np.allclose(direct, stable[:100], rtol=1e-6)


def test_unknown_form():
    with pytest.raises(DomainError):
        g_from_values(1.0, 0.1, 0.2, 0.1, "cubic")


def test_zero_g_gives_zero_f():
    assert np.all(g_from_values(np.geomspace(1e-3, 1e3, 9), 0.4, 0.4, 0.0) == 0)


def test_F_needs_positive_x(scat_small):
    with pytest.raises(DomainError):
        integrand_F(0.0, 0.0, scat_small)


def test_F_positive(scat_01):
    x = np.geomspace(1e-6, 1e4, 100)
    for rho in (1e-8, 1e-5, 1e-3):
        assert np.all(integrand_F(x, np.sqrt(rho * x), scat_01) > 0)
        assert np.all(integrand_G(x, np.sqrt(rho * x), scat_01) > 0)


def test_vanishing_locus():
    x, ok = vanishing_locus(0.5, 1.5)
    assert x == pytest.approx(0.125)
    assert ok


def test_frozen_integral_is_q_of_h(scat_01):
    res = q_from_integral(scat_01, 1e-5, N=3.0)
    assert res.frozen == pytest.approx(res.reference, rel=1e-8)
    assert res.full == pytest.approx(res.inner + res.tail, rel=1e-14)


def test_full_minus_frozen_scaling(scat_01):
    rel = []
    rhos = (1e-8, 1e-6, 1e-4)
    for rho in rhos:
        r = q_from_integral(scat_01, rho)
        rel.append(abs(r.full - r.frozen) / r.frozen / (math.sqrt(rho) * abs(math.log(rho))))
    assert max(rel) / min(rel) < 10


def test_kappa_on_lhy_energies():
    a = 0.01
    rho = np.geomspace(1e-8, 1e-4, 5)
    k = kappa_coefficient([lhy_prediction(r, a) for r in rho], rho, a)
    assert np.allclose(k, LHY_COEFF, rtol=1e-8)


def test_fit_helpers():
    rho = np.geomspace(1e-6, 1e-4, 5)
    kap = 4.9 + 2.0 * np.sqrt(rho) + 0.3 * np.sqrt(rho) * np.log(rho)
    fit = fit_kappa(rho, kap)
    assert fit.kappa0 == pytest.approx(4.9, rel=1e-10)
    k, c = fit_power_law([1, 2, 4], [3, 3 * 2 ** 1.5, 3 * 4 ** 1.5])
    assert (k, c) == (pytest.approx(1.5), pytest.approx(3.0))
    slope, icpt, r2 = linear_fit([0, 1, 2], [1, 3, 5])
    assert (slope, icpt, r2) == (pytest.approx(2.0), pytest.approx(1.0), pytest.approx(1.0))

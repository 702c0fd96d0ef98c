import io
import math
import warnings

import numpy as np
import pytest

from conftest import gaussian
from dilutebose.errors import DomainError, NumericError
from dilutebose.lattice import enumerate_shells
from dilutebose.scattering import ScatteringSolution, born_series, compute_h, solve_radial

# zero-energy solution integrated with mpmath's Taylor-series ODE solver at 25 digits,
# a = R - u(R)/u'(R) at R = 7
A_MPMATH = {0.01: 0.0022116579439101472552, 0.1: 0.02177113041506960165}


def test_free_equation():
    sol = solve_radial(gaussian(0.0))
    assert sol.a == 0.0 and sol.h == 0.0
    assert np.all(sol.w_radial == 0) and np.all(sol.g_hat == 0)


@pytest.mark.parametrize("lam", sorted(A_MPMATH))
def test_scattering_length_golden(lam):
    assert solve_radial(gaussian(lam)).a == pytest.approx(A_MPMATH[lam], rel=1e-11)


def test_below_first_born(scat_small):
    first = 0.01 * math.sqrt(math.pi) / 8
    assert scat_small.a < first
    assert (first - scat_small.a) / first == pytest.approx(0.01 * 0.17677, rel=0.02)
    assert 8 * math.pi * scat_small.a < scat_small.V0


def test_table_identities(scat_small):
    p = scat_small.p_table
    assert np.allclose(scat_small.f_hat + scat_small.g_hat, scat_small.potential.vhat(p),
                       rtol=0, atol=1e-18)
    q = p[1:]
    assert np.allclose(scat_small.g(q), 2 * q * q * scat_small.w(q), rtol=1e-14)


def test_h_definitions_agree(scat_small):
    h = scat_small.h
    assert h > 0
    assert h == pytest.approx(scat_small.V0 / (8 * math.pi * scat_small.a) - 1, rel=1e-12)
    assert h == pytest.approx(scat_small.f0 / scat_small.g0, rel=1e-8)
    assert compute_h(scat_small) == h


def test_w_radial_bounds(scat_small):
    w = scat_small.w_radial
    assert np.all(w >= 0) and np.all(w < 1)
    assert np.all(np.diff(w) <= 1e-15)
    # outside the potential w = a / r
    r = scat_small.r_radial
    far = r > 2 * scat_small.potential.r_support
    assert np.allclose(w[far], scat_small.a / r[far], rtol=1e-9)


def test_h_linear_in_lambda():
    lams = [0.005, 0.01, 0.02]
    ratios = [solve_radial(gaussian(lam)).h / lam for lam in lams]
    assert max(ratios) / min(ratios) - 1 < 0.05
    tiny = solve_radial(gaussian(1e-4)).h / 1e-4
    assert tiny == pytest.approx(ratios[0], rel=0.01)


def test_first_born_order():
    sol = born_series(gaussian(0.01), order=1, n_table=65)
    assert sol.h == 0.0
    assert np.all(sol.f_hat == 0)
    assert 8 * math.pi * sol.a == pytest.approx(sol.V0, rel=1e-15)


def test_third_order_route(scat_small):
    born = born_series(gaussian(0.01), order=3, n_table=129)
    assert abs(born.a - scat_small.a) / scat_small.a <= 10 * 0.01 ** 3
    q = np.linspace(0, 4, 9)
    assert np.allclose(born.g(q), scat_small.g(q), rtol=1e-5)


def test_born_divergence():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with pytest.raises(NumericError):
            born_series(gaussian(40.0), order=3, n_table=65)
    assert caught


def test_lattice_born_approaches_continuum():
    spec = gaussian(0.05)
    ref = solve_radial(spec).a
    gaps = [abs(born_series(spec, lattice=enumerate_shells(L, 8.0), order=3, mode="lattice").a
                - ref) / ref for L in (6.0, 8.0)]
    assert gaps[1] < gaps[0] < 0.01


def test_table_roundtrip(scat_small):
    buf = io.StringIO()
    text = scat_small.to_table(buf)
    assert buf.getvalue() == text
    back = ScatteringSolution.from_table(text)
    assert back.a == scat_small.a and back.h == scat_small.h
    assert np.array_equal(back.g_hat, scat_small.g_hat)
    q = np.linspace(0, back.p_max, 37)
    assert np.array_equal(back.f(q), scat_small.f(q))


def test_table_range(scat_small):
    with pytest.raises(DomainError):
        scat_small.g(scat_small.p_max * 1.01)
    with pytest.raises(DomainError):
        scat_small.w(0.0)


def test_lipschitz(scat_small):
    lip = scat_small.lipschitz()
    assert lip["v_hat"] <= scat_small.potential.lipschitz_bound()
    assert lip["g_hat"] <= scat_small.potential.lipschitz_bound()
    assert lip["f_hat"] < 0.1 * lip["v_hat"]


def test_small_momentum_regime(scat_small):
    d = scat_small.delta
    assert d is not None and d > 0
    q = np.linspace(0, d, 101)
    for vals in (scat_small.vhat(q), scat_small.f(q), scat_small.g(q)):
        assert np.all(vals >= 0.5 * vals[0]) and np.all(vals <= vals[0] * (1 + 1e-12))


def test_r_max_too_small():
    spec = gaussian(0.01)
    with pytest.raises(DomainError):
        solve_radial(spec, r_max=spec.r_support)


def test_route_tolerance_enforced():
    with pytest.raises(NumericError):
        solve_radial(gaussian(0.01), tol=1e-17)

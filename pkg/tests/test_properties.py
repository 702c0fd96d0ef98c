"""Randomised invariants."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from dilutebose.asymptotics import g_from_values, phi, vanishing_locus
from dilutebose.fock_oracle import build_state, expect_moment
from dilutebose.lattice import enumerate_shells, richardson
from dilutebose.potential import PotentialSpec
from dilutebose.quadrature import det_sum
from dilutebose.variational import abc_minimize, abc_objective, minimal_value_m, minimizer_e

pos = st.floats(0.01, 10.0)
frac = st.floats(-0.49, 3.0)


@st.composite
def admissible(draw):
    a = draw(pos)
    return a, draw(frac) * a, draw(frac) * a


@given(admissible(), st.floats(-50.0, 0.4999))
@settings(max_examples=400)
def test_minimum_is_global(abc, probe):
    a, b, c = abc
    e, m = abc_minimize(a, b, c)
    assert e < 0.5
    assert abc_objective(probe, a, b, c) >= m - 1e-12 * (1 + abs(m))
    assert abs(abc_objective(e, a, b, c) - m) <= 1e-11 * (a + abs(b) + abs(c))


@given(st.floats(1e-4, 10.0), st.floats(1e-6, 1.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_minimizer_relations(p2, rho, g, f):
    e = minimizer_e(p2, rho, g, f)
    m = minimal_value_m(p2, rho, g, f)
    assert e <= 0
    ref = abc_objective(e, p2, rho * (g + f), rho * f)
    assert abs(m - ref) <= 1e-12 * (p2 + rho * (g + f))


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
@settings(max_examples=40, deadline=None)
def test_phi_increasing(h1, h2):
    lo, hi = sorted((h1, h2))
    assert phi(hi).value >= phi(lo).value - 1e-13


@given(st.floats(1e-8, 1e8), st.floats(1e-3, 5.0), st.floats(1e-3, 5.0))
def test_G_forms_agree_and_positive(x, f, g):
    v = f + g
    G = g_from_values(x, f, v, g)
    assert G > 0
    # the first line cancels for large x, the second for small x
    other = g_from_values(x, f, v, g, "first" if x <= 1 else "second")
    assert abs(other - G) <= 1e-9 * G
    xv, ok = vanishing_locus(f, v)
    assert ok and xv >= 0


@given(st.floats(0.0, 2.0), st.floats(0.3, 3.0), st.floats(0.0, 30.0))
def test_vhat_bounded(lam, sigma, p):
    spec = PotentialSpec("gaussian", lam, {"sigma": sigma})
    assert abs(float(spec.vhat(p))) <= spec.vhat0 * (1 + 1e-14) + 1e-300


@given(st.floats(2.0, 40.0), st.floats(0.5, 4.0))
@settings(max_examples=40)
def test_shells_closed_under_reflection(L, p_cut):
    if p_cut < 2 * math.pi / L:
        return
    lat = enumerate_shells(L, p_cut)
    assert np.all(lat.mult % 2 == 0)
    assert np.all(lat.p <= p_cut * (1 + 1e-12))
    assert np.all(np.diff(lat.n_sq) > 0)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(5.0, 20.0))
def test_richardson_exact(f_inf, c3, c4, L0):
    Ls = [L0, 2 * L0, 4 * L0]
    vals = [f_inf + c3 / L ** 3 + c4 / L ** 4 for L in Ls]
    best, _ = richardson(vals, Ls)
    assert abs(best - f_inf) <= 1e-12 * (1 + abs(f_inf) + abs(c3) + abs(c4))


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.randoms())
def test_reduction_order_independent(vals, rnd):
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    assert det_sum(vals) == det_sum(shuffled)


@given(st.floats(-0.3, 0.3), st.floats(0.0, 2.0))
@settings(max_examples=30, deadline=None)
def test_fock_norm_and_occupation(c, sqrtN0):
    modes = {"0": [0, 0, 0], "k": [1, 0, 0], "-k": [-1, 0, 0]}
    s = build_state(modes, {"k": c}, sqrtN0, n_max=12)
    assert abs(s.norm2 / s.analytic_norm2() - 1) < 1e-8
    assert abs(expect_moment(s, "a+(k) a(k)") - c * c / (1 - c * c)) < 1e-8
    assert abs(expect_moment(s, "a+(0) a(0)") - sqrtN0 ** 2) < 1e-8 * (1 + sqrtN0 ** 2)

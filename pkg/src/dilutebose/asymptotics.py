"""Second-order energy: Phi(h), the coefficient Q and the integrand F(x, p).

Phi(h) = int_0^inf y^(1/2) [sqrt((y+2h)(y+2+2h)) - (y+1+2h) + 1/(2y)] dy

is the universal integral multiplying (a^3 rho)^(1/2); Phi(0) = sqrt(512)/15
gives the Lee-Huang-Yang constant 128/(15 sqrt(pi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NumericError
from .quadrature import det_sum, gauss_panels

PHI0 = math.sqrt(512.0) / 15.0
LHY_COEFF = 128.0 / (15.0 * math.sqrt(math.pi))
PHI_PRIME0 = 4.0 * math.sqrt(2.0) / 3.0

_T_PANELS = ((0.0, 1.0), (1.0, 10.0), (10.0, 100.0), (100.0, 1000.0))
_Y_SPLIT = 1e6


@dataclass(frozen=True)
class PhiResult:
    h: float
    value: float
    quadrature_error: float
    split_point: float


def _bracket(y, h):
    # sqrt((y+2h)(y+2+2h)) - (y+1+2h) + 1/2y, rationalised: no cancellation for large y
    s = 1 + 2 * h
    X = y + s
    R = np.sqrt(X * X - 1)
    num = s + (s * (2 * y + s) - 1) / (R + y)
    return num / (2 * y * (X + R))


def phi_tail(h: float, Y: float) -> float:
    """int_Y^inf of the Phi integrand from its large-y expansion.

    The integrand is (s/2) y^(-3/2) - (s^2/2 + 1/8) y^(-5/2) + O(y^(-7/2))
    with s = 1 + 2h.
    """
    s = 1 + 2 * h
    return s * Y ** -0.5 - (s * s / 2 + 0.125) * (2.0 / 3.0) * Y ** -1.5


def phi(h: float, tol: float = 1e-13) -> PhiResult:
    """Phi(h) for h >= 0.

    Adaptive quadrature in t = sqrt(y) on [0, 1e3] (y up to 1e6), plus the
    two-term analytic tail. ``quadrature_error`` adds the quadrature error
    estimates and the size of the first omitted tail term.
    """
    if not h >= 0:
        raise DomainError(f"Phi(h) needs h >= 0, got {h}")

    def f(t):
        return 2 * t * t * _bracket(t * t, h)

    parts, errs = [], []
    for a, b in _T_PANELS:
        v, e = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
        parts.append(v)
        errs.append(e)
    Y = _Y_SPLIT
    parts.append(phi_tail(h, Y))
    s = 1 + 2 * h
    errs.append(abs(s ** 3) * Y ** -2.5)
    return PhiResult(h=float(h), value=math.fsum(parts), quadrature_error=math.fsum(errs),
                     split_point=Y)


def phi_prime0_integrand(y):
    """d/dh of the Phi integrand at h = 0: 2 y^(1/2) / ((y+1+sqrt(y(y+2))) sqrt(y(y+2)))."""
    y = np.asarray(y, dtype=float)
    r = np.sqrt(y * (y + 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 2 * np.sqrt(y) / ((y + 1 + r) * r)
    return np.where(y == 0, math.sqrt(2.0), out)


def phi_prime0(tol: float = 1e-13) -> float:
    """Phi'(0) by quadrature of the differentiated integrand (exactly 4 sqrt(2)/3)."""
    # y = t^2 removes the y^(-1/2) behaviour of sqrt(y(y+2)) at 0
    def f(t):
        return 2 * t * phi_prime0_integrand(t * t)

    total = 0.0
    for a, b in _T_PANELS:
        total += quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)[0]
    # integrand ~ y^(-3/2) - 2 y^(-5/2)
    Y = _Y_SPLIT
    return total + 2 * Y ** -0.5 - (4.0 / 3.0) * Y ** -1.5


def s_lambda(h: float) -> float:
    """Excess factor Phi(h)/Phi(0) >= 1."""
    return phi(h).value / PHI0


def q_of_h(h: float, a: float, rho: float, N: float) -> float:
    """Q(h) = 4 pi a N rho sqrt(32/pi) Phi(h) (a^3 rho)^(1/2)."""
    if h < 0:
        raise DomainError("h must be nonnegative")
    if a <= 0 or N <= 0:
        raise DomainError("a and N must be positive")
    if rho < 0:
        raise DomainError("rho must be nonnegative")
    if rho == 0:
        return 0.0
    return 4 * math.pi * a * N * rho * math.sqrt(32 / math.pi) * phi(h).value * math.sqrt(a ** 3 * rho)


def lhy_prediction(rho: float, a: float) -> float:
    """Energy per particle 4 pi rho a [1 + 128/(15 sqrt(pi)) (rho a^3)^(1/2)]."""
    if rho < 0 or a < 0:
        raise DomainError("rho and a must be nonnegative")
    return 4 * math.pi * rho * a * (1 + LHY_COEFF * math.sqrt(rho * a ** 3))


def phi_table(hs) -> list:
    """Rows (h, Phi(h), S) for a grid of h."""
    rows = []
    for h in hs:
        v = phi(float(h)).value
        rows.append((float(h), v, v / PHI0))
    return rows


# --------------------------------------------------------------------------
# the integrand F(x, p), x = p^2 / rho
# --------------------------------------------------------------------------

def _fvg(p_norm, scat):
    p = np.asarray(p_norm, dtype=float)
    g = scat.g(p)
    v = scat.vhat(p)
    return v - g, v, g


def g_from_values(x, f, v, g, form: str = "stable"):
    """G = x^(1/2) F for given x and f_hat, V_hat, g_hat values.

    Forms: ``direct`` (definition of F times sqrt(x); cancels badly for
    large x), ``first`` and ``second`` (the two rationalised lines), and
    ``stable``, which writes S - x = (2x(f+V) + 4fV)/(S + x) and is free of
    both the large-x cancellation and the sign change of the second line's
    extra denominator at small x.
    """
    x, f, v, g = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (x, f, v, g)))
    S = np.sqrt((x + 2 * f) * (x + 2 * v))
    den = S + x + f + v
    if form == "direct":
        return (S - (x + f + v) + g * g / (2 * x)) * x
    if form == "first":
        return g * g * (S + f + v - x) / (2 * den)
    if form == "second":
        return g * g * (4 * (f + v) * x - g * g) / (2 * den * (S + x - f - v))
    if form == "stable":
        num = (2 * x * (f + v) + 4 * f * v) / (S + x) + f + v
        return g * g * num / (2 * den)
    raise DomainError(f"unknown form {form!r}")


def integrand_G(x, p_norm, scat, form: str = "stable"):
    f, v, g = _fvg(p_norm, scat)
    return g_from_values(x, f, v, g, form)


def integrand_F(x, p_norm, scat, form: str = "stable"):
    """F(x, p) = x^(-1/2) G(x, p) with f_hat, V_hat, g_hat taken at |p|."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("F(x, p) needs x > 0")
    return integrand_G(x, p_norm, scat, form) / np.sqrt(x)


def vanishing_locus(f, v):
    """Root x = (f - V)^2 / (4 (f + V)) of the rationalised numerator, with the check x < f + V."""
    f, v = np.asarray(f, dtype=float), np.asarray(v, dtype=float)
    x = (f - v) ** 2 / (4 * (f + v))
    return x, x < f + v


@dataclass(frozen=True)
class QIntegral:
    """Q from the x-integral of F, full and with p frozen at 0."""

    full: float
    frozen: float
    reference: float
    inner: float
    tail: float
    c_split: float
    prefactor: float


def split_constant(scat) -> float:
    """c = min(delta^2, min_{|p| <= delta} (f_hat + V_hat) / 4)."""
    delta = scat.delta if scat.delta else 0.1
    q = np.linspace(0.0, delta, 65)
    return float(min(delta ** 2, 0.25 * np.min(scat.f(q) + scat.vhat(q))))


def q_from_integral(scat, rho: float, N: float = 1.0, c_split: float | None = None,
                    n: int = 24) -> QIntegral:
    """Q = (pi N rho^(3/2) / (2 pi)^3) int_0^inf F dx.

    ``full`` uses F(x, sqrt(rho x)); ``frozen`` uses F(x, 0), which is the
    Phi integral after y = x / g_hat_0 and must equal ``reference`` =
    q_of_h. ``inner`` and ``tail`` split the full integral at x = c/rho.
    """
    if rho <= 0 or N <= 0:
        raise DomainError("rho and N must be positive")
    pref = math.pi * N * rho ** 1.5 / (2 * math.pi) ** 3
    c = split_constant(scat) if c_split is None else float(c_split)
    k0 = math.sqrt(rho * scat.g0)
    p_max = scat.p_max
    # the integrand in p: dx = 2 p dp / rho
    p_c = math.sqrt(c)
    lo = 1e-6 * k0
    edges = np.unique(np.concatenate([[0.0], np.geomspace(lo, min(1.0, p_max), 60),
                                      np.linspace(min(1.0, p_max), p_max, 30), [p_c]]))
    edges = edges[edges <= p_max]
    pn, pw = gauss_panels(edges, n)
    x = pn * pn / rho
    Fv = integrand_F(x, pn, scat)
    dx = 2 * pn * pw / rho
    inner_mask = pn <= p_c
    inner = det_sum((Fv * dx)[inner_mask])
    tail = det_sum((Fv * dx)[~inner_mask])

    f0, v0, g0 = scat.f0, scat.V0, scat.g0

    def frozen_t(t):
        # F dx = 2 G dt with x = t^2
        return 2 * float(g_from_values(t * t, f0, v0, g0))

    frozen, T = 0.0, 1e6
    t_edges = [0.0] + list(np.geomspace(1e-4, T, 41))
    for a, b in zip(t_edges[:-1], t_edges[1:]):
        val, err = quad(frozen_t, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        frozen += val
    # F(x, 0) ~ g^2 (f + V) / 2 x^(3/2)
    frozen += g0 * g0 * (f0 + v0) / T
    ref = q_of_h(scat.h, scat.a, rho, N)
    if not np.isfinite(inner + tail + frozen):
        raise NumericError("non-finite Q integral")
    return QIntegral(full=pref * (inner + tail), frozen=pref * frozen, reference=ref,
                     inner=pref * inner, tail=pref * tail, c_split=c, prefactor=pref)


# --------------------------------------------------------------------------
# sweeps and fits
# --------------------------------------------------------------------------

def kappa_coefficient(energy_per_particle, rho, a):
    """(E/N - 4 pi rho a) / (4 pi rho a (rho a^3)^(1/2))."""
    rho = np.asarray(rho, dtype=float)
    lead = 4 * math.pi * rho * a
    return (np.asarray(energy_per_particle, dtype=float) - lead) / (lead * np.sqrt(rho * a ** 3))


@dataclass(frozen=True)
class KappaFit:
    kappa0: float
    coeffs: tuple
    residual: float


def fit_kappa(rhos, kappas) -> KappaFit:
    """Least squares kappa(rho) = k0 + k1 sqrt(rho) + k2 sqrt(rho) log(rho).

    The corrections follow from an O(rho^2 |log rho|) energy remainder.
    Falls back to k0 + k1 sqrt(rho) for fewer than four points.
    """
    r = np.asarray(rhos, dtype=float)
    k = np.asarray(kappas, dtype=float)
    cols = [np.ones_like(r), np.sqrt(r)]
    if r.size >= 4:
        cols.append(np.sqrt(r) * np.log(r))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, k, rcond=None)
    res = float(np.max(np.abs(A @ coef - k))) if r.size > len(cols) else 0.0
    return KappaFit(kappa0=float(coef[0]), coeffs=tuple(float(c) for c in coef[1:]), residual=res)


def fit_power_law(xs, ys):
    """Exponent and prefactor of y = C x^k by least squares in log-log."""
    k, logc = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(k), float(math.exp(logc))


def linear_fit(xs, ys):
    """Slope, intercept and R^2 of an ordinary least-squares line."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid ** 2) / tot) if tot > 0 else 1.0
    return float(slope), float(icpt), r2

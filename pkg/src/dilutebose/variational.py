"""Squeezed trial state: optimal pair amplitudes and the exact energy.

The state exp(sum_k c_k a+_k a+_-k / 2 + sqrt(N0) a+_0)|0> is parametrised
by e_p = c_p / (1 + c_p). With

    s_p = c^2 / (1 - c^2) = e^2 / (1 - 2e)      (occupation of mode p)
    t_p = c / (1 - c^2)   = e (1 - e) / (1 - 2e) (pair amplitude <a_p a_-p>)

every energy term is a single or double sum of s and t over nonzero
momenta. Those sums are delegated to a *measure*: explicit modes, lattice
shells, or the infinite-volume integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .lattice import LatticeSpec
from .quadrature import angular_average, det_sum, gauss_panels

ANGULAR_MAX_NODES = 2000


# --------------------------------------------------------------------------
# the one-momentum minimisation problem
# --------------------------------------------------------------------------

def abc_objective(e, a, b, c):
    """a e^2/(1-2e) + b e/(1-2e) - c e."""
    e = np.asarray(e, dtype=float)
    return (a * e * e + b * e) / (1 - 2 * e) - c * e


def abc_minimize(a, b, c):
    """Minimise :func:`abc_objective` over e < 1/2.

    Parameters
    ----------
    a, b, c : float or array_like
        Coefficients with a + 2c > 0 and a + 2b > 0.

    Returns
    -------
    e, m : float or ndarray
        Minimiser and minimum. Evaluated in rationalised form, so both are
        accurate to a few ulps even when b is close to c.
    """
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    X, Y = a + 2 * b, a + 2 * c
    if np.any(~(Y > 0)):
        raise DomainError("abc_minimize requires a + 2c > 0")
    if np.any(~(X > 0)):
        raise DomainError("abc_minimize requires a + 2b > 0")
    rx, ry = np.sqrt(X), np.sqrt(Y)
    e = -(b - c) / (ry * (rx + ry))
    m = -((b - c) / (rx + ry)) ** 2
    if e.ndim == 0:
        return float(e), float(m)
    return e, m


def _radicands(p2, rho, g_p, f_p):
    p2, g_p, f_p = (np.asarray(v, dtype=float) for v in (p2, g_p, f_p))
    Y = p2 + 2 * rho * f_p
    X = Y + 2 * rho * g_p
    if np.any(~(Y > 0)) or np.any(~(X > 0)):
        raise DomainError("p^2 + 2 rho f_hat and p^2 + 2 rho V_hat must stay positive; "
                          "density too large for this potential")
    return X, Y


def minimizer_e(p2, rho, g_p, f_p):
    """Optimal e_p = (1 - sqrt(1 + 2 rho g/(p^2 + 2 rho f))) / 2."""
    X, Y = _radicands(p2, rho, g_p, f_p)
    rx, ry = np.sqrt(X), np.sqrt(Y)
    e = -rho * np.asarray(g_p, dtype=float) / (ry * (rx + ry))
    return float(e) if e.ndim == 0 else e


def minimal_value_m(p2, rho, g_p, f_p):
    """Minimum m_p = [sqrt((p^2 + 2 rho V)(p^2 + 2 rho f)) - (p^2 + rho (V + f))] / 2."""
    X, Y = _radicands(p2, rho, g_p, f_p)
    m = -(rho * np.asarray(g_p, dtype=float) / (np.sqrt(X) + np.sqrt(Y))) ** 2
    return float(m) if m.ndim == 0 else m


def q_summand(p2, rho, g_p, f_p):
    """m_p + rho^2 g^2 / 4p^2 without the cancellation of the naive sum.

    In x = p^2/rho this is (rho/2) g^2 num / (2 x den) with
    S = sqrt((x+2f)(x+2V)), num = (2x(f+V) + 4fV)/(S+x) + f + V and
    den = S + x + f + V.
    """
    p2, g, f = (np.asarray(v, dtype=float) for v in (p2, g_p, f_p))
    x = p2 / rho
    v = f + g
    S = np.sqrt((x + 2 * f) * (x + 2 * v))
    num = (2 * x * (f + v) + 4 * f * v) / (S + x) + f + v
    return rho * g * g * num / (4 * x * (S + x + f + v))


# --------------------------------------------------------------------------
# momentum measures
# --------------------------------------------------------------------------

def _position_rule(potential, p_max):
    R = potential.r_support
    panel = min(0.25 * potential.sigma, math.pi / (4 * max(p_max, 1e-12)))
    return gauss_panels(np.linspace(0.0, R, int(math.ceil(R / panel)) + 1), 20)


class _Measure:
    """Weights w_i at radii p_i with <f> = sum_i w_i f(p_i) ~ (1/|Lambda|) sum_{p != 0} f(p).

    ``iv`` is 1/|Lambda| (zero for the infinite-volume integral) and
    ``volume`` the box volume (1 as reference volume in the continuum).
    """

    p: np.ndarray
    w: np.ndarray
    iv: float
    volume: float
    kind: str

    def mean(self, values) -> float:
        return det_sum(self.w * values)

    def double(self, phi, psi, vhat, potential=None) -> float:
        """(1/|Lambda|^2) sum_{p, r != 0} V_hat(p - r) phi_p psi_r, including r = +-p."""
        raise NotImplementedError

    def _double_radial(self, phi, psi, potential):
        # <V_hat>(p, r) = 4 pi int x^2 V(x) sinc(px) sinc(rx) dx
        xn, xw = self._xrule(potential)
        a = np.zeros(xn.size)
        b = np.zeros(xn.size)
        for i0 in range(0, self.p.size, 4096):
            S = np.sinc(np.outer(self.p[i0:i0 + 4096], xn) / math.pi)
            a += (self.w[i0:i0 + 4096] * phi[i0:i0 + 4096]) @ S
            b += (self.w[i0:i0 + 4096] * psi[i0:i0 + 4096]) @ S
        return 4 * math.pi * det_sum(xw * xn * xn * potential(xn) * a * b)

    def _xrule(self, potential):
        key = id(potential)
        if getattr(self, "_xcache", (None,))[0] != key:
            self._xcache = (key, _position_rule(potential, float(self.p.max())))
        return self._xcache[1]


class ModeSum(_Measure):
    """Explicit momentum vectors in a box of side L; double sums are exact."""

    kind = "modes"

    def __init__(self, vectors, L: float):
        self.vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        if np.any(np.all(self.vectors == 0, axis=1)):
            raise DomainError("the zero mode is the condensate, not an excitation")
        self.L = float(L)
        self.volume = self.L ** 3
        self.iv = 1.0 / self.volume
        self.p = np.linalg.norm(self.vectors, axis=1)
        self.w = np.full(self.p.size, self.iv)

    def double(self, phi, psi, vhat, potential=None):
        d = np.linalg.norm(self.vectors[:, None, :] - self.vectors[None, :, :], axis=2)
        return det_sum(np.outer(self.w * phi, self.w * psi) * vhat(d))


class ShellSum(_Measure):
    """Lattice sum aggregated over shells.

    Double sums use the angular average of V_hat between shells, by
    Legendre quadrature for few shells and by the equivalent position-space
    integral otherwise.
    """

    kind = "shells"

    def __init__(self, lattice: LatticeSpec, double_sum: str = "auto", n_angle: int = 32):
        self.lattice = lattice
        self.volume = lattice.volume
        self.iv = 1.0 / self.volume
        self.p = lattice.p
        self.w = lattice.mult / self.volume
        if double_sum == "auto":
            double_sum = "angular" if self.p.size <= ANGULAR_MAX_NODES else "radial"
        if double_sum not in ("angular", "radial"):
            raise DomainError(f"unknown double-sum method {double_sum!r}")
        self.double_sum = double_sum
        self.n_angle = n_angle

    def double(self, phi, psi, vhat, potential=None):
        if self.double_sum == "radial":
            return self._double_radial(phi, psi, potential)
        K = angular_average(vhat, self.p, self.p, self.n_angle)
        return det_sum(np.outer(self.w * phi, self.w * psi) * K)


class ContinuumSum(_Measure):
    """Infinite-volume limit: <f> = int d^3p/(2 pi)^3 f(|p|), per unit volume."""

    kind = "continuum"

    def __init__(self, edges, n: int = 24):
        nodes, weights = gauss_panels(edges, n)
        self.p = nodes
        self.w = weights * nodes * nodes / (2 * math.pi ** 2)
        self.iv = 0.0
        self.volume = 1.0
        self.p_max = float(edges[-1])

    @classmethod
    def for_density(cls, rho: float, k_scale: float, p_max: float, n: int = 24,
                    per_decade: int = 6, linear_width: float = 0.5):
        """Panels geometric from 1e-6 k0 up to 1, then linear up to p_max.

        ``k_scale`` should be the healing momentum sqrt(rho g_hat_0), where
        the summands change character.
        """
        lo = 1e-6 * k_scale
        top = min(1.0, p_max)
        n_geo = max(int(math.ceil(per_decade * math.log10(top / lo))), 1)
        edges = [0.0, *np.geomspace(lo, top, n_geo + 1)]
        if p_max > top:
            n_lin = int(math.ceil((p_max - top) / linear_width))
            edges.extend(np.linspace(top, p_max, n_lin + 1)[1:])
        return cls(np.array(edges), n)

    def double(self, phi, psi, vhat, potential=None):
        return self._double_radial(phi, psi, potential)


# --------------------------------------------------------------------------
# state
# --------------------------------------------------------------------------

@dataclass(eq=False)
class VariationalState:
    """Pair amplitudes on the nodes of a measure, density and particle numbers.

    ``N`` and ``N0`` refer to the box (reference volume 1 in the continuum);
    ``N0`` is always derived from ``N = N0 + sum_p s_p``.
    """

    rho: float
    measure: _Measure
    e: np.ndarray
    N: float
    N0: float
    g: np.ndarray | None = None
    f: np.ndarray | None = None

    @property
    def p(self):
        return self.measure.p

    @property
    def lattice(self):
        return getattr(self.measure, "lattice", None)

    @property
    def c(self):
        return self.e / (1 - self.e)

    @property
    def s(self):
        return self.e * self.e / (1 - 2 * self.e)

    @property
    def t(self):
        return self.e * (1 - self.e) / (1 - 2 * self.e)

    @property
    def n_ex(self) -> float:
        """Excited-particle density."""
        return self.measure.mean(self.s)

    @property
    def depletion(self) -> float:
        return (self.N - self.N0) / self.N


def measure_for(lattice=None, measure=None, rho=None, scat=None, p_max=None) -> _Measure:
    if measure is not None:
        return measure
    if lattice is not None:
        return ShellSum(lattice)
    p_max = min(scat.p_max, 8.0 * max(1.0 / scat.potential.sigma, 1.0)) if p_max is None else p_max
    return ContinuumSum.for_density(rho, math.sqrt(rho * max(scat.g0, 1e-300)), p_max)


def build_state(scat, rho: float, lattice: LatticeSpec | None = None,
                measure: _Measure | None = None, p_max: float | None = None) -> VariationalState:
    """Optimal e_p on every node and the derived condensate number.

    With neither ``lattice`` nor ``measure`` the infinite-volume integral is
    used, with a grid adapted to the healing momentum sqrt(rho g_hat_0).
    """
    if rho < 0:
        raise DomainError("density must be nonnegative")
    if rho > 0 and scat.potential.lam > 0:
        mu = measure_for(lattice, measure, rho, scat, p_max)
    else:
        mu = measure_for(lattice, measure, max(rho, 1e-12), scat, p_max) if (lattice or measure) \
            else ContinuumSum(np.array([0.0, 1.0]), 4)
    g, f = scat.g(mu.p), scat.f(mu.p)
    e = minimizer_e(mu.p ** 2, rho, g, f) if rho > 0 else np.zeros(mu.p.size)
    N = rho * mu.volume
    state = VariationalState(rho=rho, measure=mu, e=np.asarray(e, dtype=float),
                             N=N, N0=N, g=g, f=f)
    state.N0 = N - mu.volume * state.n_ex
    if rho > 0 and not state.N0 > 0:
        raise DomainError(f"condensate number N0 = {state.N0:.4g} <= 0: outside the dilute regime")
    return state


def state_from_c(measure: _Measure, c, N0: float) -> VariationalState:
    """State with prescribed real pair amplitudes |c| < 1 and condensate number."""
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) >= 1):
        raise DomainError("pair amplitudes need |c| < 1")
    if N0 <= 0:
        raise DomainError("N0 must be positive")
    e = c / (1 + c)
    st = VariationalState(rho=0.0, measure=measure, e=e, N=0.0, N0=float(N0))
    st.N = N0 + measure.volume * st.n_ex
    st.rho = st.N / measure.volume
    return st


# --------------------------------------------------------------------------
# energies
# --------------------------------------------------------------------------

@dataclass
class EnergyBreakdown:
    """E = E_M + Omega2 + Omega4 for one state, with its named sub-sums.

    ``channel_terms`` splits E_M, Omega2 and Omega4 into their summands;
    ``cases`` regroups the same energy by the number of condensate
    operators in each interaction term (kinetic, E0, E2, E4).
    """

    E_M: float
    Omega2: float
    Omega4: float
    E_total: float
    per_particle: float
    N: float
    N0: float
    rho: float
    volume: float
    channel_terms: dict = field(default_factory=dict)
    cases: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"rho": self.rho, "N": self.N, "N0": self.N0, "volume": self.volume,
               "E_M": self.E_M, "Omega2": self.Omega2, "Omega4": self.Omega4,
               "E_total": self.E_total, "per_particle": self.per_particle}
        rec.update(self.channel_terms)
        return rec


def _vhat_source(scat):
    pot = getattr(scat, "potential", scat)
    return pot, pot.vhat


def energy_full(state: VariationalState, scat) -> EnergyBreakdown:
    """Exact expectation of H in the trial state, summed over the state's measure.

    ``scat`` may be a ScatteringSolution or a bare PotentialSpec; only V_hat
    enters. Double sums over r != 0, +-p are the unrestricted double sum
    minus the r = p and r = -p terms.
    """
    pot, vhat = _vhat_source(scat)
    mu = state.measure
    if hasattr(scat, "p_max") and mu.kind != "modes" and mu.p.max() > scat.p_max * (1 + 1e-12):
        raise DomainError("state momenta exceed the scattering table")
    p, s, t, c = mu.p, state.s, state.t, state.c
    vol, iv = mu.volume, mu.iv
    V0 = pot.vhat0
    v = vhat(p)
    v2 = vhat(2 * p)
    rho = state.N / vol
    n_ex = mu.mean(s)

    def restricted(phi, psi):
        d = mu.double(phi, psi, vhat, pot)
        if iv:
            d -= iv * mu.mean((V0 + v2) * phi * psi)
        return d

    d_tt = restricted(t, t)
    d_ss = restricted(s, s)
    ch = {
        "kinetic": vol * mu.mean(p * p * s),
        "hartree": 0.5 * V0 * state.N ** 2 / vol,
        "direct": vol * rho * mu.mean(v * s),
        "pairing": vol * rho * mu.mean(v * t),
        "cross": 0.5 * vol * d_tt,
        "exchange": -vol * n_ex * mu.mean(v * t),
        "omega2_exchange": -vol * n_ex * mu.mean((v + V0) * s),
        "omega2_condensate": 0.5 * vol * V0 * n_ex ** 2,
        "omega4_double": 0.5 * vol * (V0 * (n_ex ** 2 - 2 * iv * mu.mean(s * s)) + d_ss),
        "omega4_diag": 0.5 * iv * vol * mu.mean(
            (V0 * c * c * (1 + 3 * c * c) + v2 * c * c * (1 + c * c)) / (1 - c * c) ** 2),
    }
    E_M = math.fsum(ch[k] for k in ("kinetic", "hartree", "direct", "pairing", "cross", "exchange"))
    O2 = ch["omega2_exchange"] + ch["omega2_condensate"]
    O4 = ch["omega4_double"] + ch["omega4_diag"]
    total = math.fsum((E_M, O2, O4))
    n0 = state.N0 / vol
    cases = {
        "kinetic": ch["kinetic"],
        "E0": 0.5 * V0 * state.N0 ** 2 / vol,
        "E2": vol * n0 * mu.mean(v * t + (v + V0) * s),
        "E4": ch["cross"] + O4,
    }
    return EnergyBreakdown(E_M=E_M, Omega2=O2, Omega4=O4, E_total=total,
                           per_particle=total / state.N if state.N else float("nan"),
                           N=state.N, N0=state.N0, rho=rho, volume=vol,
                           channel_terms=ch, cases=cases)


@dataclass
class ReducedEnergy:
    """Pieces of 4 pi a N rho + sum_p [objective_p + rho^2 g^2/4p^2] + cross."""

    leading: float
    bracket: float
    bracket_m: float
    cross: float
    total: float


def energy_reduced(state: VariationalState, scat) -> ReducedEnergy:
    """Energy rewritten around the scattering solution.

    ``bracket`` sums the one-momentum objective plus rho^2 g^2/4p^2 term by
    term; ``bracket_m`` uses the closed-form minimum instead (stable form).
    They agree whenever e_p is the minimiser. ``cross`` is half the
    quadratic form of V_hat on e + rho w_hat.
    """
    mu = state.measure
    p = mu.p
    p2 = p * p
    rho = state.rho
    vol = mu.volume
    g, f = scat.g(p), scat.f(p)
    v = f + g
    e = state.e
    leading = 4 * math.pi * scat.a * state.N * rho
    bracket = vol * mu.mean(abc_objective(e, p2, rho * v, rho * f) + rho * rho * g * g / (4 * p2))
    bracket_m = vol * mu.mean(q_summand(p2, rho, g, f)) if rho > 0 else 0.0
    y = e + rho * g / (2 * p2)
    cross = 0.5 * vol * mu.double(y, y, scat.potential.vhat, scat.potential)
    return ReducedEnergy(leading=leading, bracket=bracket, bracket_m=bracket_m, cross=cross,
                         total=leading + bracket_m + cross)


def error_term_diagnostics(state: VariationalState, scat) -> dict:
    """Size ratios of the subleading energy terms.

    Extensive terms are divided by N rho^2, non-extensive ones and the
    e-moments by rho^(3/2) (per volume) or N rho^(1/2).
    """
    mu = state.measure
    rho = state.rho
    br = energy_full(state, scat)
    e = state.e
    if rho <= 0 or not np.any(e):
        keys = ("omega2", "omega4_extensive", "omega4_diag", "e2_moment", "depletion_sum")
        return {k: 0.0 for k in keys}
    Nr2 = state.N * rho ** 2
    return {
        "omega2": br.Omega2 / Nr2,
        "omega4_extensive": br.channel_terms["omega4_double"] / Nr2,
        "omega4_diag": br.channel_terms["omega4_diag"] / rho ** 1.5,
        "e2_moment": mu.mean(e * e / (1 - 2 * e)) / rho ** 1.5,
        "depletion_sum": mu.volume * state.n_ex / (state.N * math.sqrt(rho)),
    }

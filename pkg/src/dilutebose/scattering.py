"""Zero-energy scattering: -Lap(1 - w) + V (1 - w) / 2 = 0 with w -> 0 at infinity.

Two independent routes produce the scattering length ``a`` and momentum
tables of w_hat, f_hat = (V w)^, g_hat = (V (1 - w))^:

* :func:`solve_radial` integrates the radial ODE for u = r (1 - w) in
  position space and Fourier transforms g = V u / (kappa r).
* :func:`born_series` iterates g_hat = V_hat - V_hat * (g_hat / 2 p^2) in
  momentum space (the Born series), either as continuum integrals or as
  literal sums over a small lattice.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericError, VerificationError
from .lattice import LatticeSpec
from .potential import PotentialSpec
from .quadrature import angular_average, det_sum, gauss_panels

DELTA_CANDIDATES = (0.5, 0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.0025, 0.001)
TABLE_COLUMNS = ("p", "w_hat", "f_hat", "g_hat", "v_hat")


def default_p_cut(spec: PotentialSpec) -> float:
    """Momentum cutoff 8 max(1/sigma, 1).

    For a Gaussian V_hat there is e^-16 V_hat_0 ~ 1e-7 V_hat_0; energies
    truncated at it move by ~1e-14 relative.
    """
    return 8.0 * max(1.0 / spec.sigma, 1.0)


@dataclass(eq=False)
class ScatteringSolution:
    """Scattering length, h and interpolated momentum tables.

    ``f`` is always evaluated as ``V_hat - g`` so f_hat + g_hat = V_hat holds
    exactly; ``w`` is ``g / (2 p^2)``. Tables are cubic splines in |p|;
    evaluation beyond the last tabulated momentum raises.
    """

    potential: PotentialSpec
    a: float
    p_table: np.ndarray
    g_table: np.ndarray
    method: str
    h: float = float("nan")
    r_radial: np.ndarray | None = None
    w_radial: np.ndarray | None = None
    a_asymptote: float | None = None
    tolerances: dict = field(default_factory=dict)
    born_terms: tuple = ()
    delta: float | None = None

    def __post_init__(self):
        self.p_table = np.asarray(self.p_table, dtype=float)
        self.g_table = np.asarray(self.g_table, dtype=float)
        if self.p_table[0] != 0.0:
            raise ValueError("momentum table must start at p = 0")
        self._spline = CubicSpline(self.p_table, self.g_table, bc_type=((1, 0.0), "not-a-knot"))
        self.p_max = float(self.p_table[-1])

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p < 0) or np.any(p > self.p_max * (1 + 1e-12)):
            raise DomainError(f"|p| outside the scattering table [0, {self.p_max:g}]; "
                              "extend p_max instead of extrapolating")
        return p

    def g(self, p):
        return self._spline(self._check(p))

    def vhat(self, p):
        return self.potential.vhat(self._check(p))

    def f(self, p):
        p = self._check(p)
        return self.potential.vhat(p) - self._spline(p)

    def w(self, p):
        p = self._check(p)
        if np.any(p == 0):
            raise DomainError("w_hat is singular at p = 0")
        return self._spline(p) / (2 * p * p)

    @property
    def V0(self) -> float:
        return self.potential.vhat0

    @property
    def g0(self) -> float:
        return float(self.g_table[0])

    @property
    def f0(self) -> float:
        return self.V0 - self.g0

    @property
    def w_hat(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.p_table > 0, self.g_table / (2 * self.p_table ** 2), np.nan)

    @property
    def f_hat(self):
        return self.potential.vhat(self.p_table) - self.g_table

    @property
    def g_hat(self):
        return self.g_table

    def lipschitz(self) -> dict:
        """sup_p |dX/dp| for X in V_hat, g_hat, f_hat, from the tables."""
        p = self.p_table
        out = {}
        for name, vals in (("v_hat", self.potential.vhat(p)), ("g_hat", self.g_table),
                           ("f_hat", self.f_hat)):
            out[name] = float(np.max(np.abs(np.diff(vals) / np.diff(p))))
        return out

    def header(self) -> dict:
        return {"a": self.a, "h": self.h, "method": self.method,
                "a_asymptote": self.a_asymptote, "delta": self.delta,
                "potential": self.potential.to_dict(),
                "tolerances": self.tolerances, "born_terms": list(self.born_terms)}

    def to_table(self, fh=None) -> str:
        """Columnar text table (p, w_hat, f_hat, g_hat, v_hat) with a JSON header."""
        buf = io.StringIO()
        for key, val in self.header().items():
            buf.write(f"# {key}: {json.dumps(val, sort_keys=True)}\n")
        buf.write(",".join(TABLE_COLUMNS) + "\n")
        for row in zip(self.p_table, self.w_hat, self.f_hat, self.g_table,
                       self.potential.vhat(self.p_table)):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_table(cls, text: str) -> "ScatteringSolution":
        head, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                head[key.strip()] = json.loads(val)
            elif line and not line.startswith("p,"):
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows)
        pot = head["potential"]
        spec = PotentialSpec(family=pot["family"], lam=pot["lambda"], params=pot["params"])
        return cls(potential=spec, a=head["a"], p_table=arr[:, 0], g_table=arr[:, 3],
                   method=head["method"], h=head["h"], a_asymptote=head.get("a_asymptote"),
                   tolerances=head.get("tolerances", {}),
                   born_terms=tuple(head.get("born_terms", ())), delta=head.get("delta"))


def _table_grid(spec, p_max, n_table):
    p_max = default_p_cut(spec) if p_max is None else float(p_max)
    return np.linspace(0.0, p_max, int(n_table))


def _free_solution(spec, p, method):
    sol = ScatteringSolution(potential=spec, a=0.0, p_table=p, g_table=np.zeros_like(p),
                             method=method, h=0.0)
    sol.r_radial = np.geomspace(1e-3, 10.0, 50) * spec.sigma
    sol.w_radial = np.zeros_like(sol.r_radial)
    return sol


def solve_radial(spec: PotentialSpec, r_max: float | None = None, tol: float = 1e-10,
                 p_max: float | None = None, n_table: int = 4097,
                 rtol: float = 1e-13) -> ScatteringSolution:
    """Shoot u'' = V u / 2, u(0) = 0, u'(0) = 1 outward and read off a.

    The ODE is integrated for the deviation v = u - r, which keeps full
    relative precision when V is weak. Past the support u = kappa (r - a);
    ``a`` is taken from the integral (1/8 pi) int V (1 - w) and checked against
    the least-squares asymptote on [0.8 r_max, r_max].
    """
    p = _table_grid(spec, p_max, n_table)
    if spec.lam == 0:
        return _free_solution(spec, p, "ode")
    R = spec.r_support
    r_max = 3.0 * R if r_max is None else float(r_max)
    if r_max < 1.5 * R:
        raise DomainError(f"r_max={r_max} must be well beyond the potential support {R:.3g}")
    atol = 1e-22 * spec.lam * spec.sigma ** 2

    def rhs(r, y):
        return (y[1], 0.5 * spec(r) * (r + y[0]))

    ode = solve_ivp(rhs, (0.0, r_max), (0.0, 0.0), method="DOP853", rtol=rtol,
                    atol=atol, dense_output=True)
    if not ode.success:
        raise NumericError(f"radial ODE integration failed: {ode.message}")
    r_dense = np.linspace(0.0, r_max, 4001)[1:]
    u_dense = r_dense + ode.sol(r_dense)[0]
    if np.any(u_dense <= 0):
        bad = r_dense[np.argmax(u_dense <= 0)]
        raise DomainError(f"u(r) vanishes near r={bad:.4g}: the potential binds; "
                          "use a smaller lambda")
    kappa = 1.0 + float(ode.y[1, -1])

    panel = min(0.25 * spec.sigma, math.pi / (2 * p[-1]))
    rn, rw = gauss_panels(np.linspace(0.0, R, int(math.ceil(R / panel)) + 1), 20)
    u_n = rn + ode.sol(rn)[0]
    weight = rw * rn * spec(rn) * u_n / kappa
    a_int = det_sum(weight) / 2.0

    rf = np.linspace(0.8 * r_max, r_max, 201)
    slope, icpt = np.polyfit(rf, ode.sol(rf)[0], 1)
    a_fit = -icpt / (1.0 + slope)
    gap = abs(a_fit - a_int) / a_int
    if gap > tol:
        raise NumericError(f"scattering length routes disagree: integral {a_int:.15g}, "
                           f"asymptote {a_fit:.15g} (relative gap {gap:.2e} > {tol:.1e})")

    g = np.empty_like(p)
    for i0 in range(0, p.size, 512):
        blk = p[i0:i0 + 512]
        g[i0:i0 + 512] = 4 * math.pi * (np.sinc(np.outer(blk, rn) / math.pi) @ weight)
    g[0] = 8 * math.pi * a_int

    r_log = np.geomspace(1e-3 * spec.sigma, r_max, 400)
    w_log = 1.0 - (r_log + ode.sol(r_log)[0]) / (kappa * r_log)
    sol = ScatteringSolution(potential=spec, a=a_int, p_table=p, g_table=g, method="ode",
                             r_radial=r_log, w_radial=w_log, a_asymptote=a_fit,
                             tolerances={"ode_rtol": rtol, "a_agreement": gap, "tol": tol})
    sol.h = compute_h(sol)
    sol.delta = choose_delta(sol)
    return sol


def _radial_nodes(spec: PotentialSpec):
    k_max = spec.p_negligible(1e-18)
    width = 0.5 / spec.sigma
    return gauss_panels(np.linspace(0.0, k_max, int(math.ceil(k_max / width)) + 1), 24)


def born_series(spec: PotentialSpec, lattice: LatticeSpec | None = None, order: int = 3,
                mode: str = "continuum", p_max: float | None = None,
                n_table: int = 2049, n_angle: int = 64) -> ScatteringSolution:
    """Born series for g_hat = 2 p^2 w_hat truncated at ``order`` (1, 2 or 3).

    In ``continuum`` mode the momentum sums are integrals: each convolution is
    a radial Gauss-Legendre sum over |r| times a Legendre average over the
    angle between p and r. In ``lattice`` mode they are literal sums
    (1/|Lambda|) sum_{r != 0} over the points of ``lattice``.

    Successive terms at p = 0 must shrink; otherwise the series is declared
    divergent.
    """
    if order not in (1, 2, 3):
        raise DomainError("Born order must be 1, 2 or 3")
    if mode == "lattice":
        if lattice is None:
            raise DomainError("lattice mode needs a LatticeSpec")
        return _born_lattice(spec, lattice, order)
    if mode != "continuum":
        raise DomainError(f"unknown Born mode {mode!r}")
    if p_max is None and lattice is not None:
        p_max = lattice.p_cut
    p = _table_grid(spec, p_max, n_table)
    tag = f"born({order})"
    if spec.lam == 0:
        return _free_solution(spec, p, tag)

    rn, rw = _radial_nodes(spec)
    v_n = spec.vhat(rn)
    # convolution with g / (2 r^2): (1 / 4 pi^2) int dr g(r) <V_hat>(p, r)
    M = angular_average(spec.vhat, rn, rn, n_angle) * (rw / (4 * math.pi ** 2))[None, :]
    g_n = v_n.copy()
    g0 = spec.vhat0
    terms = [g0]
    for _ in range(order - 1):
        g0_next = spec.vhat0 - det_sum(rw * v_n * g_n) / (4 * math.pi ** 2)
        terms.append(g0_next - g0)
        g_prev, g_n, g0 = g_n, v_n - M @ g_n, g0_next
    for k in range(1, len(terms)):
        if abs(terms[k]) >= abs(terms[k - 1]):
            msg = (f"Born series not decreasing at order {k + 1}: "
                   f"|term| {abs(terms[k]):.3e} >= {abs(terms[k - 1]):.3e}")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            raise NumericError(msg)

    g = spec.vhat(p)
    if order > 1:
        for i0 in range(0, p.size, 256):
            blk = p[i0:i0 + 256]
            Mrow = angular_average(spec.vhat, blk, rn, n_angle) * (rw / (4 * math.pi ** 2))[None, :]
            g[i0:i0 + 256] = g[i0:i0 + 256] - Mrow @ g_prev
    g[0] = g0
    sol = ScatteringSolution(potential=spec, a=g0 / (8 * math.pi), p_table=p, g_table=g,
                             method=tag, born_terms=tuple(terms),
                             tolerances={"n_angle": n_angle})
    sol.h = compute_h(sol)
    sol.delta = choose_delta(sol) if order > 1 else None
    return sol


def _born_lattice(spec: PotentialSpec, lattice: LatticeSpec, order: int):
    P = lattice.points()
    pn = np.linalg.norm(P, axis=1)
    vol = lattice.volume
    v = spec.vhat(pn)
    tag = f"born-lattice({order})"

    def conv(vec):
        out = np.empty(len(P))
        for i0 in range(0, len(P), 512):
            d = np.linalg.norm(P[i0:i0 + 512, None, :] - P[None, :, :], axis=2)
            out[i0:i0 + 512] = spec.vhat(d) @ vec
        return out / vol

    g = v.copy()
    g0 = spec.vhat0
    terms = [g0]
    for _ in range(order - 1):
        x = g / (2 * pn ** 2)
        g0_next = spec.vhat0 - det_sum(v * x) / vol
        terms.append(g0_next - g0)
        g, g0 = v - conv(x), g0_next
    # shell averages; the lattice g_hat is only approximately radial
    idx = np.repeat(np.arange(len(lattice.mult)), lattice.mult)
    g_shell = np.bincount(idx, weights=g) / lattice.mult
    p_tab = np.concatenate([[0.0], lattice.p])
    g_tab = np.concatenate([[g0], g_shell])
    sol = ScatteringSolution(potential=spec, a=g0 / (8 * math.pi), p_table=p_tab,
                             g_table=g_tab, method=tag, born_terms=tuple(terms),
                             tolerances={"L": lattice.L, "p_cut": lattice.p_cut})
    sol.h = compute_h(sol)
    return sol


def compute_h(sol: ScatteringSolution) -> float:
    """h = V_hat_0 / (8 pi a) - 1, cross-checked against f_hat_0 / g_hat_0."""
    if sol.potential.lam == 0:
        return 0.0
    h = sol.V0 / (8 * math.pi * sol.a) - 1.0
    ratio = sol.f0 / sol.g0
    if ratio == 0.0 and abs(h) < 1e-12:
        return 0.0  # first Born order: f_hat vanishes identically, h is roundoff
    if h <= 0:
        raise DomainError(f"h = {h:.3e} <= 0 contradicts 8 pi a < V_hat_0")
    if abs(h - ratio) > 1e-8 * h:
        raise VerificationError(f"h = {h:.15g} but f_hat_0/g_hat_0 = {ratio:.15g}")
    return h


def choose_delta(sol: ScatteringSolution, candidates=DELTA_CANDIDATES) -> float:
    """Largest delta with V_hat, f_hat, g_hat all in [X_0/2, X_0] on |p| <= delta."""
    for d in candidates:
        if d > sol.p_max:
            continue
        q = np.linspace(0.0, d, 257)
        ok = True
        for vals in (sol.vhat(q), sol.f(q), sol.g(q)):
            x0 = vals[0]
            if np.any(vals < 0.5 * x0) or np.any(vals > x0 * (1 + 1e-12)):
                ok = False
                break
        if ok:
            return d
    raise NumericError("no admissible small-momentum regime delta found")

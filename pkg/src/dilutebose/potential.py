"""Radially symmetric soft pair potentials V = lam * Vtilde.

Two profile families are shipped:

``gaussian``
    Vtilde(r) = exp(-r^2 / sigma^2), so Vtilde(0) = 1.
``poly_gauss``
    Vtilde(r) = sum_k c_k (r/sigma)^(2k) exp(-r^2 / sigma^2) with c_k >= 0,
    an even polynomial table with a Gaussian cut-off.

Both are smooth at the origin and decay faster than any power, and both have
closed-form 3D Fourier transforms, which serve as the fast vectorised path
(:meth:`PotentialSpec.vhat`). :func:`fourier_continuum` computes the same
transform by adaptive quadrature and is kept as the independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import eval_genlaguerre

from .errors import ConfigError, DomainError, NumericError
from .quadrature import det_sum

FAMILIES = ("gaussian", "poly_gauss")

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class PotentialSpec:
    """A radial potential ``lam * Vtilde(r)`` from one of :data:`FAMILIES`.

    Attributes
    ----------
    family : str
        Profile family name.
    lam : float
        Coupling constant (non-negative; zero gives the free gas).
    params : dict
        ``sigma`` for both families; ``coeffs`` (list of c_k) for poly_gauss.
    r_support : float, optional
        Radius beyond which V < 1e-14 * lam. Derived when not given.
    """

    family: str = "gaussian"
    lam: float = 0.01
    params: dict = field(default_factory=lambda: {"sigma": 1.0})
    r_support: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown potential family {self.family!r}; "
                              f"expected one of {FAMILIES}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise DomainError(f"coupling lambda must be >= 0, got {self.lam}")
        sigma = self.params.get("sigma", 1.0)
        if not sigma > 0:
            raise ConfigError(f"sigma must be positive, got {sigma}")
        if self.family == "poly_gauss":
            coeffs = self.params.get("coeffs")
            if not coeffs or any(c < 0 for c in coeffs) or sum(coeffs) <= 0:
                raise ConfigError("poly_gauss needs a non-empty table 'coeffs' of "
                                  "non-negative numbers, not all zero")
        if self.r_support is None:
            object.__setattr__(self, "r_support", self._default_support())

    @property
    def sigma(self) -> float:
        return float(self.params.get("sigma", 1.0))

    @property
    def coeffs(self) -> tuple:
        if self.family == "gaussian":
            return (1.0,)
        return tuple(float(c) for c in self.params["coeffs"])

    def _default_support(self) -> float:
        # first radius past the profile maximum where Vtilde < 1e-14 * max
        r = np.linspace(0.0, 40.0, 40001) * self.sigma
        prof = self.profile(r)
        ipk = int(np.argmax(prof))
        below = np.nonzero(prof[ipk:] < 1e-14 * prof[ipk])[0]
        return float(r[ipk + below[0]])

    def profile(self, r):
        """The unscaled profile Vtilde(r)."""
        x2 = (np.asarray(r, dtype=float) / self.sigma) ** 2
        poly = np.zeros_like(x2)
        for c in reversed(self.coeffs):
            poly = poly * x2 + c
        return poly * np.exp(-x2)

    def __call__(self, r):
        return self.lam * self.profile(r)

    def vhat(self, p):
        """Closed-form continuum transform, vectorised over |p|."""
        p = np.asarray(p, dtype=float)
        s = self.sigma
        y = (p * s) ** 2 / 4.0
        total = np.zeros_like(y)
        for k, c in enumerate(self.coeffs):
            if c:
                total = total + c * math.factorial(k) * eval_genlaguerre(k, 0.5, y)
        return self.lam * math.pi ** 1.5 * s ** 3 * total * np.exp(-y)

    @property
    def vhat0(self) -> float:
        return float(self.vhat(0.0))

    def p_negligible(self, rel=1e-18) -> float:
        """Momentum beyond which |vhat| < rel * vhat0 (upper bound via the envelope)."""
        # envelope: |L_k(y)| e^{-y} decays like y^k e^{-y}
        kmax = len(self.coeffs) - 1
        y = max(1.0, -math.log(rel))
        for _ in range(60):
            y = -math.log(rel) + kmax * math.log(max(y, 1.0)) + 2.0
        return 2.0 * math.sqrt(y) / self.sigma

    def lipschitz_bound(self) -> float:
        """Upper bound on |d vhat / dp|: 4 pi int r^3 V(r) dr."""
        r = np.linspace(0.0, self.r_support, 20001)
        return float(4 * math.pi * integrate.simpson(r ** 3 * self(r), x=r))

    def to_dict(self) -> dict:
        return {"family": self.family, "lambda": self.lam, "params": dict(self.params)}

    @classmethod
    def from_mapping(cls, section: dict) -> "PotentialSpec":
        """Build from a config section with keys family, lambda, params."""
        if not isinstance(section, dict):
            raise ConfigError("potential section must be a mapping")
        try:
            lam = float(section["lambda"])
        except KeyError:
            raise ConfigError("potential section lacks 'lambda'") from None
        except (TypeError, ValueError):
            raise ConfigError(f"potential lambda is not a number: {section['lambda']!r}") from None
        params = dict(section.get("params") or {"sigma": 1.0})
        return cls(family=section.get("family", "gaussian"), lam=lam, params=params)


def evaluate_position(spec: PotentialSpec, r):
    """V(r) = lam * Vtilde(r) for r >= 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(~np.isfinite(r_arr)):
        raise DomainError("potential evaluated at negative or non-finite radius")
    out = spec(r_arr)
    return float(out) if out.ndim == 0 else out


def fourier_continuum(spec: PotentialSpec, p_norm: float,
                      epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """Radial 3D transform (4 pi / p) int_0^inf r sin(p r) V(r) dr by quadrature.

    The integration range stops at ``spec.r_support`` (where V < 1e-14 lam) and
    is split at the zeros of sin(p r) so every adaptive Gauss-Kronrod call sees
    a single lobe.
    """
    if p_norm < 0 or not math.isfinite(p_norm):
        raise DomainError(f"|p| must be finite and >= 0, got {p_norm}")
    if spec.lam == 0:
        return 0.0
    R = spec.r_support

    def integrand(r):
        # r^2 sinc(p r) is regular at p = 0 and reduces to the p -> 0 limit
        return 4 * math.pi * r * r * np.sinc(p_norm * r / math.pi) * spec(r)

    if p_norm * R <= math.pi:
        edges = [0.0, R]
    else:
        nz = int(p_norm * R / math.pi)
        edges = [0.0] + [k * math.pi / p_norm for k in range(1, nz + 1)] + [R]
    values, errors = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        v, e = integrate.quad(integrand, lo, hi, epsabs=epsabs / len(edges),
                              epsrel=epsrel, limit=200)
        values.append(v)
        errors.append(e)
    total = det_sum(values)
    err = det_sum(errors)
    if err > max(epsabs, epsrel * abs(total)):
        raise NumericError(f"Fourier quadrature at |p|={p_norm} did not converge: "
                           f"error estimate {err:.3e} for value {total:.6e}")
    return total


def periodization_defect(spec: PotentialSpec, L: float, n_samples: int = 9) -> float:
    """Largest relative change of V on the box when its 26 neighbouring images are added.

    This bounds the difference between lattice and continuum transforms of V;
    it is ~0 once L exceeds a few r_support.
    """
    if L <= 0:
        raise DomainError("box side must be positive")
    g = (np.arange(n_samples) + 0.5) / n_samples * L - L / 2
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    base = spec(np.linalg.norm(pts, axis=1))
    extra = np.zeros_like(base)
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            for k in (-1, 0, 1):
                if i == j == k == 0:
                    continue
                shift = np.array([i, j, k], dtype=float) * L
                extra += spec(np.linalg.norm(pts + shift, axis=1))
    scale = spec.lam * max(spec.coeffs[0], 1e-300) if spec.lam else 1.0
    return float(np.max(extra) / scale)

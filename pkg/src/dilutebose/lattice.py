"""Dual lattice (2 pi / L Z)^3 and shell-aggregated momentum sums.

Every summand met in the energy depends on |p| only, so the points of the
dual lattice are grouped into shells of equal |p|^2; a sum over N points
becomes a weighted sum over O(N^(2/3)) shells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import det_sum

MAX_EXPLICIT_POINTS = 400_000


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Nonzero points of (2 pi / L Z)^3 with |p| <= p_cut, grouped into shells.

    Attributes
    ----------
    L : float
        Box side; the volume is L^3.
    p_cut : float
        Momentum cutoff.
    n_sq : ndarray of int
        Integer |k|^2 of each shell (p = spacing * k), ascending.
    mult : ndarray of int
        Number of lattice points in each shell.
    """

    L: float
    p_cut: float
    n_sq: np.ndarray
    mult: np.ndarray

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.L

    @property
    def volume(self) -> float:
        return self.L ** 3

    @property
    def p2(self) -> np.ndarray:
        return self.spacing ** 2 * self.n_sq

    @property
    def p(self) -> np.ndarray:
        return self.spacing * np.sqrt(self.n_sq)

    @property
    def n_points(self) -> int:
        return int(self.mult.sum())

    @property
    def shells(self):
        """List of (|p|^2, multiplicity) pairs."""
        return list(zip(self.p2.tolist(), self.mult.tolist()))

    def points(self) -> np.ndarray:
        """Explicit momentum vectors, ordered shell by shell (small lattices only)."""
        if self.n_points > MAX_EXPLICIT_POINTS:
            raise DomainError(f"{self.n_points} lattice points exceed the explicit "
                              f"enumeration budget of {MAX_EXPLICIT_POINTS}")
        nmax = int(self.n_sq[-1])
        m = int(math.isqrt(nmax))
        ax = np.arange(-m, m + 1)
        K = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        n = (K ** 2).sum(axis=1)
        keep = (n > 0) & (n <= nmax)
        K, n = K[keep], n[keep]
        order = np.lexsort((K[:, 2], K[:, 1], K[:, 0], n))
        return self.spacing * K[order].astype(float)

    def dump_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_sq", "p", "multiplicity"])
            for n, p, m in zip(self.n_sq.tolist(), self.p.tolist(), self.mult.tolist()):
                w.writerow([n, repr(p), m])


def _sum_of_three_squares_counts(nmax: int) -> np.ndarray:
    """r3(n) for 0 <= n <= nmax, by two rounds of shifted accumulation."""
    m = int(math.isqrt(nmax))
    r1 = np.zeros(nmax + 1, dtype=np.int64)
    r1[0] = 1
    r1[np.arange(1, m + 1) ** 2] = 2
    squares = np.arange(m + 1) ** 2
    weights = np.where(squares == 0, 1, 2)

    def convolve(r):
        out = np.zeros_like(r)
        for sq, w in zip(squares.tolist(), weights.tolist()):
            out[sq:] += w * r[: nmax + 1 - sq]
        return out

    return convolve(convolve(r1))


def enumerate_shells(L: float, p_cut: float) -> LatticeSpec:
    """Shells of the dual lattice of a cubic box of side L inside |p| <= p_cut."""
    if not (L > 0 and p_cut > 0):
        raise DomainError("box side and cutoff must be positive")
    spacing = 2 * math.pi / L
    nmax = int(math.floor((p_cut / spacing) ** 2 * (1 + 1e-14)))
    if nmax < 1:
        raise DomainError(f"cutoff {p_cut} lies below the first shell |p| = {spacing:.6g}; "
                          "the truncated lattice is empty")
    r3 = _sum_of_three_squares_counts(nmax)
    n_sq = np.nonzero(r3[1:])[0] + 1
    return LatticeSpec(L=float(L), p_cut=float(p_cut), n_sq=n_sq, mult=r3[n_sq])


def lattice_sum(values, lattice: LatticeSpec) -> float:
    """(1/|Lambda|) sum over points of a shell-indexed summand."""
    return det_sum(lattice.mult * np.asarray(values, dtype=float)) / lattice.volume


@dataclass(frozen=True)
class RiemannResult:
    value: float
    error: float
    Ls: tuple
    raw: tuple
    diverging: bool = False


def _power_fit(values, Ls, orders):
    A = np.column_stack([np.ones(len(Ls))] + [np.power(Ls, -float(q)) for q in orders])
    return float(np.linalg.solve(A, values)[0])


def richardson(values, Ls, orders=(3, 4)):
    """Richardson extrapolation of f(L) = f_inf + sum_k c_k L^(-orders[k]).

    Uses as many correction orders as there are refinements and solves for
    f_inf exactly. The error estimate is the change from the fit with one
    order fewer on the largest boxes.
    """
    values = np.asarray(values, dtype=float)
    Ls = np.asarray(Ls, dtype=float)
    k = min(len(orders), len(values) - 1)
    best = _power_fit(values[-(k + 1):], Ls[-(k + 1):], orders[:k])
    if k == 0:
        return best, float("inf")
    prev = _power_fit(values[-k:], Ls[-k:], orders[:k - 1])
    return best, abs(best - prev)


def riemann_limit(F, lattice: LatticeSpec | None = None, *, Ls=None, p_cut=None,
                  tail_estimate: float | None = None, tol: float = 1e-10,
                  orders=(3, 4)):
    """(1/|Lambda|) sum_{p != 0} F(|p|), optionally extrapolated in 1/L.

    For a summand smooth at the origin the lattice error is dominated by the
    excluded p = 0 cell, F(0)/L^3, so the default eliminates L^-3 then L^-4.

    Parameters
    ----------
    F : callable
        Radial summand, vectorised over |p|.
    lattice : LatticeSpec, optional
        Evaluate at this single lattice; returns a float.
    Ls : sequence of float, optional
        Box sides (e.g. L0, 2 L0, 4 L0) for extrapolation mode; returns a
        :class:`RiemannResult`. Requires ``p_cut``.
    tail_estimate : float, optional
        Caller's bound on the part of the sum beyond the cutoff; raises if it
        exceeds ``tol``.
    """
    if tail_estimate is not None and tail_estimate > tol:
        raise DomainError(f"cutoff tail estimate {tail_estimate:.3e} exceeds tolerance {tol:.1e}")
    if Ls is None:
        if lattice is None:
            raise ValueError("give either a lattice or a sequence of box sides")
        return lattice_sum(F(lattice.p), lattice)
    if p_cut is None:
        p_cut = lattice.p_cut if lattice is not None else None
    if p_cut is None:
        raise ValueError("extrapolation mode needs p_cut")
    raw = tuple(lattice_sum(F(lat.p), lat)
                for lat in (enumerate_shells(L, p_cut) for L in Ls))
    value, err = richardson(raw, Ls, orders)
    mags = np.abs(raw)
    ratios = mags[1:] / np.maximum(mags[:-1], 1e-300)
    diverging = bool(np.all(ratios > 1.5))
    return RiemannResult(value=value, error=err, Ls=tuple(Ls), raw=raw, diverging=diverging)

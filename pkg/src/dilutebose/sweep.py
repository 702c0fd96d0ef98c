"""Density sweeps: energies per point, L-extrapolation and the kappa fit."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import (LHY_COEFF, fit_kappa, fit_power_law, kappa_coefficient, lhy_prediction,
                          phi, q_of_h)
from .lattice import enumerate_shells, richardson
from .scattering import default_p_cut
from .variational import build_state, energy_full


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def energy_row(scat, rho, L=None, p_cut=None) -> dict:
    """EnergyBreakdown record plus depletion and kappa for one (rho, L)."""
    lattice = None
    if L is not None:
        lattice = enumerate_shells(L, p_cut or default_p_cut(scat.potential))
    st = build_state(scat, rho, lattice=lattice)
    br = energy_full(st, scat)
    rec = br.to_record()
    rec["L"] = "inf" if L is None else L
    rec["depletion"] = st.depletion
    rec["kappa"] = float(kappa_coefficient(br.per_particle, rho, scat.a))
    return rec


INTENSIVE = ("rho", "per_particle", "depletion", "kappa")


def lattice_extrapolation(scat, rho, Ls, p_cut=None, threads=1):
    """Rows at each L and a Richardson row in 1/L over the last three sizes.

    Extensive columns are extrapolated per unit volume, so the extrapolated
    row uses the same reference volume 1 as the infinite-volume row.
    """
    rows = _map(lambda L: energy_row(scat, rho, L, p_cut), list(Ls), threads)
    if len(rows) >= 3:
        Lt = np.array(Ls[-3:], float)
        ext = {"L": "extrapolated", "rho": rho, "volume": 1.0}
        for key in rows[-1]:
            if key in ("L", "rho", "volume"):
                continue
            scale = [1.0 if key in INTENSIVE else r["volume"] for r in rows[-3:]]
            vals = [r[key] / v for r, v in zip(rows[-3:], scale)]
            ext[key] = float(richardson(vals, Lt)[0])
        ext["kappa"] = float(kappa_coefficient(ext["per_particle"], rho, scat.a))
        rows.append(ext)
    return rows


@dataclass
class LhySweep:
    rho: np.ndarray
    per_particle: np.ndarray
    kappa: np.ndarray
    depletion: np.ndarray
    residual_ratio: np.ndarray
    kappa0: float
    target: float
    depletion_exponent: float
    synthetic: bool

    @property
    def ratio(self) -> float:
        return self.kappa0 / self.target

    def rows(self):
        return [{"rho": float(r), "per_particle": float(e), "kappa": float(k),
                 "depletion": float(d), "residual_ratio": float(q)}
                for r, e, k, d, q in zip(self.rho, self.per_particle, self.kappa,
                                         self.depletion, self.residual_ratio)]


def lhy_sweep(scat, rhos, threads=1, synthetic=False) -> LhySweep:
    """Infinite-volume energies over ``rhos`` and the rho -> 0 limit of kappa.

    With ``synthetic`` the energies are replaced by the LHY formula itself
    (closed loop): kappa must then equal 128/(15 sqrt(pi)) at every point.
    """
    rhos = np.asarray(rhos, float)
    a = scat.a
    if synthetic:
        E = np.array([lhy_prediction(r, a) for r in rhos])
        dep = np.full(rhos.size, np.nan)
        target = LHY_COEFF
        q = np.array([lhy_prediction(r, a) - 4 * math.pi * r * a for r in rhos])
    else:
        recs = _map(lambda r: energy_row(scat, r), list(rhos), threads)
        E = np.array([rec["per_particle"] for rec in recs])
        dep = np.array([rec["depletion"] for rec in recs])
        target = math.sqrt(32 / math.pi) * phi(scat.h).value
        q = np.array([q_of_h(scat.h, a, r, 1.0) for r in rhos])
    kap = kappa_coefficient(E, rhos, a)
    fit = fit_kappa(rhos, kap)
    resid = (E - 4 * math.pi * rhos * a - q) / (rhos ** 2 * np.abs(np.log(rhos)))
    dep_exp = fit_power_law(rhos, dep)[0] if not synthetic else float("nan")
    return LhySweep(rho=rhos, per_particle=E, kappa=kap, depletion=dep, residual_ratio=resid,
                    kappa0=fit.kappa0 if not synthetic else float(np.mean(kap)),
                    target=target, depletion_exponent=dep_exp, synthetic=synthetic)

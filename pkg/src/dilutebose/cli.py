"""Command-line front end: ``dilutebose <command> --config run.yaml``.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 domain or
regime error, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import __version__
from .asymptotics import phi_table
from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, DiluteBoseError, VerificationError
from .fock_oracle import FORMULAS, run_oracle_suite
from .output import write_table
from .scattering import born_series, solve_radial
from .sweep import energy_row, lattice_extrapolation, lhy_sweep

log = logging.getLogger("dilutebose")

DEFAULT_H_GRID = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]


def _emit(args, cfg: RunConfig, table, rows):
    out = args.out or cfg.out_dir
    formats = (args.format,) if args.format else cfg.formats
    paths = [write_table(out, table, rows, cfg.sha256, fmt) for fmt in formats]
    for p in paths:
        log.info("wrote %s", p)
    return paths


def _scattering(cfg):
    cfg.require("potential")
    return solve_radial(cfg.potential, tol=cfg.tolerances["ode"])


def cmd_scatter(args, cfg: RunConfig) -> int:
    """scattering length, h and momentum tables by both routes"""
    cfg.require("potential")
    spec = cfg.potential
    ode = solve_radial(spec, tol=cfg.tolerances["ode"])
    born = born_series(spec, order=cfg.born_order)
    gap = abs(ode.a - born.a) / ode.a if ode.a > 0 else 0.0
    allowed = cfg.tolerances["route_factor"] * spec.lam ** 3 if cfg.born_order == 3 else math.inf
    row = {"lambda": spec.lam, "a": ode.a, "a_born": born.a, "born_order": cfg.born_order,
           "route_gap": gap, "route_tolerance": allowed, "h": ode.h,
           "delta": "" if ode.delta is None else ode.delta, "v_hat0": spec.vhat0,
           "method": ode.method}
    _emit(args, cfg, "scatter_summary", [row])
    table = [{"p": float(p), "w_hat": float(w), "f_hat": float(f), "g_hat": float(g),
              "v_hat": float(v)}
             for p, w, f, g, v in zip(ode.p_table, ode.w_hat, ode.f_hat, ode.g_hat,
                                      spec.vhat(ode.p_table))]
    _emit(args, cfg, "scatter_table", table)
    if gap > allowed:
        raise VerificationError(f"scattering routes disagree: relative gap {gap:.3e} > {allowed:.3e}")
    if spec.lam > 0 and not 8 * math.pi * ode.a < spec.vhat0:
        raise VerificationError("8 pi a < V_hat_0 violated")
    return 0


def cmd_energy(args, cfg: RunConfig) -> int:
    """trial-state energy breakdown per density (and box size)"""
    cfg.require("potential", "physics")
    if not cfg.rho:
        raise ConfigError("physics.rho is empty")
    scat = _scattering(cfg)
    rows = []
    for rho in cfg.rho:
        if cfg.L:
            rows.extend(lattice_extrapolation(scat, rho, cfg.L, cfg.p_cut, args.threads))
        rows.append(energy_row(scat, rho))
    _emit(args, cfg, "energy", rows)
    return 0


def cmd_lhy_check(args, cfg: RunConfig) -> int:
    """second-order coefficient versus sqrt(32/pi) Phi(h)"""
    cfg.require("potential", "physics")
    if len(cfg.rho) < 2:
        raise ConfigError("lhy-check needs at least two densities in physics.rho")
    scat = _scattering(cfg)
    synthetic = bool(cfg.lhy.get("synthetic", False))
    sw = lhy_sweep(scat, cfg.rho, threads=args.threads, synthetic=synthetic)
    ok = abs(sw.ratio - 1) <= cfg.tolerances["kappa_rel"]
    _emit(args, cfg, "lhy_points", sw.rows())
    verdict = {"lambda": cfg.potential.lam, "a": scat.a, "h": scat.h, "kappa0": sw.kappa0,
               "target": sw.target, "ratio": sw.ratio,
               "depletion_exponent": "" if synthetic else sw.depletion_exponent,
               "synthetic": synthetic, "pass": ok}
    _emit(args, cfg, "lhy_verdict", [verdict])
    if not ok:
        raise VerificationError(f"kappa0/target = {sw.ratio:.5f} outside 1 +- {cfg.tolerances['kappa_rel']}")
    return 0


def cmd_oracle(args, cfg: RunConfig) -> int:
    """brute-force Fock-space check of the moment formulas and <H>"""
    o = cfg.oracle
    fault = args.inject_fault or o.get("fault")
    report = run_oracle_suite(
        n_draws=int(o.get("draws", 100)), seed=args.seed if args.seed is not None else int(o.get("seed", 0)),
        c_max=float(o.get("c_max", 0.3)), sqrtN0_max=float(o.get("sqrtN0_max", 2.0)),
        n_max=int(o.get("n_max", 12)), potential=cfg.potential,
        n_hamiltonian=int(o.get("hamiltonian_draws", 5)),
        tol=cfg.tolerances["oracle_moment"], h_tol=cfg.tolerances["oracle_energy"],
        fault=fault, zero_c=bool(o.get("zero_c", False)))
    _emit(args, cfg, "oracle_report", report.to_records())
    if not report.passed:
        raise VerificationError("oracle mismatch in: " + ", ".join(sorted(set(report.failures()))))
    return 0


def cmd_phi_table(args, cfg: RunConfig) -> int:
    """Phi(h) and S = Phi(h)/Phi(0) on a grid of h"""
    grid = cfg.h_grid or DEFAULT_H_GRID
    rows = [{"h": h, "phi": v, "s_lambda": s} for h, v, s in phi_table(grid)]
    _emit(args, cfg, "phi_table", rows)
    return 0


COMMANDS = {
    "scatter": cmd_scatter,
    "energy": cmd_energy,
    "lhy-check": cmd_lhy_check,
    "oracle": cmd_oracle,
    "phi-table": cmd_phi_table,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help="output directory (overrides outputs.directory)")
    common.add_argument("--format", choices=("csv", "doc"),
                        help="csv table or JSON document (overrides outputs.formats)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for randomised checks (oracle draws)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(
        prog="dilutebose", description="Dilute Bose gas: scattering, trial-state energy, LHY checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip() or None)
        if name == "oracle":
            p.add_argument("--inject-fault", choices=FORMULAS + ("hamiltonian",),
                           help="test mode: flip the sign of one analytic formula")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else parse_config("")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](args, cfg)
    except DiluteBoseError as exc:
        print(f"dilutebose {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

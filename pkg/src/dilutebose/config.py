"""YAML run configuration with validation and environment overrides."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .potential import PotentialSpec

ENV_PREFIX = "DILUTEBOSE_TOL_"

DEFAULT_TOLERANCES = {
    "ode": 1e-10,
    "route_factor": 10.0,
    "kappa_rel": 0.05,
    "oracle_moment": 1e-8,
    "oracle_energy": 1e-6,
    "frozen_rel": 1e-8,
}


def _as_list(value, name):
    if value is None:
        return []
    vals = value if isinstance(value, (list, tuple)) else [value]
    try:
        vals = [float(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected numbers, got {value!r}") from None
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{name}: sweep values must be strictly increasing")
    return vals


@dataclass
class RunConfig:
    """Validated configuration.

    ``rho`` and ``L`` are sweep lists (possibly of length one); an empty
    ``L`` list means infinite volume only.
    """

    potential: PotentialSpec | None
    rho: list = field(default_factory=list)
    born_order: int = 3
    L: list = field(default_factory=list)
    p_cut: float | None = None
    out_dir: str = "out"
    formats: tuple = ("csv",)
    tolerances: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    lhy: dict = field(default_factory=dict)
    h_grid: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)
    sha256: str = ""

    def require(self, *sections):
        for sec in sections:
            if sec not in self.raw:
                raise ConfigError(f"config is missing the [{sec}] section")


def parse_config(text: str, env=None) -> RunConfig:
    """Parse YAML text into a :class:`RunConfig`."""
    env = os.environ if env is None else env
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    known = {"potential", "lattice", "physics", "outputs", "tolerances", "oracle", "lhy", "phi_table"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    pot = None
    if "potential" in raw:
        try:
            pot = PotentialSpec.from_mapping(raw["potential"])
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"[potential]: {exc}") from None
    phys = raw.get("physics") or {}
    lat = raw.get("lattice") or {}
    outs = raw.get("outputs") or {}
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (raw.get("tolerances") or {}).items():
        try:
            tol[str(k)] = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerance {k}: not a number") from None
    for key, val in env.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            try:
                tol[name] = float(val)
            except ValueError:
                raise ConfigError(f"environment override {key}={val!r} is not a number") from None
    formats = outs.get("formats", ["csv"])
    formats = (formats,) if isinstance(formats, str) else tuple(formats)
    if any(f not in ("csv", "doc") for f in formats):
        raise ConfigError(f"outputs.formats must be csv and/or doc, got {formats}")
    born = phys.get("born_order", 3)
    if born not in (1, 2, 3):
        raise ConfigError("physics.born_order must be 1, 2 or 3")
    p_cut = lat.get("p_cut")
    cfg = RunConfig(
        potential=pot,
        rho=_as_list(phys.get("rho"), "physics.rho"),
        born_order=int(born),
        L=_as_list(lat.get("L"), "lattice.L"),
        p_cut=None if p_cut is None else float(p_cut),
        out_dir=str(outs.get("directory", "out")),
        formats=formats,
        tolerances=tol,
        oracle=dict(raw.get("oracle") or {}),
        lhy=dict(raw.get("lhy") or {}),
        h_grid=_as_list((raw.get("phi_table") or {}).get("h"), "phi_table.h"),
        raw=raw,
        sha256=hashlib.sha256(text.encode()).hexdigest(),
    )
    if any(r <= 0 for r in cfg.rho):
        raise ConfigError("physics.rho values must be positive")
    if any(x < 0 for x in cfg.h_grid):
        raise ConfigError("phi_table.h values must be nonnegative")
    return cfg


def load_config(path, env=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, env)

import csv
import hashlib
import json
from pathlib import Path

import pytest

from dilutebose.cli import main
from dilutebose.config import DEFAULT_TOLERANCES, load_config, parse_config
from dilutebose.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


SCATTER = """
potential: {family: gaussian, lambda: %s, params: {sigma: 1.0}}
physics: {born_order: 3}
"""


# ------------------------------------------------------------------ config

def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.yaml")):
        cfg = load_config(path, env={})
        assert len(cfg.sha256) == 64


def test_defaults_and_env_override():
    cfg = parse_config("physics: {rho: [1.0e-5]}", env={"DILUTEBOSE_TOL_KAPPA_REL": "0.01"})
    assert cfg.tolerances["kappa_rel"] == 0.01
    assert cfg.tolerances["ode"] == DEFAULT_TOLERANCES["ode"]
    assert cfg.potential is None


@pytest.mark.parametrize("text", [
    "potential: [1, 2",
    "surprise: {}",
    "physics: {rho: [1.0e-4, 1.0e-5]}",
    "physics: {rho: [-1.0]}",
    "physics: {born_order: 4}",
    "outputs: {formats: [xlsx]}",
    "potential: {family: gaussian, lambda: -1}",
    "tolerances: {ode: tiny}",
    "- just a list",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text, env={})


def test_bad_env_override():
    with pytest.raises(ConfigError):
        parse_config("", env={"DILUTEBOSE_TOL_ODE": "small"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


# ------------------------------------------------------------------ commands

def test_scatter_free(tmp_path):
    cfg = write(tmp_path, SCATTER % 0.0)
    assert main(["scatter", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    row = read_csv(tmp_path / "o" / "scatter_summary.csv")[0]
    assert float(row["a"]) == 0.0


def test_scatter_weak(tmp_path):
    cfg = write(tmp_path, SCATTER % 0.01)
    assert main(["scatter", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    row = read_csv(tmp_path / "o" / "scatter_summary.csv")[0]
    assert float(row["route_gap"]) <= float(row["route_tolerance"])
    assert float(row["h"]) > 0
    table = read_csv(tmp_path / "o" / "scatter_table.csv")
    assert float(table[0]["p"]) == 0.0 and len(table) > 1000


def test_malformed_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "potential: {family: gaussian, lambda: [")
    assert main(["scatter", "--config", cfg]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_missing_section_exit_code(tmp_path):
    cfg = write(tmp_path, SCATTER % 0.01)
    assert main(["energy", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_domain_exit_code(tmp_path):
    text = SCATTER % 0.1 + "lattice: {L: [10.0], p_cut: 9.0}\nphysics: {rho: [1.0e-2]}\n"
    cfg = write(tmp_path, text.replace("physics: {born_order: 3}\n", ""))
    assert main(["energy", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_numeric_exit_code(tmp_path):
    cfg = write(tmp_path, SCATTER % 0.01 + "tolerances: {ode: 1.0e-17}\n")
    assert main(["scatter", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_threads_validated(tmp_path):
    cfg = write(tmp_path, SCATTER % 0.01)
    assert main(["scatter", "--config", cfg, "--threads", "0"]) == 2


def test_energy_rows(tmp_path):
    text = ("potential: {family: gaussian, lambda: 0.1}\n"
            "physics: {rho: [1.0e-6, 1.0e-5, 1.0e-4]}\n")
    cfg = write(tmp_path, text)
    assert main(["energy", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "2"]) == 0
    rows = read_csv(tmp_path / "o" / "energy.csv")
    assert len(rows) == 3
    ratios = [float(r["per_particle"]) / (12.566370614359172 * float(r["rho"])) for r in rows]
    assert ratios[0] < ratios[1] < ratios[2]


def test_lhy_synthetic_closed_loop(tmp_path):
    text = ("potential: {family: gaussian, lambda: 0.1}\n"
            "physics: {rho: [1.0e-6, 1.0e-5, 1.0e-4]}\nlhy: {synthetic: true}\n")
    cfg = write(tmp_path, text)
    assert main(["lhy-check", "--config", cfg, "--out", str(tmp_path / "o"), "--format", "doc"]) == 0
    doc = json.loads((tmp_path / "o" / "lhy_verdict.json").read_text())
    assert doc["rows"][0]["ratio"] == pytest.approx(1.0, abs=1e-10)
    assert doc["meta"]["config_sha256"] == hashlib.sha256(Path(cfg).read_bytes()).hexdigest()


def test_lhy_needs_two_densities(tmp_path):
    cfg = write(tmp_path, "potential: {family: gaussian, lambda: 0.1}\nphysics: {rho: [1.0e-5]}\n")
    assert main(["lhy-check", "--config", cfg]) == 2


def test_oracle_fault_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "oracle: {draws: 2, hamiltonian_draws: 1}\n")
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    code = main(["oracle", "--config", cfg, "--out", str(tmp_path / "f"),
                 "--inject-fault", "occupation"])
    assert code == 1
    assert "occupation" in capsys.readouterr().err
    rows = read_csv(tmp_path / "f" / "oracle_report.csv")
    assert any(r["formula"] == "occupation" and r["pass"] == "false" for r in rows)


def test_oracle_zero_c(tmp_path):
    cfg = write(tmp_path, "oracle: {draws: 2, hamiltonian_draws: 1, zero_c: true}\n")
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = {r["formula"]: r for r in read_csv(tmp_path / "o" / "oracle_report.csv")}
    assert float(rows["occupation"]["brute_force"]) == 0.0
    assert float(rows["condensate_number"]["brute_force"]) > 0.0


def test_idempotent_output(tmp_path):
    text = "phi_table: {h: [0.0, 0.1, 0.2]}\n"
    cfg = write(tmp_path, text)
    for sub in ("a", "b"):
        assert main(["phi-table", "--config", cfg, "--out", str(tmp_path / sub), "--seed", "3"]) == 0
    first = (tmp_path / "a" / "phi_table.csv").read_bytes()
    assert first == (tmp_path / "b" / "phi_table.csv").read_bytes()
    assert hashlib.sha256(text.encode()).hexdigest().encode() in first


def test_phi_table_default_grid(tmp_path):
    assert main(["phi-table", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "phi_table.csv")
    assert float(rows[0]["s_lambda"]) == pytest.approx(1.0, abs=1e-14)
    s = [float(r["s_lambda"]) for r in rows]
    assert s == sorted(s)


def test_energy_extrapolated_row_is_per_volume(tmp_path):
    text = ("potential: {family: gaussian, lambda: 0.1}\n"
            "lattice: {L: [30.0, 40.0, 50.0]}\nphysics: {rho: [1.0e-2]}\n")
    cfg = write(tmp_path, text)
    assert main(["energy", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = {r["L"]: r for r in read_csv(tmp_path / "o" / "energy.csv")}
    ext, inf = rows["extrapolated"], rows["inf"]
    assert float(ext["N"]) == pytest.approx(float(inf["N"]), rel=1e-3)
    assert float(ext["E_total"]) == pytest.approx(float(inf["E_total"]), rel=1e-3)

import json

import pytest

import diqft.simulator
from diqft.cli import main
from diqft.experiments import (
    ConfigError,
    SweepConfig,
    run_sweep_command,
    run_verification,
    sweep_epr,
    sweep_epsilon,
    sweep_eta,
    sweep_fidelity,
    sweep_gamma,
    write_csv,
)


SMALL = SweepConfig(p_min=2, p_max=6, q_min=2, q_max=6)


def row_lookup(names, rows, **coords):
    for row in rows:
        if all(row[k] == v for k, v in coords.items()):
            return row
    raise KeyError(coords)


def test_epr_sweep_reference_points():
    config = SweepConfig()
    names, rows = sweep_epr(config)
    assert names == ["qubits_per_node", "nodes", "epr_unbounded", "epr_t7", "epr_t3"]
    corner = row_lookup(names, rows, qubits_per_node=20, nodes=20)
    assert corner["epr_unbounded"] == 190.0
    assert corner["epr_t7"] == 7.0
    assert corner["epr_t3"] == 3.0


def test_epr_sweep_two_node_edge():
    names, rows = sweep_epr(SweepConfig())
    for q_per in (2, 5, 20):
        row = row_lookup(names, rows, qubits_per_node=q_per, nodes=2)
        assert row["epr_t3"] == min(3, q_per) / 2


def test_eta_sweep_reference_points():
    names, rows = sweep_eta(SweepConfig())
    assert row_lookup(names, rows, qubits_per_node=2, nodes=19)["eta_unbounded"] == pytest.approx(36.0)
    assert row_lookup(names, rows, qubits_per_node=20, nodes=20)["eta_unbounded"] == pytest.approx(20.0)


def test_gamma_sweep_reference_points():
    names, rows = sweep_gamma(SweepConfig())
    assert names[-1] == "denominator_mode"
    row = row_lookup(names, rows, qubits_per_node=2, nodes=19)
    assert row["gamma_unbounded"] == pytest.approx(3.5)
    assert row["denominator_mode"] == "remote-cp"


def test_gamma_sweep_all_cp_mode():
    names, rows = sweep_gamma(SweepConfig(gamma_denominator="all-cp", p_min=2, p_max=4, q_min=2, q_max=4))
    for row in rows:
        assert row["denominator_mode"] == "all-cp"
        assert row["gamma_unbounded"] > 0


def test_epsilon_sweep_reference_points():
    names, rows = sweep_epsilon(SweepConfig())
    assert names == ["d_max", "Q", "t_min"]
    assert row_lookup(names, rows, d_max=2, Q=9)["t_min"] == 10
    assert row_lookup(names, rows, d_max=14, Q=14)["t_min"] == 183
    for row in rows:
        if row["d_max"] == 2 and row["Q"] == 2:
            assert row["t_min"] == 3


def test_epsilon_sweep_horizon_one_row_would_be_one():
    config = SweepConfig(horizon_min=1, horizon_max=1)
    names, rows = sweep_epsilon(config)
    assert all(row["t_min"] == 1 for row in rows)


def test_counting_sweeps_never_allocate_statevectors(monkeypatch):
    def forbidden(*args, **kwargs):
        raise AssertionError("counting sweep touched a statevector")

    monkeypatch.setattr(diqft.simulator.StateVector, "__init__", forbidden)
    config = SweepConfig(p_min=2, p_max=4, q_min=2, q_max=4)
    sweep_epr(config)
    sweep_eta(config)
    sweep_gamma(config)
    sweep_epsilon(config)


def test_fidelity_sweep_small_register():
    config = SweepConfig(fidelity_qubits=8, fidelity_t_min=2, fidelity_t_max=6,
                         fidelity_basis_states=6, fidelity_haar_states=2)
    names, rows = sweep_fidelity(config)
    assert names[0] == "threshold"
    assert [row["threshold"] for row in rows] == [2, 3, 4, 5, 6]
    for row in rows:
        assert row["simulated_infidelity_max"] <= row["operator_bound"] + 1e-12
        assert row["simulated_infidelity_mean"] <= row["simulated_infidelity_max"]


def test_fidelity_sweep_thresholds_from_epsilons():
    config = SweepConfig(fidelity_qubits=6, epsilons=(0.5, 0.25), fidelity_basis_states=2,
                         fidelity_haar_states=1)
    names, rows = sweep_fidelity(config)
    assert [row["threshold"] for row in rows] == [1, 2]


def test_fidelity_sweep_smallest_system():
    config = SweepConfig(fidelity_qubits=2, fidelity_t_min=1, fidelity_t_max=1,
                         fidelity_basis_states=4, fidelity_haar_states=1)
    names, rows = sweep_fidelity(config)
    assert len(rows) == 1
    # t = n-1 prunes nothing: zero error, zero analytic curves
    assert rows[0]["simulated_infidelity_max"] <= 1e-12
    assert rows[0]["phase_deficit"] == 0.0
    assert rows[0]["operator_bound"] == 0.0


def test_fidelity_sweep_refuses_above_cap():
    config = SweepConfig(fidelity_qubits=30)
    with pytest.raises(ConfigError, match="max-qubits"):
        sweep_fidelity(config)


def test_write_csv_formats(tmp_path):
    path = write_csv(tmp_path / "out.csv", ["a", "b"], [{"a": 1, "b": 0.5}, {"a": 2, "b": 1 / 3}])
    text = path.read_text()
    assert text == "a,b\n1,0.5\n2,0.3333333333333333\n"


def test_csv_outputs_byte_identical_across_runs(tmp_path):
    config = SweepConfig(p_min=2, p_max=5, q_min=2, q_max=5, out_dir=str(tmp_path / "one"))
    first = run_sweep_command("epr", config)
    second = run_sweep_command("epr", config.override(out_dir=str(tmp_path / "two")))
    assert first.read_bytes() == second.read_bytes()


def test_fidelity_csv_byte_identical_across_runs(tmp_path):
    config = SweepConfig(fidelity_qubits=6, fidelity_t_min=2, fidelity_t_max=4,
                         fidelity_basis_states=4, fidelity_haar_states=2, seed=5,
                         out_dir=str(tmp_path / "one"))
    first = run_sweep_command("fidelity", config)
    second = run_sweep_command("fidelity", config.override(out_dir=str(tmp_path / "two")))
    assert first.read_bytes() == second.read_bytes()


def test_verification_small_and_negative_control():
    config = SweepConfig(verify_max_register=4, verify_seeds=2, verify_inputs=4)
    report = run_verification(config)
    assert report.ok
    assert report.checks > 0
    corrupted = run_verification(config, corrupt=True)
    assert not corrupted.ok
    assert any(f.fidelity < 0.999 for f in corrupted.failures)


def test_verification_single_node_trivially_passes():
    config = SweepConfig(verify_max_register=3, verify_seeds=1, verify_inputs=2)
    report = run_verification(config)
    assert report.ok


# --- config plumbing ----------------------------------------------------------

def test_config_from_json_and_override(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"p_max": 6, "thresholds": ["exact", 5], "seed": 3}))
    config = SweepConfig.from_json(path)
    assert config.p_max == 6
    assert config.thresholds == ("exact", 5)
    overridden = config.override(seed=9, protocol=None)
    assert overridden.seed == 9
    assert overridden.protocol == "telegate"  # None means "keep"


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"nope": 1}))
    with pytest.raises(ConfigError):
        SweepConfig.from_json(path)


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        SweepConfig(protocol="smoke-signals")
    with pytest.raises(ConfigError):
        SweepConfig(thresholds=("exact", 0))
    with pytest.raises(ConfigError):
        SweepConfig(p_min=3, p_max=2)
    with pytest.raises(ConfigError):
        SweepConfig(gamma_denominator="per-node")


# --- CLI ----------------------------------------------------------------------

def test_cli_writes_csv_and_exits_zero(tmp_path, capsys):
    code = main(["epsilon", "--out-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "error_exponent.csv" in out
    assert (tmp_path / "error_exponent.csv").exists()


def test_cli_config_error_exit_code(tmp_path):
    # bad flag values exit 2 straight from the parser
    with pytest.raises(SystemExit) as exc:
        main(["epr", "--thresholds", "exact,nope", "--out-dir", str(tmp_path)])
    assert exc.value.code == 2
    # semantically bad configs exit 2 through the ConfigError path
    assert main(["fidelity", "--qubits", "30", "--out-dir", str(tmp_path)]) == 2


def test_cli_range_flags(tmp_path):
    code = main(["epr", "--p-range", "2:3", "--q-range", "2:3", "--out-dir", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "epr_per_node.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 4


def test_cli_verify_reduced(capsys):
    code = main(["verify", "--max-register", "3"])
    assert code == 0
    assert "all equivalence and bound checks passed" in capsys.readouterr().out

import json
from pathlib import Path

import pytest

from orirsim import cli
from orirsim.report import read_metrics

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv):
    return cli.main([str(a) for a in argv])


def test_fig1b_outputs(tmp_path):
    assert run(["fig", "fig1b", "--out", tmp_path]) == 0
    header = (tmp_path / "fig1b.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["t_us", "t_norm", "pop_g", "pop_e"]
    m = read_metrics(tmp_path / "fig1b_metrics.json")
    assert m["metrics"]["final_pop_e"] == pytest.approx(1.0, abs=1e-9)
    assert m["files"] == ["fig1b.csv"]


def test_figure_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["fig", "fig3", "--out", a])
    run(["fig", "fig3", "--out", b])
    for f in a.glob("*.csv"):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_json_format(tmp_path):
    assert run(["fig", "fig1a", "--out", tmp_path, "--format", "json"]) == 0
    data = json.loads((tmp_path / "fig1a.json").read_text())
    assert "pop_e_plus" in data


def test_scenario_method1_reproduces_figure(tmp_path):
    assert run(["run", CONFIGS / "method1.toml", "--out", tmp_path]) == 0
    m = read_metrics(tmp_path / "method1_metrics.json")["metrics"]
    assert m["nontarget_perp_T_de_us"] == pytest.approx(0.093, rel=0.05)
    assert m["target_T_de_us"] == pytest.approx(0.375, rel=0.05)


def test_scenario_geometry_dims(tmp_path):
    assert run(["run", "--config", CONFIGS / "geometry.toml", "--out", tmp_path]) == 0
    m = read_metrics(tmp_path / "geometry_metrics.json")["metrics"]
    assert (m["dims_x"], m["dims_y"], m["dims_z"]) == (3, 5, 3)


def test_json_config_accepted(tmp_path):
    assert run(["run", CONFIGS / "gate_step2.json", "--out", tmp_path]) == 0
    m = read_metrics(tmp_path / "gate_step2_metrics.json")["metrics"]
    assert m["leakage"] == pytest.approx(4.3e-6, rel=0.3)


def test_geometry_command(tmp_path):
    assert run(["geometry", "--lattice-constant-um", "6", "--out", tmp_path]) == 0
    m = read_metrics(tmp_path / "geometry_metrics.json")["metrics"]
    assert m["N"] == 1
    assert (tmp_path / "geometry.csv").exists()


def test_missing_parameter_is_validation_error(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('protocol = "method1"\n[params]\nomega_mhz = 3.0\n')
    assert run(["run", cfg, "--out", tmp_path]) == 1
    assert "delta_mhz" in capsys.readouterr().err


def test_parse_error_reports_location(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('protocol = "method1\n')
    assert run(["run", cfg]) == 1
    assert "line 1" in capsys.readouterr().err


def test_unknown_key_and_bad_value(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"protocol": "method2", "params": {"delta_mhz": 4, "omega_scale": 1.5}}))
    assert run(["run", cfg]) == 1
    assert "omega_scale" in capsys.readouterr().err
    cfg.write_text(json.dumps({"protocol": "method2", "params": {"delta_mhz": 4, "typo": 1}}))
    assert run(["run", cfg]) == 1
    assert "typo" in capsys.readouterr().err


def test_ratio_invariant_violation(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('protocol = "method1"\n[params]\ndelta_mhz = 4.0\nomega_over_delta = 0.5\n')
    assert run(["run", cfg]) == 1
    assert "Method I" in capsys.readouterr().err


def test_io_errors(tmp_path):
    assert run(["run", tmp_path / "missing.toml"]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["fig", "fig1b", "--out", blocker / "sub"]) == 3


def test_usage_error_exit_code():
    assert run(["fig", "nope"]) == 1
    assert run(["fig", "fig1b", "--threads", "0"]) == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise cli.IntegrationError("step size underflow")
    monkeypatch.setattr(cli, "build_figure", boom)
    assert run(["fig", "fig1b", "--out", tmp_path]) == 2


def test_output_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "g.toml"
    cfg.write_text(f'protocol = "geometry"\n[params]\nlattice_constant_um = 6.0\nwavelength_um = 0.78\n'
                   f'[output]\ndir = "{(tmp_path / "from_cfg").as_posix()}"\n')
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    assert run(["run", cfg]) == 0
    assert (tmp_path / "from_cfg" / "geometry_metrics.json").exists()
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "from_env"))
    assert run(["run", cfg]) == 0
    assert (tmp_path / "from_env" / "geometry_metrics.json").exists()
    assert run(["run", cfg, "--out", tmp_path / "from_flag"]) == 0
    assert (tmp_path / "from_flag" / "geometry_metrics.json").exists()


def test_tolerance_flag_recorded(tmp_path):
    assert run(["fig", "fig1b", "--out", tmp_path, "--tolerance", "1e-10"]) == 0
    integ = read_metrics(tmp_path / "fig1b_metrics.json")["integrator"]
    assert integ == {"rtol": 1e-10, "atol": 1e-12}
    assert run(["fig", "fig1b", "--out", tmp_path, "--tolerance", "-1"]) == 1


def test_selftest_passes_and_detects_mutation(capsys):
    assert run(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
    rows = cli.self_test(sign_flip=True)
    failed = [r[0] for r in rows if not r[3]]
    assert failed == ["method1 nontarget 1-F"]


def test_selftest_tightened_tolerance():
    assert all(r[3] for r in cli.self_test(rtol=1e-13))

import json

import pytest

from gfrf.cli import main

from test_experiments import tiny_estimation_config, tiny_transient_config


def _write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_verify_fast(capsys):
    assert main(["verify", "--fast", "--quiet"]) == 0
    assert main(["verify", "--fast"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out
    assert "checks passed" in out


def test_estimate_round_trip(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, tiny_estimation_config())
    out = tmp_path / "run"
    assert main(["estimate", "--config", cfg_path, "--out", str(out)]) == 0
    assert (out / "metrics.json").exists()
    assert "estimation 'tiny' done" in capsys.readouterr().out


def test_transient_round_trip(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, tiny_transient_config())
    out = tmp_path / "run"
    assert main(["transient", "--config", cfg_path, "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert "identity residual" in capsys.readouterr().out


def test_export_priors_round_trip(tmp_path):
    cfg_path = _write_config(tmp_path, tiny_estimation_config())
    out = tmp_path / "priors"
    assert main(["export-priors", "--config", cfg_path, "--out", str(out), "--quiet"]) == 0
    assert (out / "prior_time_m2.csv").exists()


def test_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert main(["estimate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "error:" in capsys.readouterr().err

    cfg = tiny_estimation_config()
    cfg["kind"] = "transient"
    cfg_path = _write_config(tmp_path, cfg, "mismatch.json")
    assert main(["estimate", "--config", cfg_path, "--out", str(tmp_path / "y")]) == 2


def test_missing_config_exits_2(tmp_path, capsys):
    missing = str(tmp_path / "does-not-exist.json")
    assert main(["estimate", "--config", missing, "--out", str(tmp_path / "z")]) == 2
    assert "error:" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = _write_config(tmp_path, tiny_estimation_config())
    base = tmp_path / "base"
    reseeded = tmp_path / "reseeded"
    assert main(["estimate", "--config", cfg_path, "--out", str(base), "--quiet"]) == 0
    assert main(
        ["estimate", "--config", cfg_path, "--out", str(reseeded), "--quiet", "--seed", "5"]
    ) == 0
    assert (base / "input_signal.csv").read_bytes() != (
        reseeded / "input_signal.csv"
    ).read_bytes()
    assert main(["estimate", "--config", cfg_path, "--out", str(tmp_path / "n"),
                 "--quiet", "--seed", "-1"]) == 2


def test_resource_failure_exits_3(tmp_path, capsys):
    cfg = tiny_estimation_config()
    cfg["signal"]["n_points"] = 300
    cfg["estimation"]["memories"] = {"2": 70}
    cfg_path = _write_config(tmp_path, cfg)
    assert main(["estimate", "--config", cfg_path, "--out", str(tmp_path / "big")]) == 3
    assert "numerical error:" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2


def test_cli_runs_are_byte_identical(tmp_path):
    cfg_path = _write_config(tmp_path, tiny_estimation_config())
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["estimate", "--config", cfg_path, "--out", str(a), "--quiet"]) == 0
    assert main(["estimate", "--config", cfg_path, "--out", str(b), "--quiet"]) == 0
    names_a = sorted(p.name for p in a.iterdir())
    assert names_a == sorted(p.name for p in b.iterdir())
    for name in names_a:
        assert (a / name).read_bytes() == (b / name).read_bytes()

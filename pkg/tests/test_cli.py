import json

import pytest

from potrecon import cli


def test_validate_subcommand(capsys):
    rc = cli.main(["validate", "--potential", "ho",
                   "--n-points", "1200", "--r-max", "30"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "[pass]" in out and "[FAIL]" not in out


def test_forward_subcommand(capsys):
    rc = cli.main(["forward", "--potential", "coulomb", "--ell-max", "1",
                   "--nr-max", "0", "--n-points", "1200", "--r-max", "60"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    levels = {(lv["n_r"], lv["ell"]): lv["value"] for lv in data["levels"]}
    assert levels[(0, 0)] == pytest.approx(-1.0, abs=1e-5)
    assert levels[(0, 1)] == pytest.approx(-0.25, abs=1e-5)


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["validate", "--potential", "ho", "--frobnicate"])
    assert exc.value.code == 2


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_parameter_family_mismatch_is_config_error(capsys):
    rc = cli.main(["validate", "--potential", "coulomb", "--omega", "2.0"])
    assert rc == 2
    assert "configuration error" in capsys.readouterr().err


def test_config_file_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_points": 1200, "r_max": 30.0}))
    rc = cli.main(["validate", "--potential", "ho", "--config", str(cfg)])
    assert rc == 0


def test_config_file_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"granularity": 3}))
    rc = cli.main(["validate", "--potential", "ho", "--config", str(cfg)])
    assert rc == 2
    assert "unknown config key" in capsys.readouterr().err


def test_bad_config_json_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    rc = cli.main(["validate", "--potential", "ho", "--config", str(cfg)])
    assert rc == 2


def test_pade_flag_parsing():
    assert cli._parse_pade("0,3,0,4") == [(0, 3), (0, 4)]
    with pytest.raises(cli.ConfigError):
        cli._parse_pade("0,3,1")

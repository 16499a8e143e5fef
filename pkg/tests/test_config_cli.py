import json

import pytest

from pncsim.cli import main
from pncsim.config import RunConfig, load_config, parse_config
from pncsim.errors import ConfigError


def test_parse_config_round_trip():
    cfg = parse_config("power.noise_power = -104\nexp.relay_separations = 10, 400\n"
                       "exp.snr_pairs = 7:7.5, 7:9  # comment\nexp.backhaul_fading = yes\n")
    assert cfg.power.noise_power == -104.0
    assert cfg.exp.relay_separations == (10.0, 400.0)
    assert cfg.exp.snr_pairs == ((7.0, 7.5), (7.0, 9.0))
    assert cfg.exp.backhaul_fading is True
    again = parse_config(cfg.dumps())
    assert again.as_dict() == cfg.as_dict()


def test_parse_config_errors():
    with pytest.raises(ConfigError):
        parse_config("nope.x = 1")
    with pytest.raises(ConfigError):
        parse_config("exp.unknown = 1")
    with pytest.raises(ConfigError):
        parse_config("exp.n_realizations = many")
    with pytest.raises(ConfigError):
        parse_config("exp.model = hexagonal")
    with pytest.raises(ConfigError):
        parse_config("power.p_a_tx = 10")
    with pytest.raises(ConfigError, match="missing.cfg"):
        load_config("/nonexistent/missing.cfg")


def test_cli_missing_config_exits_one(tmp_path, capsys):
    code = main(["compare", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)])
    assert code == 1
    assert "absent.cfg" in capsys.readouterr().err


def _files(d):
    return {p.name: p.read_bytes() for p in d.iterdir() if not p.name.startswith("manifest_")}


def test_cli_compare_is_byte_identical(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("exp.n_realizations = 3\nexp.n_users = 6\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["compare", "--config", str(cfg), "--seed", "7", "--out", str(out)]) == 0
        outs.append(out)
    a, b = _files(outs[0]), _files(outs[1])
    assert a == b and "compare_s10_7.csv" in a and "compare_s400_7.json" in a
    manifest = json.loads((outs[0] / "manifest_compare_7.json").read_text())
    assert manifest["status"] == "ok" and manifest["seed"] == 7
    assert set(manifest["outputs"]) == set(a)


def test_cli_rate_map(tmp_path, capsys):
    assert main(["rate-map", "--user", "600", "0", "--separation", "50", "--out", str(tmp_path)]) == 0
    assert "picked relay" in capsys.readouterr().out


def test_cli_verify_fails_at_defaults(tmp_path, capsys):
    code = main(["verify", "--draws", "20", "--instances", "3", "--points", "10", "--out", str(tmp_path)])
    assert code == 2
    out = capsys.readouterr().out
    assert "overall: FAIL" in out and "log-concavity" in out
    assert (tmp_path / "verify_report_0.txt").exists()


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "pncsim" in capsys.readouterr().out


def test_default_config_matches_default_profile():
    cfg = RunConfig()
    assert (cfg.power.p_a_tx, cfg.power.p_r_tx, cfg.power.p_b_tx) == (46.0, 30.0, 23.0)
    assert (cfg.prop.path_loss_exp, cfg.prop.cell_radius, cfg.prop.ref_dist) == (3.7, 1000.0, 10.0)
    assert cfg.exp.step == 0.01

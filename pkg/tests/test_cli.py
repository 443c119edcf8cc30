import json

import numpy as np
import pytest

from mpibeam import cli, decoder

FAST = {
    "error-sweep": ["--set", "amp_lo_db=-12", "--set", "amp_step_db=1", "--set", "n_phase=256",
                    "--set", "k_list=8,9"],
    "contours": [],
    "efficiency": ["--set", "n_theta=32"],
    "beam": ["--set", "steer_step_deg=5", "--set", "grid_step_deg=1"],
    "modulate": ["--set", "n_samples=20000"],
    "vectors": ["--set", "count=128"],
}


def run(cmd, out, *extra):
    return cli.main([cmd, "--out", str(out), *FAST[cmd], *extra])


@pytest.mark.parametrize("cmd", cli.COMMANDS)
def test_command_is_deterministic(cmd, tmp_path, capsys):
    assert run(cmd, tmp_path / "a", "--seed", "3") == 0
    assert run(cmd, tmp_path / "b", "--seed", "3") == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_error_sweep_outputs(tmp_path, capsys):
    assert run("error-sweep", tmp_path) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"phase_error_vs_M.csv", "amplitude_error_vs_M.csv",
                     "phase_error_vs_k.csv", "amplitude_error_vs_k.csv"}
    head = (tmp_path / "phase_error_vs_k.csv").read_text().splitlines()[0]
    assert head == "M,k,amp_dbfs,rms_phase_err_deg,rms_amp_err_db"


def test_threads_do_not_change_output(tmp_path, capsys):
    assert run("error-sweep", tmp_path / "a") == 0
    assert run("error-sweep", tmp_path / "b", "--threads", "4") == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_empty_m_list_is_usage_error(tmp_path, capsys):
    assert cli.main(["error-sweep", "--out", str(tmp_path), "--set", "m_list="]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage"


def test_unknown_key_and_section(tmp_path, capsys):
    assert cli.main(["beam", "--out", str(tmp_path), "--set", "colour=red"]) == 2
    cfg = tmp_path / "c.ini"
    cfg.write_text("[bogus]\nx = 1\n")
    assert cli.main(["beam", "--out", str(tmp_path), "--config", str(cfg)]) == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\nseed = 11\n\n[vectors]\ncount = 10\nk = 9\n")
    assert cli.main(["vectors", "--out", str(tmp_path), "--config", str(cfg)]) == 0
    lines = (tmp_path / "vectors.txt").read_text().splitlines()
    assert lines[0].startswith("# M=16 k=9")
    assert len(lines) == 12
    inp, _ = decoder.parse_vector(lines[2])
    assert inp.ctrl


def test_missing_table(tmp_path, capsys):
    assert cli.main(["beam", "--out", str(tmp_path), "--set", "measured_table=/nope.csv"]) == 2


def test_modulate_metrics(tmp_path, capsys):
    assert run("modulate", tmp_path) == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["evm_pct"] < 1.0 and m["aclr_lo_dbc"] < -45
    from mpibeam import waveform
    x, fs = waveform.read_iq(tmp_path / "realized.iq")
    assert fs == 120e6 and x.size == 20000


def test_efficiency_summary(tmp_path, capsys):
    assert run("efficiency", tmp_path) == 0
    s = json.loads((tmp_path / "scpa_summary.json").read_text())
    assert s["q_nw"] == pytest.approx(3.0)
    assert s["eta_identity_max_rel_err"] <= 1e-12
    eta = np.loadtxt(tmp_path / "efficiency.csv", delimiter=",", skiprows=1)[:, 2]
    assert eta[0] > eta[-1]


def test_bad_quant_mode_flag(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["beam", "--out", str(tmp_path), "--quant-mode", "magic"])
    assert exc.value.code == 2


def test_threads_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MPIBEAM_THREADS", "0")
    assert run("contours", tmp_path) == 2

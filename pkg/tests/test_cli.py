import json
import math

import pytest

from vacuumbell import cli
from vacuumbell.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_state_eq3(capsys, request):
    code, out, _ = run(capsys, "state", "--which", "eq3")
    assert code == 0
    golden = (request.path.parent / "golden" / "eq3.dump").read_text()
    assert out == golden
    lines = out.splitlines()
    vals = {ln.split("\t")[0]: float(ln.split("\t")[1]) for ln in lines}
    assert vals == pytest.approx({"(1,0)": 1 / math.sqrt(2), "(0,1)": -1 / math.sqrt(2)}, abs=1e-15)


def test_state_eq4_zero_phase_equals_eq3(capsys):
    _, a, _ = run(capsys, "state", "--which", "eq3")
    _, b, _ = run(capsys, "state", "--which", "eq4", "--omega-tau-c", "0", "--omega-tau-d", "0")
    assert a == b


def test_state_eq9_vacuum_reference(capsys):
    code, out, _ = run(capsys, "state", "--which", "eq9", "--alpha2", "0", "--json")
    data = json.loads(out)
    assert code == 0 and data["modes"] == ["cV", "cH", "dV", "dH"]
    amps = {tuple(o): re for o, re, im in data["amplitudes"]}
    # photon on aV -> cV, photon on aH -> dH
    assert amps == pytest.approx({(1, 0, 0, 0): 1 / math.sqrt(2), (0, 0, 0, 1): -1 / math.sqrt(2)}, abs=1e-15)


def test_curves_fig3(capsys, tmp_path):
    code, out, _ = run(capsys, "curves", "fig3", "--out-dir", str(tmp_path))
    rows = (tmp_path / "fig3.csv").read_text().splitlines()
    assert code == 0 and len(rows) == 61
    for r in rows[1:]:
        _, lo, up = map(float, r.split(","))
        assert 0 <= lo <= 0.5 and 0 <= up <= 0.5


def test_curves_fig4_two_excitations(capsys, tmp_path):
    code, out, _ = run(capsys, "curves", "fig4", "--alpha2", "3", "--alpha2", "10", "--out-dir", str(tmp_path),
                       "--json")
    data = json.loads(out)
    assert code == 0 and [d["alpha2"] for d in data["fig4"]] == [3.0, 10.0]
    assert (tmp_path / "fig4_alpha2_3.csv").exists() and (tmp_path / "fig4_alpha2_10.csv").exists()


def test_curves_fig4_large_excitation_near_ideal(capsys, tmp_path):
    run(capsys, "curves", "fig4", "--alpha2", "1e9", "--out-dir", str(tmp_path))
    rows = (tmp_path / "fig4_alpha2_1e+09.csv").read_text().splitlines()[1:]
    assert max(abs(float(j) - float(i)) for _, j, i in (r.split(",") for r in rows)) < 1e-4


def test_curves_are_byte_identical_on_rerun(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    run(capsys, "curves", "all", "--out-dir", str(a))
    run(capsys, "curves", "all", "--out-dir", str(b))
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_chsh_defaults(capsys):
    code, out, _ = run(capsys, "chsh")
    assert code == 0
    assert "S (E = -cos) = 2.828427125" in out and "LHV bound = 2" in out


def test_chsh_deterministic_and_reports_violation(capsys):
    _, a, _ = run(capsys, "chsh", "--trials", "20000", "--seed", "7")
    _, b, _ = run(capsys, "chsh", "--trials", "20000", "--seed", "7")
    assert a == b and a.rstrip().endswith("\nviolation")


def test_chsh_large_drift_no_violation(capsys):
    code, out, _ = run(capsys, "chsh", "--trials", "20000", "--sigma-step", "2", "--resync-period", "1", "--json")
    data = json.loads(out)
    assert code == 0 and data["S_mc"] < 2 and data["violation"] is False
    _, text, _ = run(capsys, "chsh", "--trials", "20000", "--sigma-step", "2", "--resync-period", "1")
    assert text.rstrip().endswith("no violation")


def test_stations_outputs(capsys, tmp_path):
    log, summ = tmp_path / "t.csv", tmp_path / "s.json"
    code, out, _ = run(capsys, "stations", "--mode", "relative-phase", "--alpha2", "3", "--trials", "500",
                       "--log", str(log), "--out", str(summ), "--seed", "2")
    assert code == 0
    assert log.read_text().splitlines()[0] == "trial,setting_c,setting_d,drift_c,drift_d,outcome_c,outcome_d,n_c,n_d"
    assert len(log.read_text().splitlines()) == 501
    data = json.loads(summ.read_text())
    assert data["trials"] == 500 and data["seed"] == 2


def test_compile_prints_unitary(capsys, request):
    code, out, _ = run(capsys, "compile", "--n", "2", "--phi", "0.5", "--alpha2", "1", "--m", "1")
    assert code == 0
    assert out == (request.path.parent / "golden" / "compile_n2_m1.dump").read_text()


def test_config_file_layering(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "alpha2": 2.0, "stations": {"trials": 300, "mode": "relative-phase"}}))
    args = cli.resolve(["stations", "--config", str(cfg), "--alpha2", "4"])
    assert (args.seed, args.trials, args.mode, args.alpha2) == (5, 300, "relative-phase", 4.0)
    assert args.resync_period == cli.DEFAULTS["resync_period"]


def test_invalid_config_aggregates_errors(capsys):
    code, _, err = run(capsys, "stations", "--trials", "0", "--sigma-step", "-1", "--resync-period", "0")
    assert code == 1
    assert "trials" in err and "sigma-step" in err and "resync-period" in err


def test_missing_command_and_bad_flags(capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "state")[0] == 1
    assert run(capsys, "compile", "--n", "2", "--m", "3")[0] == 1
    assert run(capsys, "curves", "fig3", "--out-dir", "/nonexistent/dir")[0] == 1


def test_unreadable_config(capsys, tmp_path):
    code, _, err = run(capsys, "chsh", "--config", str(tmp_path / "missing.json"))
    assert code == 1 and "cannot read config" in err


def test_verify_quick_and_canary(capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--json")
    data = json.loads(out)
    assert code == 0 and data["passed"]
    code, out, _ = run(capsys, "verify", "--quick", "--only", "normalization", "--inject-eq12-sign-bug")
    assert code == 3 and "[FAIL] normalization" in out

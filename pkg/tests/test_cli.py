import json
from fractions import Fraction

import pytest

from logisticlab.cli import canonical, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def doc(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_orbit_output_and_digest(capsys):
    d = doc(capsys, "orbit", "--a", "3.5", "--x0", "0.5", "--n", "3")
    assert d["schema"] == "logisticlab-output/1" and d["command"] == "orbit"
    assert d["result"]["rows"][2]["lo"] == "0.826934814453125"
    import hashlib
    assert d["digest"] == hashlib.sha256(canonical(d).encode()).hexdigest()
    assert "seconds" in d["sidecar"]


def test_global_flags_on_either_side(capsys):
    a = doc(capsys, "--bits", "40", "sink-find", "--period", "2", "--window", "3,4")
    b = doc(capsys, "sink-find", "--period", "2", "--window", "3,4", "--bits", "40")
    assert a["result"] == b["result"] and a["digest"] == b["digest"]


def test_environment_presets(capsys, monkeypatch):
    monkeypatch.setenv("LOGISTICLAB_BITS", "32")
    d = doc(capsys, "tip-c")
    assert d["config"]["bits"] == 32
    d = doc(capsys, "tip-c", "--bits", "48")
    assert d["config"]["bits"] == 48


def test_non_dyadic_window_is_accepted(capsys):
    d = doc(capsys, "sink-find", "--period", "3", "--window", "3.8,3.9", "--bits", "40")
    lo, hi = Fraction(d["result"]["lo"]), Fraction(d["result"]["hi"])
    assert Fraction(38, 10) < lo <= hi < Fraction(39, 10)


def test_w1_on_measure_files(capsys, tmp_path):
    (tmp_path / "a.json").write_text('{"atoms":[{"x":"0","w":"1"}]}')
    (tmp_path / "b.json").write_text('{"atoms":[{"x":"1/2","w":"1/2"},{"x":"1","w":"1/2"}]}')
    d = doc(capsys, "w1", str(tmp_path / "a.json"), str(tmp_path / "b.json"))
    assert Fraction(d["result"]["w1"]) == Fraction(3, 4)


def test_measure_output_feeds_w1(capsys, tmp_path):
    out = tmp_path / "m.json"
    code, stdout, _ = run(capsys, "measure", "birkhoff", "--a", "3.5", "--n", "400", "--out", str(out))
    assert code == 0 and stdout == ""
    d = doc(capsys, "w1", str(out), str(out))
    assert Fraction(d["result"]["w1"]) == 0


def test_csv_output(capsys):
    code, out, _ = run(capsys, "orbit", "--a", "3.5", "--x0", "0.5", "--n", "2", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "k,lo,hi,width" and len(lines) == 3


@pytest.mark.parametrize("argv,code", [
    (["orbit", "--a", "5", "--x0", "0.5", "--n", "3"], 2),
    (["orbit", "--a", "abc", "--x0", "0.5", "--n", "3"], 2),
    (["sink-find", "--period", "1", "--window", "3,3.1"], 4),
    (["orbit", "--a", "3.5", "--x0", "2", "--n", "3"], 2),
    (["sink-find", "--period", "1", "--window", "3"], 2),
    (["tau", "enumerate", "--index", "0"], 2),
])
def test_error_exit_codes(capsys, argv, code):
    got, out, err = run(capsys, *argv)
    assert got == code and out == "" and err.startswith("error:")


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2


def test_tau_round_trip(capsys):
    d = doc(capsys, "tau", "separating", "--a", "3.9", "--target", "3")
    e = doc(capsys, "tau", "enumerate", "--index", d["result"]["index"])
    from logisticlab.measures import TestFunction
    a, b = (TestFunction.from_json(x["result"]["tau"]) for x in (d, e))
    assert a.canonical() == b.canonical()


def test_verify_exit_codes(capsys, tmp_path, game_run):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(game_run["transcript"].to_json()))
    code, out, _ = run(capsys, "verify", str(good), "--shallow")
    assert code == 0 and json.loads(out)["result"]["ok"]
    bad = game_run["transcript"].to_json()
    bad["rounds"][0]["q"] = "1/2"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, out, _ = run(capsys, "verify", str(path), "--shallow")
    assert code == 5
    rep = json.loads(out)["result"]
    assert rep["rounds"][0]["verdict"] == "NOT-FOOLED"

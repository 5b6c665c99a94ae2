import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.signal import find_peaks

from semistable import build_truncation, cf, default_grid, ecf_values, truncation_bias, validate_params
from semistable.cli import main, parse_grid, parse_times
from semistable.errors import RangeError


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def test_parse_grid():
    assert np.allclose(parse_grid("0.05:20:40"), np.geomspace(0.05, 20, 40))
    assert np.allclose(parse_grid("-1:1:5:lin"), [-1, -0.5, 0, 0.5, 1])
    for bad in ("1:2", "0:1:5:log", "1:2:3:cubic", "a:b:c", "2:1:5"):
        with pytest.raises(RangeError):
            parse_grid(bad)


def test_parse_times():
    assert parse_times("0:10:100").size == 101
    with pytest.raises(RangeError):
        parse_times("0:1")


def test_verify_cf(tmp_path):
    code, out = run(tmp_path, "v", "verify-cf")
    assert code == 0
    report = json.loads((out / "verify_cf.json").read_text())
    assert report["passed"]
    with open(out / "verify_cf.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "psi_closed", "psi_quadrature", "residual"]
    assert len(rows) == 201
    assert max(float(r[3]) for r in rows[1:]) < 1e-8


def test_verify_cf_extra_epoch(tmp_path):
    code, _ = run(tmp_path, "stable", "verify-cf", "--eps-pert", "0", "--extra-epoch", "3")
    assert code == 0
    code, out = run(tmp_path, "mod", "verify-cf", "--extra-epoch", str(math.e))
    assert code == 1
    report = json.loads((out / "verify_cf.json").read_text())
    failed = [c["check_name"] for c in report["checks"] if not c["passed"]]
    assert failed == ["extra_epoch_residual"]


def test_reproducible_outputs(tmp_path):
    for argv in (["simulate", "ar1", "--n", "300"], ["simulate", "path", "--times", "0:10:100"], ["plotdata", "--n", "500"]):
        _, first = run(tmp_path, "a", *argv, "--seed", "17")
        _, second = run(tmp_path, "b", *argv, "--seed", "17")
        assert read_all(first) == read_all(second)
        _, third = run(tmp_path, "c", *argv, "--seed", "18")
        data = [n for n in read_all(first) if n.endswith(".csv")]
        assert any(read_all(first)[n] != read_all(third)[n] for n in data)


def test_path_rows(tmp_path):
    code, out = run(tmp_path, "p", "simulate", "path", "--times", "0:10:100")
    assert code == 0
    lines = (out / "path.csv").read_text().split("\n")
    assert lines[0] == "time,value"
    assert len([x for x in lines[1:] if x]) == 101
    assert lines[1] == "0,0"


def test_sidecar_rerun(tmp_path):
    code, first = run(tmp_path, "a", "simulate", "innovation", "--n", "50", "--seed", "4", "--alpha", "1.3")
    assert code == 0
    meta = json.loads((first / "innovation.meta.json").read_text())
    assert meta["config"]["alpha"] == 1.3 and meta["config"]["seed"] == 4
    assert set(meta) >= {"git_describe", "package_version", "scheme", "outputs"}
    again = tmp_path / "again"
    assert main(["simulate", "innovation", "--config", str(first / "innovation.meta.json"), "--out", str(again)]) == 0
    assert (first / "innovation.csv").read_bytes() == (again / "innovation.csv").read_bytes()


def test_flat_config_and_env(tmp_path, monkeypatch):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"alpha": 0.8, "b": 0.3, "n": 20}))
    monkeypatch.setenv("SEMISTABLE_OUT", str(tmp_path / "env"))
    assert main(["simulate", "ar1", "--config", str(config)]) == 0
    meta = json.loads((tmp_path / "env" / "ar1.meta.json").read_text())
    assert meta["config"]["b"] == 0.3
    assert len((tmp_path / "env" / "ar1.csv").read_text().splitlines()) == 22


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-cf", "--alpha", "2.5"],
        ["verify-cf", "--b", "1.0"],
        ["verify-cf", "--eps-pert", "1.0"],
        ["simulate", "path", "--times", "1:2:3"],
        ["simulate", "ar1", "--delta", "2"],
        ["simulate", "ar1", "--n", "-3"],
        ["check", "ssd", "--grid", "0:1:3"],
        ["check", "ssd", "--threads", "0"],
        ["verify-cf", "--config", "/nonexistent/file.json"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path / "o")]) == 2


def test_unknown_config_key(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"alpha": 1.2, "sigma": 3}))
    assert main(["verify-cf", "--config", str(config), "--out", str(tmp_path / "o")]) == 2


def test_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "walk"])
    assert info.value.code == 2


def test_check_threads_do_not_change_results(tmp_path):
    argv = ["check", "all", "--n", "2000", "--seed", "8"]
    code1, one = run(tmp_path, "t1", *argv, "--threads", "1")
    code3, three = run(tmp_path, "t3", *argv, "--threads", "3")
    assert code1 == code3
    assert read_all(one) == read_all(three)
    for name in ("check_stationarity.json", "check_selfsimilar.json", "check_ssd.json", "check_all.json"):
        assert name in read_all(one)


def test_check_ssd(tmp_path):
    code, out = run(tmp_path, "s", "check", "ssd")
    assert code == 0
    assert json.loads((out / "check_ssd.json").read_text())["statistic"] < 1e-10


def test_plotdata_modulation(tmp_path):
    code, out = run(tmp_path, "pd", "plotdata", "--n", "500")
    assert code == 0
    with open(out / "modulation.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    log_u = np.array([float(r["log_u"]) for r in rows])
    trace = np.array([float(r["modulation"]) for r in rows])
    assert np.all(np.isfinite(trace))
    peaks, _ = find_peaks(trace)
    spacing = np.mean(np.diff(log_u[peaks]))
    assert spacing == pytest.approx(math.log(2.0), rel=0.01)
    hist = list(csv.DictReader(open(out / "histogram.csv", newline="")))
    assert len(hist) == 60


def test_plotdata_grid_with_zero(tmp_path):
    code, out = run(tmp_path, "pz", "plotdata", "--n", "200", "--grid=-2:2:5:lin")
    assert code == 0
    rows = (out / "modulation.csv").read_text().splitlines()[1:]
    assert len(rows) == 2
    cf_rows = (out / "cf.csv").read_text().splitlines()
    assert cf_rows[3] == "0,1"


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "semistable", "simulate", "innovation", "--n", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert (tmp_path / "innovation.csv").exists()


def test_bad_b_names_field(tmp_path, capsys):
    assert main(["verify-cf", "--b", "1.2", "--out", str(tmp_path)]) == 2
    assert "b:" in capsys.readouterr().err


def test_check_all_seed_7(tmp_path):
    code, out = run(tmp_path, "all", "check", "all", "--seed", "7")
    assert code == 0
    assert json.loads((out / "check_all.json").read_text())["passed"]


def test_selfsimilar_negative_control(tmp_path):
    code, out = run(tmp_path, "neg", "check", "selfsimilar", "--eps-pert", "0.9", "--epoch-override", "2.71828")
    assert code == 1
    assert not json.loads((out / "check_selfsimilar.json").read_text())["passed"]


def test_stable_modulation_constant(tmp_path):
    code, out = run(tmp_path, "st", "plotdata", "--eps-pert", "0", "--n", "100")
    assert code == 0
    with open(out / "modulation.csv", newline="") as fh:
        trace = np.array([float(r["modulation"]) for r in csv.DictReader(fh)])
    assert np.ptp(trace) <= 1e-6 * np.max(np.abs(trace))


def test_innovation_csv_fidelity(tmp_path):
    n = 100_000
    code, out = run(tmp_path, "inn", "simulate", "innovation", "--n", str(n), "--seed", "3")
    assert code == 0
    with open(out / "innovation.csv", newline="") as fh:
        x = np.array([float(r["value"]) for r in csv.DictReader(fh)])
    p = validate_params(1.0, 0.5, 0.5)
    grid = default_grid()
    err = np.max(np.abs(ecf_values(x, grid) - cf(p.b * grid, p.a - 1.0, p)))
    bias = truncation_bias(build_truncation(p), p, grid, t=p.a - 1.0, scale=p.b)
    assert err <= 4 / math.sqrt(n) + bias

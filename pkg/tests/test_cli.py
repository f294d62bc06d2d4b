import json

import pytest

from beamdiv import SimConfig
from beamdiv.cli import CSV_HEADER, _sci, emit_csv, emit_report, main, parse_config
from beamdiv.engine import DiversityFit, SerPoint, SweepResult

FAST_CONF = """\
# small setup for fast tests
m = 16
q = 4
j = 16
np = 8
max_trials = 512
target_errors = 50
snr_db_list = 0,10
seed = 3
"""


def _write(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_config_empty_gives_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, ""))
    assert cfg == SimConfig()


def test_parse_config_values_and_comments(tmp_path):
    text = "scheme = alamouti_dc\nsnr_db_list = 0,5,10\n\n# comment\nk = 4  # inline\n"
    cfg = parse_config(_write(tmp_path, text))
    assert cfg.scheme == "alamouti_dc"
    assert cfg.snr_db_list == (0.0, 5.0, 10.0)
    assert cfg.k_blocks == 4


def test_parse_config_rejections(tmp_path):
    with pytest.raises(ValueError, match="'k'"):
        parse_config(_write(tmp_path, "k = 9\n"))
    with pytest.raises(ValueError, match="'beams'"):
        parse_config(_write(tmp_path, "beams = 8\n"))
    with pytest.raises(ValueError, match="'m'"):
        parse_config(_write(tmp_path, "m = sixty\n"))
    with pytest.raises(ValueError, match="'m'"):
        parse_config(_write(tmp_path, "m = 0\n"))
    with pytest.raises(ValueError, match="key = value"):
        parse_config(_write(tmp_path, "just some words\n"))
    with pytest.raises(ValueError, match="duplicate"):
        parse_config(_write(tmp_path, "q = 4\nq = 8\n"))
    with pytest.raises(ValueError, match="'snr_db_list'"):
        parse_config(_write(tmp_path, "snr_db_list = 0,abc\n"))


def test_sci_format():
    assert _sci(0.0) == "0.000000e0"
    assert _sci(1.5e-5) == "1.500000e-5"
    assert _sci(0.3824157714843) == "3.824158e-1"
    assert _sci(2.0) == "2.000000e0"
    assert _sci(1.0e12) == "1.000000e12"


def _result(scheme="ssd_dc", order=None, target_met=True):
    points = tuple(
        SerPoint(scheme=scheme, snr_db=snr, trials=1000, symbols=128000,
                 errors=err, ser=err / 128000, ser_stderr=err / 1280000,
                 target_met=target_met)
        for snr, err in ((15.0, 4096), (20.0, 1024), (25.0, 256))
    )
    fit = None if order is None else DiversityFit(order, (15.0, 25.0), 3)
    return SweepResult(scheme=scheme, points=points, fit=fit)


def test_emit_csv_layout_and_round_trip(tmp_path):
    path = str(tmp_path / "out.csv")
    emit_csv([_result()], path)
    with open(path, encoding="ascii") as fh:
        content = fh.read()
    assert content.endswith("\n") and not content.endswith("\n\n")
    lines = content.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    for line in lines[1:]:
        scheme, snr, trials, symbols, errors, ser, stderr = line.split(",")
        assert scheme == "ssd_dc"
        assert repr(float(snr)) == snr
        assert str(int(trials)) == trials
        assert str(int(symbols)) == symbols
        assert str(int(errors)) == errors
        assert _sci(float(ser)) == ser
        assert _sci(float(stderr)) == stderr


def test_emit_csv_zero_errors_row(tmp_path):
    point = SerPoint(scheme="nodiv_dc", snr_db=30.0, trials=16, symbols=2048,
                     errors=0, ser=0.0, ser_stderr=0.0, target_met=False)
    path = str(tmp_path / "zero.csv")
    emit_csv([SweepResult("nodiv_dc", (point,), None)], path)
    with open(path, encoding="ascii") as fh:
        assert fh.readlines()[1].rstrip("\n") == "nodiv_dc,30.0,16,2048,0,0.000000e0,0.000000e0"


def test_emit_report_fit_line():
    text = emit_report([_result(order=2.0)])
    assert "diversity order ~ 2.00 (window 15-25 dB, 3 points)" in text


def test_emit_report_fit_unavailable():
    text = emit_report([_result()])
    assert "diversity order fit unavailable" in text


def test_emit_report_flags_unmet_targets():
    text = emit_report([_result(target_met=False)])
    assert "*" in text
    assert "error target not met" in text


def test_emit_report_scheme_comparison():
    good = _result("ssd_dc", order=2.0)
    bad = SweepResult("nodiv_dc", tuple(
        SerPoint("nodiv_dc", p.snr_db, p.trials, p.symbols, p.errors * 8,
                 p.ser * 8, p.ser_stderr, True) for p in good.points), None)
    text = emit_report([good, bad])
    line = [ln for ln in text.splitlines() if ln.startswith("at 25")][0]
    assert "ssd_dc" in line and "nodiv_dc" in line
    assert line.index("ssd_dc") < line.index("nodiv_dc")


def test_simulate_end_to_end(tmp_path, capsys):
    conf = _write(tmp_path, FAST_CONF)
    out = str(tmp_path / "res.csv")
    assert main(["simulate", "--config", conf, "--out", out]) == 0
    with open(out, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert all(line.startswith("ssd_dc,") for line in lines[1:])
    with open(out + ".manifest.json", encoding="ascii") as fh:
        manifest = json.load(fh)
    assert manifest["seed"] == 3
    assert manifest["config"]["m"] == 16
    assert manifest["config"]["spacing"] == 0.45
    assert manifest["schemes"] == ["ssd_dc"]
    report = capsys.readouterr().out
    assert "scheme ssd_dc" in report


def test_simulate_scheme_all(tmp_path):
    conf = _write(tmp_path, FAST_CONF)
    out = str(tmp_path / "all.csv")
    assert main(["simulate", "--config", conf, "--out", out, "--scheme", "all",
                 "--snr", "5"]) == 0
    with open(out, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    schemes = [line.split(",")[0] for line in lines[1:]]
    assert schemes == ["ssd_dc", "alamouti_dc", "nodiv_dc"]


def test_simulate_overrides(tmp_path):
    conf = _write(tmp_path, FAST_CONF)
    out = str(tmp_path / "o.csv")
    assert main(["simulate", "--config", conf, "--out", out, "--seed", "11",
                 "--scheme", "nodiv_dc", "--snr", "7.5"]) == 0
    with open(out, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("nodiv_dc,7.5,")
    with open(out + ".manifest.json", encoding="ascii") as fh:
        assert json.load(fh)["seed"] == 11


def test_simulate_identical_runs_byte_identical(tmp_path):
    conf = _write(tmp_path, FAST_CONF)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", "--config", conf, "--out", out1]) == 0
    assert main(["simulate", "--config", conf, "--out", out2]) == 0
    with open(out1, "rb") as fh:
        first = fh.read()
    with open(out2, "rb") as fh:
        second = fh.read()
    assert first == second


def test_simulate_error_paths(tmp_path, capsys):
    conf = _write(tmp_path, FAST_CONF)
    assert main(["simulate", "--config", str(tmp_path / "missing.conf")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["simulate", "--config", conf, "--scheme", "bogus"]) == 1
    assert "bogus" in capsys.readouterr().err
    bad = _write(tmp_path, "k = 9\n", name="bad.conf")
    assert main(["simulate", "--config", bad]) == 1
    assert "'k'" in capsys.readouterr().err


def test_bench_runs(capsys):
    assert main(["bench", "--trials", "64", "--scheme", "nodiv_dc"]) == 0
    out = capsys.readouterr().out
    assert "us/trial" in out
    assert "numba" in out and "numpy" in out

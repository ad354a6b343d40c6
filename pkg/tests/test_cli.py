import csv
import json

import numpy as np
import pytest

from mirrorstate.cli import build_parser, fmt, main, parse_range
from mirrorstate.config import dump_params, table1

FAST = {
    "steady": ["--points", "11"],
    "modes": ["--delta-range", "0.05:0.5:4"],
    "spectra": ["--freq-range", "1:3000:20"],
    "filter": ["--target", "dp", "--freq-range", "1:3000:20"],
    "covariance": ["--delta", "0.2"],
    "sweep": ["--delta-range", "0.1:0.3:3"],
    "nscan": ["--n-range", "1:5:3"],
    "wigner": ["--filter", "one-mode", "--points", "32"],
    "negativity": ["--delta-range", "0.1:0.2:2"],
    "preset": ["fig11", "--points", "3"],
}


def _run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["--out-dir", str(out), *extra, name, *FAST[name]])
    return code, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("name", sorted(FAST))
def test_subcommand_runs(tmp_path, name):
    code, out = _run(tmp_path, name)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == name
    assert manifest["outputs"]
    for f in manifest["outputs"]:
        path = out / f
        assert path.stat().st_size > 0
        if path.suffix == ".svg":
            assert path.read_text().lstrip().startswith("<?xml")


@pytest.mark.parametrize("name", ["covariance", "nscan", "wigner"])
def test_repeat_runs_byte_identical(tmp_path, name):
    _, a = _run(tmp_path / "a", name)
    _, b = _run(tmp_path / "b", name)
    files = sorted(f.name for f in a.iterdir() if f.name != "manifest.json")
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_csv_precision(tmp_path):
    _, out = _run(tmp_path, "sweep")
    rows = _rows(next(out.glob("*.csv")))
    for cell in rows[1][1:]:
        mantissa = cell.lower().split("e")[0].lstrip("-").replace(".", "").lstrip("0")
        assert len(mantissa) <= 12
    assert fmt(1 / 3) == "0.333333333333"


def test_fig8_columns(tmp_path):
    code = main(["--out-dir", str(tmp_path), "preset", "fig8", "--points", "2"])
    assert code == 0
    header = _rows(tmp_path / "fig8.csv")[0]
    assert header == ["delta", "purity_two_mode", "purity_one_mode", "purity_one_mode_418G"]


def test_nscan_prints_argmax(tmp_path, capsys):
    _run(tmp_path, "nscan")
    assert "argmax N = " in capsys.readouterr().out


def test_quadrature_backend_agrees(tmp_path):
    _, a = _run(tmp_path / "r", "covariance")
    _, b = _run(tmp_path / "q", "covariance", "--backend", "quadrature")
    ra, rb = _rows(next(a.glob("*.csv"))), _rows(next(b.glob("*.csv")))
    assert ra[0] == rb[0]
    x = np.array([[float(c) for c in r[1:]] for r in ra[1:]])
    y = np.array([[float(c) for c in r[1:]] for r in rb[1:]])
    assert np.allclose(x, y, rtol=1e-6, atol=1e-9)


def test_eta_override_recorded(tmp_path):
    _, out = _run(tmp_path, "covariance", "--eta", "0.8")
    assert json.loads((out / "manifest.json").read_text())["eta"] == 0.8


def test_config_file(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(dump_params(table1()))
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path / "o"), "steady",
                 "--points", "5"]) == 0


def test_missing_config_reports_error(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.cfg"), "--out-dir", str(tmp_path),
                 "steady"]) == 1
    assert "error" in capsys.readouterr().err


def test_unstable_detuning_reports_error(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "covariance", "--delta", "-0.3"]) == 1
    assert "unstable" in capsys.readouterr().err


def test_invalid_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_invalid_choice_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["filter", "--target", "dz"])
    assert exc.value.code == 2


@pytest.mark.parametrize("text, expected", [
    ("0:1:3", [0.0, 0.5, 1.0]),
    ("1:100:100", list(np.arange(1.0, 101.0))),
])
def test_parse_range(text, expected):
    assert np.allclose(parse_range(text), expected)


@pytest.mark.parametrize("text", ["1:2", "a:b:3", "0:1:0"])
def test_parse_range_rejects(text):
    with pytest.raises(Exception):
        parse_range(text)


def test_parser_globals():
    a = build_parser().parse_args(["--backend", "quadrature", "--eta", "0.7", "steady"])
    assert a.backend == "quadrature" and a.eta == 0.7 and a.out_dir == "out"

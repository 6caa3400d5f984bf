import json

import mpmath
import pytest
from flint import arb

from maasscert.cli import main
from maasscert.forms import shipped_example_path


def ball_from_strs(lo, hi):
    a, b = arb(lo), arb(hi)
    return (a + b) / 2 + arb(0, ((b - a) / 2).abs_upper())

SMALL = ["--taylor-degree", "10", "--samples", "8", "--M0", "20", "--quiet"]


@pytest.fixture
def raw():
    return json.loads(shipped_example_path().read_text())


def _write(tmp_path, data, name="form.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def test_certify_small(tmp_path, capsys):
    out = tmp_path / "cert.json"
    with pytest.warns(Warning):
        code = main(["certify", "--output", str(out)] + SMALL)
    assert code == 0
    cert = json.loads(out.read_text())
    assert cert["m"] == 2 and cert["parameters"]["taylor_degree"] == 10
    assert "certified: |lambda~ - lambda| <=" in capsys.readouterr().out


def test_bad_json_exit_1(tmp_path):
    assert main(["certify", "--input", str(_write(tmp_path, "{not json"))] + SMALL) == 1


def test_missing_file_exit_1(tmp_path):
    assert main(["certify", "--input", str(tmp_path / "nope.json")] + SMALL) == 1


def test_unit_not_modulus_one_exit_2(tmp_path, raw, capsys):
    raw["cusp_units"][0][1:] = ["0.5", "0"]
    assert main(["certify", "--input", str(_write(tmp_path, raw))] + SMALL) == 2
    assert "|a(0,1)|=1" in capsys.readouterr().err


def test_odd_character_exit_2(tmp_path, raw):
    raw["character"]["index"] = 2
    assert main(["certify", "--input", str(_write(tmp_path, raw))] + SMALL) == 2


def test_uncertifiable_m_exit_3(capsys):
    assert main(["certify", "--m", "41"] + SMALL) == 3
    assert "not certified" in capsys.readouterr().err


def test_bad_options_exit_1():
    assert main(["certify", "--taylor-degree", "1"]) == 1
    assert main(["certify", "--bogus"]) == 1


def test_domain(capsys):
    assert main(["domain", "--level", "5"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["index"] == 6 and len(data["representatives"]) == 6
    assert main(["domain", "--level", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["representatives"] == [{"matrix": [[1, 0], [0, 1]], "cusp": "oo"}]


def test_whittaker(capsys):
    assert main(["whittaker", "--r", "0", "--y", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    mpmath.mp.dps = 30
    want = arb(mpmath.nstr(mpmath.besselk(0, 1), 28), "1e-27")
    assert ball_from_strs(*data["W"]).overlaps(want)
    assert main(["whittaker", "--r", "0", "--y", "-1"]) == 1


def test_precision_env(monkeypatch, capsys):
    monkeypatch.setenv("MAASS_CERT_PRECISION", "200")
    assert main(["whittaker", "--r", "9.5", "--y", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["precision"] == 200
    monkeypatch.setenv("MAASS_CERT_PRECISION", "lots")
    assert main(["whittaker", "--r", "9.5", "--y", "2"]) == 1

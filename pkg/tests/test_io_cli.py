import json

import numpy as np
import pytest

from moyalkit import families as fam
from moyalkit.cli import main
from moyalkit.errors import ValidationError
from moyalkit.gridfn import GridSpec, sample
from moyalkit.io import read_gsgf, write_csv, write_gsgf


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def test_gsgf_round_trip(tmp_path):
    spec = GridSpec.make(2, 32, (6.0, 4.0))
    f = sample(fam.gaussian([0.2, 0.1], np.eye(2), 1 + 2j), spec)
    path = tmp_path / "f.gsgf"
    write_gsgf(path, f)
    g = read_gsgf(path)
    assert g.spec == spec
    np.testing.assert_array_equal(g.samples, f.samples)
    raw = path.read_bytes()
    assert raw[:4] == b"GSGF"
    assert len(raw) == 4 + 4 + 4 + 2 * 4 + 2 * 8 + 16 * 32 * 32


def test_gsgf_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.gsgf"
    bad.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValidationError):
        read_gsgf(bad)
    spec = GridSpec.make(1, 32, 4.0)
    good = tmp_path / "short.gsgf"
    write_gsgf(good, sample(fam.gaussian([0.0], [[1.0]]), spec))
    good.write_bytes(good.read_bytes()[:-16])
    with pytest.raises(ValidationError):
        read_gsgf(good)


def test_csv_layout(tmp_path):
    spec = GridSpec.make(1, 32, 4.0)
    f = sample(fam.gaussian([0.0], [[1.0]]), spec)
    path = tmp_path / "f.csv"
    write_csv(path, f)
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "x_1,re,im"
    np.testing.assert_allclose(table[:, 0], spec.axis(0))
    np.testing.assert_allclose(table[:, 1], np.exp(-spec.axis(0) ** 2), rtol=1e-15)


def test_cli_weight_at_zero(capsys, tmp_path):
    code, out = run(capsys, "weight", "--gevrey", 1, "--t", 0, "--out", tmp_path)
    assert code == 0
    rep = json.loads(out)
    assert rep["weights"][0]["value"] == 1.0
    assert json.loads((tmp_path / "weight.json").read_text()) == rep


def test_cli_usage_error(capsys):
    assert main(["weight", "--t"]) == 1
    assert main(["no-such-command"]) == 1
    capsys.readouterr()


def test_cli_validation_error(capsys, tmp_path):
    code, _ = run(capsys, "seq", "--gevrey", -1, "--out", tmp_path)
    assert code == 2
    err = json.loads((tmp_path / "seq.error.json").read_text())
    assert err["error"]["kind"] == "validation"


def test_cli_guard_error(capsys, tmp_path):
    code, _ = run(capsys, "sample", "--family", "chirp", "--grid", "64x64", "--L", 6, "--out", tmp_path)
    assert code == 0
    f = tmp_path / "sample.gsgf"
    code, _ = run(capsys, "star", f, f, "--out", tmp_path)
    assert code == 3
    err = json.loads((tmp_path / "star.error.json").read_text())["error"]
    assert err["kind"] == "guard"
    assert err["quantity"] > err["threshold"]


def test_cli_star_hbar_zero_is_pointwise(capsys, tmp_path):
    fam_a = json.dumps(fam.gaussian([0.3, 0], np.eye(2)).to_dict())
    fam_b = json.dumps(fam.gaussian([0, -0.4], [[1.0, 0.2], [0.2, 0.5]]).to_dict())
    run(capsys, "sample", "--family", fam_a, "--grid", "64x64", "--L", 8, "--name", "a.gsgf", "--out", tmp_path)
    run(capsys, "sample", "--family", fam_b, "--grid", "64x64", "--L", 8, "--name", "b.gsgf", "--out", tmp_path)
    code, out = run(capsys, "star", tmp_path / "a.gsgf", tmp_path / "b.gsgf", "--hbar", 0,
                    "--name", "ab.gsgf", "--out", tmp_path)
    assert code == 0
    a, b, ab = (read_gsgf(tmp_path / n).samples for n in ("a.gsgf", "b.gsgf", "ab.gsgf"))
    np.testing.assert_array_equal(ab, a * b)


def test_cli_quantize_oscillator(capsys, tmp_path):
    code, out = run(capsys, "quantize", "--symbol-family", "oscillator", "--basis", 12, "--out", tmp_path)
    assert code == 0
    rep = json.loads(out)["operator"]
    np.testing.assert_allclose(rep["eigenvalues_re"][:11], np.arange(11) + 0.5, atol=1e-4)
    M = np.loadtxt(tmp_path / "operator.csv", delimiter=",")
    assert M.shape == (12, 24)
    np.testing.assert_allclose(M[:11, 0:22:2].diagonal(), np.arange(11) + 0.5, atol=1e-4)


def test_cli_bad_S(capsys, tmp_path):
    code, _ = run(capsys, "quantize", "--symbol-family", "oscillator", "--S", "0,1,0", "--out", tmp_path)
    assert code == 2


def test_cli_verify_deterministic(capsys, tmp_path):
    code1, out1 = run(capsys, "verify", "--suite", "starprod", "--seed", 3, "--out", tmp_path / "a")
    code2, out2 = run(capsys, "verify", "--suite", "starprod", "--seed", 3, "--out", tmp_path / "b")
    assert code1 == code2 == 0
    assert out1 == out2
    rep = json.loads(out1)
    assert rep["seed"] == 3 and rep["report"]["passed"]


def test_cli_verify_failing_check(capsys, tmp_path):
    # an impossible tolerance turns a passing check into exit code 4
    code, out = run(capsys, "verify", "--suite", "gridfn", "--tol", "roundtrip=1e-30", "--out", tmp_path)
    assert code == 4
    assert not json.loads(out)["report"]["passed"]


def test_cli_verify_unknown_tolerance(capsys, tmp_path):
    code, _ = run(capsys, "verify", "--suite", "gridfn", "--tol", "bogus=1", "--out", tmp_path)
    assert code == 2


def test_cli_star_methods_agree(capsys, tmp_path):
    g = json.dumps(fam.gaussian([0.3, -0.2], [[1.0, 0.2], [0.2, 0.8]]).to_dict())
    run(capsys, "sample", "--family", g, "--grid", "64x64", "--L", 8, "--name", "g.gsgf", "--out", tmp_path)
    f = tmp_path / "sample.gsgf"
    run(capsys, "sample", "--family", "gaussian", "--grid", "64x64", "--L", 8, "--out", tmp_path)
    out = {}
    for method, extra in (("moyal", []), ("starS", []), ("symplectic", ["--side", "right"])):
        code, _ = run(capsys, "star", f, tmp_path / "g.gsgf", "--method", method, *extra,
                      "--name", f"{method}.gsgf", "--out", tmp_path)
        assert code == 0
        out[method] = read_gsgf(tmp_path / f"{method}.gsgf").samples
    scale = np.max(np.abs(out["moyal"]))
    assert np.max(np.abs(out["starS"] - out["moyal"])) <= 1e-12 * scale
    assert np.max(np.abs(out["symplectic"] - out["moyal"])) <= 1e-8 * scale


def test_cli_multiplier_writes_profiles(capsys, tmp_path):
    code, out = run(capsys, "multiplier", "--h-family", "polynomial", "--f-family", "gaussian",
                    "--box-sweep", 8, "--out", tmp_path)
    assert code == 0
    rep = json.loads(out)
    assert rep["experiment"]["success"]
    assert sorted(rep["profiles"]) == ["profile_L8_fh.csv", "profile_L8_hf.csv"]
    table = np.loadtxt(tmp_path / "profile_L8_hf.csv", delimiter=",", skiprows=1)
    assert table.shape[1] == 4


def test_cli_verify_bad_sequence(capsys, tmp_path):
    code, _ = run(capsys, "verify", "--suite", "gridfn", "--a", "gevrey:x", "--out", tmp_path)
    assert code == 2

import json
import subprocess
import sys

import numpy as np
import pytest

from ffinverse.cli import main
from ffinverse.quantum import spectra_from_csv


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    path = d / "s.csv"
    assert run("synth", "--coeffs", "1,0:0.3;0,1:0.2;2,0:0.05", "--hbar", "4e-3,2e-3",
               "--out", path) == 0
    return path


def test_spectrum_row_count(tmp_path):
    out = tmp_path / "spec.csv"
    assert run("spectrum", "--j1", 10, "--j2", 10, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "hbar,lambda1,lambda2"
    assert len(lines) == 1 + 21 * 21


def test_spectrum_to_stdout(capsys):
    assert run("spectrum", "--j1", 1, "--j2", 0.5) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 3 * 2


def test_csv_round_trip(tmp_path):
    out = tmp_path / "spec.csv"
    run("spectrum", "--j1", 5, "--j2", 5, "--out", out)
    from ffinverse.quantum import joint_spectrum_coupled
    ref = joint_spectrum_coupled(5, 5, 0.5)
    (back,) = spectra_from_csv(out.read_text())
    assert back.hbar == ref.hbar
    a = ref.points[np.lexsort(ref.points.T)]
    b = back.points[np.lexsort(back.points.T)]
    assert np.abs(a - b).max() <= 1e-15


def test_output_is_deterministic(tmp_path, synth_csv):
    for cmd in (["spectrum", "--j1", 4, "--j2", 4], ["synth", "--hbar", "0.01", "--noise", "0.5",
                                                      "--seed", 3], ["plot", "--input", synth_csv]):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(*cmd, "--out", a) == 0 and run(*cmd, "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()


def test_seed_changes_noise(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("synth", "--hbar", "0.01", "--noise", "0.5", "--seed", 1, "--out", a)
    run("synth", "--hbar", "0.01", "--noise", "0.5", "--seed", 2, "--out", b)
    assert a.read_bytes() != b.read_bytes()


def test_compare_with_itself(tmp_path, synth_csv):
    out = tmp_path / "cmp.json"
    assert run("compare", "--a", synth_csv, "--b", synth_csv, "--order", 2, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"].startswith("Match") and rep["B"] == [[1, 0], [0, 1]]


def test_compare_mismatch_exit_code(tmp_path, synth_csv):
    other = tmp_path / "o.csv"
    run("synth", "--coeffs", "1,0:0.3;0,1:0.2;2,0:0.09", "--hbar", "4e-3,2e-3", "--out", other)
    assert run("compare", "--a", synth_csv, "--b", other, "--order", 2,
               "--out", tmp_path / "c.json") == 1
    assert json.loads((tmp_path / "c.json").read_text())["verdict"] == "Mismatch(degree=2)"


def test_invariant_spectral_and_monodromy(tmp_path, synth_csv):
    out = tmp_path / "inv.json"
    assert run("invariant-spectral", "--input", synth_csv, "--order", 2, "--out", out) == 0
    rep = json.loads(out.read_text())
    coeffs = {(c["i"], c["j"]): c["value"] for c in rep["coeffs"]}
    assert coeffs[(2, 0)] == pytest.approx(0.05, abs=0.005)
    out = tmp_path / "mono.json"
    assert run("monodromy", "--input", synth_csv, "--out", out) == 0
    assert json.loads(out.read_text())["conjugacy"] == "Unipotent(1)"


def test_unknown_flag_writes_nothing(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run("spectrum", "--j1", 2, "--j2", 2, "--bogus", 1, "--out", out) == 2
    assert not out.exists() and list(tmp_path.iterdir()) == []
    assert "bogus" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["spectrum", "--j1", 2], ["spectrum", "--j1", 2.3, "--j2", 1],
                                  ["synth", "--hbar", "-1"], ["synth", "--coeffs", "1:2"],
                                  ["plot", "--input", "/nonexistent.csv"], []])
def test_usage_errors(argv, tmp_path):
    assert run(*argv) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# spins\nj1 = 3\nj2 = 2\n")
    out = tmp_path / "s.csv"
    assert run("spectrum", "--config", cfg, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 1 + 7 * 5
    # flags override the file
    assert run("spectrum", "--config", cfg, "--j2", 1, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 1 + 7 * 3


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("j1 = 3\nj2 = 2\ncolour = red\n")
    assert run("spectrum", "--config", cfg) == 2
    cfg.write_text("j1 3\n")
    assert run("spectrum", "--config", cfg) == 2


def test_numerical_failure_exit_code(tmp_path):
    pts = np.random.default_rng(0).uniform(-0.3, 0.3, (4000, 2))
    f = tmp_path / "noise.csv"
    f.write_text("hbar,lambda1,lambda2\n" + "".join(f"0.001,{a:.17g},{b:.17g}\n" for a, b in pts))
    assert run("monodromy", "--input", f, "--out", tmp_path / "m.json") == 3
    assert not (tmp_path / "m.json").exists()


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "ffinverse", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "invariant-classical" in r.stdout

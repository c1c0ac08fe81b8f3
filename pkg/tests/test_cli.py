import json
import subprocess
import sys

import numpy as np
import pytest

from besovkit import __version__
from besovkit.cli import config_hash, main, parse_phi, parse_weight, ConfigError
from besovkit.grid import SampledFunction, make_grid
from besovkit.io import read_function, write_function

EQUIV_TOML = """
seed = 3
[grid]
R = 4.0
N = 4096
[phi]
family = "power"
s = 0.7
[norm]
p = 2.0
q = 2.0
variants = ["B_freq", "Q0", "Q4"]
peetre_r = 0.5
[family]
dilations = [2, 3]
extension = 1
[[family.probe]]
kind = "gaussian"
[[family.probe]]
kind = "random_bandlimited"
"""


@pytest.fixture
def gauss_file(tmp_path):
    g = make_grid(1, 4.0, 1024)
    path = tmp_path / "g.bkt"
    write_function(path, SampledFunction.from_callable(g, lambda x: np.exp(-4 * x ** 2)))
    return path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_weights_power_half(capsys):
    assert main(["weights", "--kind", "power", "--alpha", "0.5", "--p", "2"]) == 0
    out = _json(capsys)
    assert out["result"]["r_w"] == pytest.approx(1.5, abs=0.05)
    assert out["toolkit_version"] == __version__
    assert out["config_hash"] == config_hash(out["config"])


def test_norm_of_zero_function(tmp_path, capsys):
    path = tmp_path / "z.bkt"
    write_function(path, SampledFunction.zeros(make_grid(1, 4.0, 256)))
    assert main(["norm", "--input", str(path), "--variant", "F_freq", "--weight", "power:0.5"]) == 0
    assert _json(capsys)["result"]["total"] == 0.0


def test_lp_decompose_csv(gauss_file, capsys):
    assert main(["lp-decompose", "--input", str(gauss_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "j,norm" and lines[1].startswith("S0,")


def test_maximal_writes_function(gauss_file, tmp_path, capsys):
    out = tmp_path / "m.bkt"
    assert main(["maximal", "--input", str(gauss_file), "--z", "1", "--output-function", str(out)]) == 0
    assert _json(capsys)["result"]["ratio"] >= 1.0
    assert read_function(out).grid == make_grid(1, 4.0, 1024)


def test_exit_codes(gauss_file, tmp_path, capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["norm", "--input", str(tmp_path / "missing.bkt")]) == 2
    assert main(["norm", "--input", str(gauss_file), "--phi", "cubic"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid\n")
    assert main(["equiv", "--config", str(bad)]) == 2
    assert main(["counterexample", "--theta", "0.7"]) == 2
    # support outside the inner half-box is a computation failure
    g = make_grid(1, 4.0, 256)
    off = tmp_path / "off.bkt"
    write_function(off, SampledFunction.from_callable(g, lambda x: np.exp(-(x - 3) ** 2)))
    assert main(["norm", "--input", str(off), "--variant", "B_diff_local"]) == 1
    capsys.readouterr()


def test_equiv_outputs_are_deterministic(tmp_path):
    cfg = tmp_path / "equiv.toml"
    cfg.write_text(EQUIV_TOML)
    for name in ("a", "b"):
        assert main(["equiv", "--config", str(cfg), "--outdir", str(tmp_path / name)]) == 0
    for fname in ("report.json", "config.json", "ratios.csv"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["config"]["seed"] == 3
    assert rep["result"]["admissible"] is True


def test_lemmas_command(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(EQUIV_TOML)
    assert main(["lemmas", "--config", str(cfg), "--outdir", str(tmp_path / "out")]) == 0
    rows = (tmp_path / "out" / "ratios.csv").read_text().splitlines()
    assert rows[0] == "link,constant,extended_constant,passed"
    assert all(r.endswith("True") for r in rows[1:])


def test_compact_specs():
    assert parse_phi("power_log:0.5,1") == {"family": "power_log", "s": 0.5, "b": 1.0}
    assert parse_weight("power:0.3") == {"kind": "power", "alpha": 0.3}
    assert parse_weight(None) == {"kind": "constant"}
    with pytest.raises(ConfigError):
        parse_weight("power:x")


def test_selftest_console_script():
    res = subprocess.run([sys.executable, "-m", "besovkit.cli", "selftest"], capture_output=True, text=True)
    assert res.returncode == 0
    out = json.loads(res.stdout)
    assert out["failed"] == 0 and len(out["checks"]) >= 9

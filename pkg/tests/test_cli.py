import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from tclchaos.cli import ConfigError, load_config, main
from tclchaos.stats import poisson_levels


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


def spectrum_values(path):
    return np.array([float(x) for x in path.read_text().split() if not x.startswith("#") and x[0] in "-0123456789"])


def test_spectrum_example(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nmodel = lattice\nL = 1\nS = 2\nn_ex = 1\nlam = 0.5\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    vals = spectrum_values(tmp_path / "o" / "spectrum.csv")
    assert np.allclose(np.sort(vals), [-0.5, 0.5], atol=1e-12)


def test_invalid_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nmodel = lattice\nbogus_knob = 3\n")
    rc = main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc != 0
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["status"] == "error" and "bogus_knob" in err["message"]
    assert "bogus_knob" in capsys.readouterr().err


def test_unknown_section(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrm]\nL = 1\n")
    with pytest.raises(ConfigError):
        load_config("spectrum", cfg)


def test_bad_value(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nL = three\n")
    with pytest.raises(ConfigError):
        load_config("spectrum", cfg)


def test_env_override(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nL = 1\nS = 2\n")
    c = load_config("spectrum", cfg, {"TCLCHAOS_S": "4", "TCLCHAOS_BLOCK_SIZE": "7"})
    assert c["S"] == 4 and c["L"] == 1 and "block_size" not in c


def poisson_input(tmp_path, n=20000):
    from tclchaos.spectra import Spectrum

    p = tmp_path / "poisson.csv"
    Spectrum(poisson_levels(n, 5), {"ensemble": "poisson"}).to_csv(p)
    return p


def test_stats_on_poisson(tmp_path):
    p = poisson_input(tmp_path)
    cfg = write_cfg(tmp_path / "c.ini", f"[stats]\ninput = {p}\n")
    assert main(["stats", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "stats.json").read_text())
    assert rep["mean_r"] == pytest.approx(0.386, abs=0.01)
    assert rep["b"] < 0.1


def test_manifest_hashes(tmp_path):
    p = poisson_input(tmp_path, 3000)
    cfg = write_cfg(tmp_path / "c.ini", f"[sff]\ninput = {p}\nn_times = 50\n")
    out = tmp_path / "o"
    assert main(["sff", "--config", cfg, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["config"]["n_times"] == 50
    assert set(man["outputs"]) == {"sff.csv"}
    assert man["outputs"]["sff.csv"] == hashlib.sha256((out / "sff.csv").read_bytes()).hexdigest()
    assert man["inputs"][str(p)] == hashlib.sha256(p.read_bytes()).hexdigest()
    assert {"numpy", "scipy"} <= set(man["versions"])
    header = (out / "sff.csv").read_text().splitlines()[0]
    assert header.startswith("t,K_measured")


def test_byte_identical_reruns(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nmodel = goe\ndim = 120\nn_blocks = 2\n")
    for d in ("a", "b"):
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / d), "--seed", "3"]) == 0
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert a != (tmp_path / "c" / "spectrum.csv").read_bytes()


def test_unfold_stats_plot_chain(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nmodel = goe\ndim = 300\nn_blocks = 3\ntrim_low = 0\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    spec = tmp_path / "s" / "spectrum.csv"
    cfg2 = write_cfg(tmp_path / "d.ini", f"[stats]\ninput = {spec}\nunfold = false\n"
                     f"[plot]\nspectrum = {spec}\nstats = {tmp_path / 't' / 'stats.json'}\n")
    assert main(["stats", "--config", cfg2, "--out", str(tmp_path / "t")]) == 0
    assert main(["plot", "--config", cfg2, "--out", str(tmp_path / "p")]) == 0
    for name in ("dos.svg", "spacing.svg", "ratio.svg"):
        assert (tmp_path / "p" / name).read_text().lstrip().startswith("<?xml")


def test_plot_missing_input(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", f"[plot]\nsff = {tmp_path / 'nope.csv'}\n")
    rc = main(["plot", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 1
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["error_type"] == "FileNotFoundError"


def test_console_script(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[spectrum]\nmodel = poisson\ndim = 10\n")
    r = subprocess.run([sys.executable, "-m", "tclchaos.cli", "spectrum", "--config", cfg,
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert len(spectrum_values(tmp_path / "o" / "spectrum.csv")) == 10

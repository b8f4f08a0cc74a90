"""CLI artifacts: determinism, formats, exit codes, config handling."""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ringnlse.cli import RunConfig, main, parse_config_file, run


def run_cli(args):
    return main(args)


def test_bubble_scan_command(tmp_path):
    out = tmp_path / "bub"
    code = run_cli(["bubble-scan", "--j", "1", "--g-lo", "-3.3", "--g-hi", "-3.0",
                    "--out", str(out)])
    assert code == 0
    report = json.loads((out / "bubble.json").read_text())
    assert abs(report["g_star"] + math.pi) < 1e-3
    assert abs(report["E_star"] + 0.5) < 1e-6


def test_ring_limit_command(tmp_path):
    out = tmp_path / "ring"
    code = run_cli(["ring-limit", "--j-max", "3", "--g-lo", "-14.0", "--g-hi", "6.0",
                    "--out", str(out)])
    assert code == 0
    lines = (out / "emergence.csv").read_text().splitlines()
    assert lines[0] == "j,g_emerge,E_emerge"
    rows = [line.split(",") for line in lines[1:]]
    assert float(rows[0][1]) == pytest.approx(-math.pi)
    assert float(rows[1][1]) == pytest.approx(-4 * math.pi)
    assert float(rows[2][2]) == pytest.approx(-4.5)
    assert (out / "curves.csv").exists()


def test_linear_command_and_determinism(tmp_path):
    args = ["linear", "--cond", "delta", "--t-min", "0.5", "--t-max", "1.5",
            "--t-n", "3", "--v-min", "-1", "--v-max", "1", "--v-n", "3",
            "--levels", "2"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()
    assert (out1 / "linear_level1.svg").read_bytes() == (out2 / "linear_level1.svg").read_bytes()


def test_linear_delta_prime_command(tmp_path):
    out = tmp_path / "lp"
    code = run_cli(["linear", "--cond", "delta-prime", "--t-min", "0.6", "--t-max", "1.4",
                    "--t-n", "3", "--v-min", "-1", "--v-max", "1", "--v-n", "3",
                    "--levels", "2", "--out", str(out)])
    assert code == 0
    body = (out / "spectrum.csv").read_text()
    assert body.startswith("level,t,v,E,k,x0,A,shape,converged")


@pytest.fixture(scope="module")
def small_sweep_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweepout")
    code = run_cli(["sweep", "--g", "-5", "--cond", "delta",
                    "--t-min", "0.5", "--t-max", "1.5", "--t-n", "3",
                    "--v-min", "-1", "--v-max", "1", "--v-n", "3",
                    "--levels", "2", "--out", str(out),
                    "--profile", "1.0,0.5"])
    assert code in (0, 2)
    return out


def test_sweep_artifacts(small_sweep_dir):
    out = small_sweep_dir
    assert (out / "spectrum.csv").exists()
    assert (out / "surface.json").exists()
    assert (out / "spectrum_level1.svg").exists()
    header = (out / "spectrum.csv").read_text().splitlines()[0]
    assert header == "level,t,v,E,m_re,m_im,x0,kind,res_norm,res_bc1,res_bc2,converged,sheet"
    data = json.loads((out / "surface.json").read_text())
    assert data["g"] == -5.0
    assert data["meta"]["version"]
    assert any(p.name.startswith("profiles_") for p in out.iterdir())


def test_sweep_csv_rows_reverify(small_sweep_dir):
    """Every converged CSV row re-checks under an independent recomputation."""
    import cmath
    from ringnlse import (DeltaBC, RingConfig, SolutionSpec, nlse_residual,
                          norm_squared, trace)
    from ringnlse.boundary import residual_delta
    rows = (small_sweep_dir / "spectrum.csv").read_text().splitlines()[1:]
    checked = 0
    for row in rows:
        f = row.split(",")
        if f[11] != "1" or f[7] in ("const", "lin", ""):
            continue
        t, v, E = float(f[1]), float(f[2]), float(f[3])
        m = complex(float(f[4]), float(f[5]))
        if m.imag == 0:
            m = m.real
        spec = SolutionSpec(f[7].rstrip("*"), E, m, float(f[6]), RingConfig(-5.0))
        assert nlse_residual(spec, np.linspace(0, 2 * math.pi, 51)) < 1e-6
        assert abs(norm_squared(spec) - 1) < 1e-8
        r1, r2 = residual_delta(DeltaBC(t, v), trace(spec))
        assert max(abs(r1), abs(r2)) < 1e-9
        checked += 1
    assert checked >= 10


def test_map_and_classify_commands(small_sweep_dir, tmp_path):
    src = small_sweep_dir / "surface.json"
    out = tmp_path / "mapped"
    code = run_cli(["map", "--source", str(src), "--out", str(out),
                    "--t-min", "-2", "--t-max", "2", "--t-n", "21",
                    "--v-min", "-10", "--v-max", "10", "--v-n", "21"])
    assert code == 0
    lines = (out / "mapped.csv").read_text().splitlines()
    assert lines[0].startswith("tp,vp,E")
    assert len(lines) > 10
    meta = json.loads((out / "mapped_meta.json").read_text())
    assert meta["points"] == len(lines) - 1

    out2 = tmp_path / "regions"
    code = run_cli(["classify", "--source", str(src), "--level", "1", "--out", str(out2)])
    assert code == 0
    body = (out2 / "regions.csv").read_text().splitlines()
    assert body[0] == "t,v,kind"
    assert (out2 / "regions.svg").exists()


def test_config_file_roundtrip(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "# comment line\n"
        "g = -5.0\n"
        "levels = 3\n"
        "t_n = 7\n"
        "out = fromfile\n"
    )
    parsed = parse_config_file(str(cfgfile))
    assert parsed["g"] == "-5.0"
    cfg = RunConfig(command="bubble-scan", g_lo=-3.3, g_hi=-3.0,
                    out=str(tmp_path / "x"))
    cfg.validate()


def test_invalid_config_rejected():
    cfg = RunConfig(command="sweep", levels=0)
    with pytest.raises(ValueError):
        cfg.validate()
    cfg = RunConfig(command="sweep", newton_tol=-1.0)
    with pytest.raises(ValueError):
        cfg.validate()


def test_fatal_exit_code(tmp_path):
    code = run_cli(["bubble-scan", "--j", "1", "--g-lo", "-1.0", "--g-hi", "-0.5",
                    "--out", str(tmp_path / "nf")])
    assert code == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ringnlse.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep" in proc.stdout

import json
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fvheat.cli import OUTPUTS, ConfigError, RunConfig, main, resolve_config
from fvheat.fileio import read_coeffs, write_coeffs
from fvheat.model_domains import IntervalDomain, interval_basis

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"
UPDATE = os.environ.get("FVHEAT_UPDATE_GOLDEN") == "1"

# name -> argv (paths relative to tests/data, which is the working directory)
GOLDEN_CASES = {
    "forward_seeded": ["forward", "--N", "8", "--steps", "4", "--seed", "5"],
    "backward_fixture": ["backward", "--N", "8", "--steps", "4", "--seed", "1"],
    "backward_from_files": ["backward", "--uT", "inputs/uT.csv", "--f", "inputs/f.csv", "--steps", "4"],
    "backward_overflow_zero": ["backward", "--uT", "inputs/overflow_uT.csv", "--policy", "zero", "--steps", "4"],
    "backward_overflow_saturate": ["backward", "--uT", "inputs/overflow_uT.csv", "--policy", "saturate", "--steps", "4"],
    "compat_decay2": ["compat", "--N", "16", "--decay", "2"],
    "instability": ["instability"],
    "weyl_interval": ["weyl", "--lam", "10,100,1000"],
    "logconv_jordan": ["logconv", "--samples", "512", "--steps", "8"],
    "roundtrip": ["roundtrip", "--cases", "5"],
    "matrix_file": ["matrix", "--matrix", "inputs/jordan3.csv", "--steps", "4"],
    "matrix_advdiff": ["matrix", "--fixture", "advdiff", "--n", "6", "--bc-right", "neumann", "--steps", "4"],
}


def run(argv, out, cwd=DATA):
    """In-process run with ``cwd`` as working directory."""
    old = Path.cwd()
    os.chdir(cwd)
    try:
        return main(list(argv) + ["--out", str(out)])
    finally:
        os.chdir(old)


def output_bytes(command, out):
    return {name: (Path(out) / name).read_bytes() for name in OUTPUTS[command]}


# ---------------------------------------------------------------- golden files


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(name, tmp_path):
    argv = GOLDEN_CASES[name]
    assert run(argv, tmp_path) == 0
    got = output_bytes(argv[0], tmp_path)
    ref_dir = GOLDEN / name
    if UPDATE or not ref_dir.exists():
        ref_dir.mkdir(parents=True, exist_ok=True)
        for fname, blob in got.items():
            (ref_dir / fname).write_bytes(blob)
        pytest.skip(f"golden files pinned in {ref_dir}")
    for fname, blob in got.items():
        assert blob == (ref_dir / fname).read_bytes(), f"{name}/{fname} differs from golden"


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_double_run_identical(name, tmp_path):
    argv = GOLDEN_CASES[name]
    assert run(argv, tmp_path / "a") == 0
    assert run(argv, tmp_path / "b") == 0
    assert output_bytes(argv[0], tmp_path / "a") == output_bytes(argv[0], tmp_path / "b")


def test_output_location_not_embedded(tmp_path):
    argv = GOLDEN_CASES["instability"]
    run(argv, tmp_path / "one")
    run(argv, tmp_path / "deeper" / "two")
    assert output_bytes("instability", tmp_path / "one") == output_bytes("instability", tmp_path / "deeper" / "two")


def test_console_script(tmp_path):
    exe = shutil.which("fvheat")
    cmd = [exe] if exe else [sys.executable, "-m", "fvheat"]
    proc = subprocess.run(cmd + ["instability", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "report.json").exists()


# ---------------------------------------------------------------- named examples


def test_instability_values(tmp_path):
    assert run(["instability"], tmp_path) == 0
    rows = json.loads((tmp_path / "report.json").read_text())["rows"]
    amps = [r["amplification"] for r in rows]
    np.testing.assert_allclose(amps, [math.e, math.e**4, math.e**9], rtol=1e-15)
    assert all(r["relative_error"] <= 1e-10 for r in rows)
    lines = (tmp_path / "instability.csv").read_text().splitlines()
    assert lines[0].startswith("j,lambda,amplification")


def test_weyl_count_at_ten(tmp_path):
    assert run(["weyl", "--lam", "10"], tmp_path) == 0
    counts = json.loads((tmp_path / "report.json").read_text())["counts"]
    assert counts[0]["count"] == 4  # k = 0, 1, 2, 3


def test_roundtrip_passes(tmp_path):
    assert run(["roundtrip", "--cases", "4"], tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and rep["lambda_max_T"] <= 30


def test_forward_single_mode(tmp_path):
    basis = interval_basis(IntervalDomain(math.pi), 4)
    write_coeffs(tmp_path / "u0.in.csv", basis.unit(1))
    assert run(["forward", "--u0", str(tmp_path / "u0.in.csv"), "--T", "1"], tmp_path / "o") == 0
    uT = read_coeffs(tmp_path / "o" / "u_T.csv")
    assert uT.values[1] == pytest.approx(math.exp(-1), rel=1e-13)


def test_forward_backward_chain(tmp_path):
    assert run(["forward", "--N", "8", "--steps", "4"], tmp_path / "fw") == 0
    argv = ["backward", "--uT", str(tmp_path / "fw" / "u_T.csv"), "--f", str(tmp_path / "fw" / "source.csv"),
            "--steps", "4"]
    assert run(argv, tmp_path / "bw") == 0
    u0 = read_coeffs(tmp_path / "fw" / "u0.csv").values
    back = read_coeffs(tmp_path / "bw" / "u0.csv").values
    assert np.linalg.norm(back - u0) <= math.exp(49) * 1e-13 * np.linalg.norm(u0)


def test_compat_report_fields(tmp_path):
    assert run(["compat", "--decay", "2"], tmp_path) == 0
    rep = json.loads((tmp_path / "compat.json").read_text())
    assert rep["command"] == "compat" and "version" in rep and rep["config"]["decay"] == 2.0
    assert rep["report"]["verdict"] == "COMPATIBLE"


def test_logconv_jordan(tmp_path):
    assert run(["logconv", "--samples", "512"], tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["criterion"]["minimum"] == pytest.approx(-0.125, abs=1e-9)
    assert rep["violation_search"]["found"] and rep["signs_agree"]


def test_zero_data_gives_zero_outputs(tmp_path):
    assert run(["forward", "--u0", "inputs/zero_u0.csv", "--steps", "3"], tmp_path / "fw") == 0
    norms = json.loads((tmp_path / "fw" / "norms.json").read_text())["norms"]
    assert all(v == 0.0 for v in norms.values())
    assert run(["backward", "--uT", "inputs/zero_u0.csv", "--steps", "3"], tmp_path / "bw") == 0
    assert not np.any(read_coeffs(tmp_path / "bw" / "u0.csv").values)
    ynorms = json.loads((tmp_path / "bw" / "ynorms.json").read_text())["norms"]
    assert ynorms == {"Y0": 0.0, "Y1": 0.0}


# ---------------------------------------------------------------- exit codes


def test_missing_input_exit_2(tmp_path, capsys):
    assert run(["forward", "--u0", "inputs/does_not_exist.csv"], tmp_path) == 2
    assert "does_not_exist.csv" in capsys.readouterr().err


def test_malformed_input_exit_2(tmp_path):
    (tmp_path / "bad.csv").write_text("mode,lambda,re,im\n0,0,oops,0\n")
    assert run(["backward", "--uT", str(tmp_path / "bad.csv")], tmp_path / "o") == 2


def test_malformed_matrix_exit_2(tmp_path):
    (tmp_path / "m.csv").write_text("1,2\n3\n")
    assert run(["matrix", "--matrix", str(tmp_path / "m.csv")], tmp_path / "o") == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["forward", "--N", "0"],
        ["forward", "--T", "-1"],
        ["forward", "--theta", "1.5"],
        ["forward", "--bogus"],
        ["nonsense"],
        ["backward", "--policy", "explode"],
        ["weyl", "--lam", "ten"],
        ["compat", "--decay", "0"],
        ["compat", "--uT", "inputs/uT.csv", "--decay", "1"],
        ["matrix", "--fixture", "advdiff", "--bc-left", "periodic"],
    ],
)
def test_config_violation_exit_3(argv, tmp_path):
    assert run(argv, tmp_path) == 3


def test_input_overwritten_by_output_exit_3(tmp_path):
    write_coeffs(tmp_path / "u0.csv", interval_basis(IntervalDomain(1.0), 3).zeros())
    assert run(["forward", "--u0", str(tmp_path / "u0.csv")], tmp_path) == 3


def test_incompatible_exit_4(tmp_path):
    assert run(["compat", "--decay", "0.5"], tmp_path) == 4
    rep = json.loads((tmp_path / "compat.json").read_text())
    assert rep["report"]["verdict"] == "INCOMPATIBLE"


def test_overflow_exit_4(tmp_path, capsys):
    assert run(["backward", "--uT", "inputs/overflow_uT.csv"], tmp_path) == 4
    assert capsys.readouterr().err


def test_matrix_budget_exit_4(tmp_path):
    (tmp_path / "big.csv").write_text("1,0\n0,900\n")
    assert run(["matrix", "--matrix", str(tmp_path / "big.csv"), "--T", "1"], tmp_path / "o") == 4


# ---------------------------------------------------------------- configuration


def test_defaults_and_command_defaults():
    assert resolve_config(["forward"]).N == 32
    assert resolve_config(["roundtrip"]).N == 6
    assert resolve_config(["matrix"]).T == 0.5


def test_config_file_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nN = 12\nT=2.5  # trailing\nsteps=7\n")
    cfg = resolve_config(["roundtrip", "--config", str(cfg_file), "--steps", "9"])
    assert (cfg.N, cfg.T, cfg.steps) == (12, 2.5, 9)


@pytest.mark.parametrize("text", ["N\n", "bogus=1\n", "N=abc\n"])
def test_config_file_errors(tmp_path, text):
    (tmp_path / "c.cfg").write_text(text)
    with pytest.raises(ConfigError):
        resolve_config(["forward", "--config", str(tmp_path / "c.cfg")])


def test_missing_config_file_exit_2(tmp_path):
    assert run(["forward", "--config", str(tmp_path / "none.cfg")], tmp_path) == 2


def test_runconfig_validation():
    with pytest.raises(ConfigError):
        RunConfig(command="forward", steps=0)
    with pytest.raises(ConfigError):
        RunConfig(command="forward", basis="disk")
    assert "out" not in RunConfig(command="forward").report_config()

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nn2c.fixtures import build_chain
from nn2c.ir import Dense, LayerWeights, TensorData
from nn2c.parser import serialize_model

ENV = {**os.environ, "NN2C_BACKEND": "numpy"}  # light math, skip jit startup


def run_cli(*args, env=ENV):
    return subprocess.run([sys.executable, "-m", "nn2c", *args],
                          capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def identity_model(tmp_path_factory):
    g = build_chain("ident", (2,), [("d", Dense(units=2))], seed=0)
    g.weights["d"] = LayerWeights(kernel=TensorData.from_array(np.eye(2)),
                                  bias=TensorData.from_array(np.zeros(2)))
    path = tmp_path_factory.mktemp("ident") / "ident.json"
    path.write_text(serialize_model(g))
    return path


def write_csv(path, rows):
    path.write_text("\n".join(",".join(f"{v:.9g}" for v in row)
                              for row in rows) + "\n")


# --- inspect ---------------------------------------------------------------

def test_inspect_composite(models_dir):
    proc = run_cli("inspect", str(models_dir / "composite_cnn.json"))
    assert proc.returncode == 0
    assert "total parameters: 2453" in proc.stdout
    # header+rule+6 layers+total+title
    assert len(proc.stdout.strip().splitlines()) == 10


def test_inspect_force_calibration(models_dir):
    proc = run_cli("inspect", str(models_dir / "force_calibration.json"))
    assert proc.returncode == 0
    assert "total parameters: 159" in proc.stdout


def test_inspect_terrain_picks_up_sidecar(models_dir):
    proc = run_cli("inspect", str(models_dir / "terrain_classifier.json"))
    assert proc.returncode == 0
    assert "total parameters: 20582" in proc.stdout


def test_inspect_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    proc = run_cli("inspect", str(bad))
    assert proc.returncode == 1
    assert proc.stderr.strip()
    assert not proc.stdout.strip()


def test_inspect_missing_file(tmp_path):
    proc = run_cli("inspect", str(tmp_path / "nope.json"))
    assert proc.returncode == 3


# --- check -----------------------------------------------------------------

def test_check_tiny_fits(models_dir):
    proc = run_cli("check", str(models_dir / "tiny_cnn.json"),
                   "--flash-bits", "8192", "--gamma", "1")
    assert proc.returncode == 0
    assert "max parameters:  256" in proc.stdout


def test_check_composite_rejected(models_dir):
    proc = run_cli("check", str(models_dir / "composite_cnn.json"),
                   "--flash-bits", "8192", "--gamma", "1")
    assert proc.returncode == 2
    assert "DOES NOT FIT" in proc.stdout


def test_check_bad_gamma(models_dir):
    proc = run_cli("check", str(models_dir / "tiny_cnn.json"),
                   "--flash-bits", "8192", "--gamma", "0")
    assert proc.returncode == 1
    assert "gamma" in proc.stderr


def test_usage_errors_exit_1_not_2(models_dir):
    proc = run_cli("check", str(models_dir / "tiny_cnn.json"))  # missing flag
    assert proc.returncode == 1
    proc = run_cli("frobnicate")
    assert proc.returncode == 1


# --- eval ------------------------------------------------------------------

def test_eval_identity(identity_model, tmp_path):
    csv = tmp_path / "in.csv"
    write_csv(csv, [[0.3, -0.7], [1.5, 2.5]])
    proc = run_cli("eval", str(identity_model), "--inputs", str(csv))
    assert proc.returncode == 0
    rows = [[float(v) for v in line.split(",")]
            for line in proc.stdout.strip().splitlines()]
    assert np.allclose(rows, [[0.3, -0.7], [1.5, 2.5]], atol=1e-7)


def test_eval_wrong_width_row(identity_model, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text("0.1,0.2,0.3\n")
    proc = run_cli("eval", str(identity_model), "--inputs", str(csv))
    assert proc.returncode == 1
    assert "needs 2" in proc.stderr


def test_eval_fixed32_close_to_float(models_dir, tmp_path):
    csv = tmp_path / "in.csv"
    rng = np.random.default_rng(61)
    write_csv(csv, rng.uniform(-1, 1, (5, 2)))
    model = str(models_dir / "force_calibration.json")
    plain = run_cli("eval", model, "--inputs", str(csv))
    fixed = run_cli("eval", model, "--inputs", str(csv), "--fixed", "32")
    assert plain.returncode == fixed.returncode == 0
    a = np.loadtxt(plain.stdout.splitlines(), delimiter=",", ndmin=2)
    b = np.loadtxt(fixed.stdout.splitlines(), delimiter=",", ndmin=2)
    assert np.abs(a - b).max() <= 1e-6


def test_eval_rejects_bad_bit_width(identity_model, tmp_path):
    csv = tmp_path / "in.csv"
    write_csv(csv, [[0.1, 0.2]])
    proc = run_cli("eval", str(identity_model), "--inputs", str(csv),
                   "--fixed", "12")
    assert proc.returncode == 1


# --- quantize-report ----------------------------------------------------------

def test_quantize_report_table(models_dir, tmp_path):
    csv = tmp_path / "in.csv"
    rng = np.random.default_rng(62)
    write_csv(csv, rng.uniform(-1, 1, (6, 2)))
    json_out = tmp_path / "report.json"
    proc = run_cli("quantize-report", str(models_dir / "system_id.json"),
                   "--inputs", str(csv), "--bits", "2,8,16",
                   "--json", str(json_out))
    assert proc.returncode == 0
    lines = proc.stdout.strip().splitlines()
    assert len(lines) == 4  # header + one row per bit width
    eps = [float(line.split()[1]) for line in lines[1:]]
    assert eps[0] >= eps[1] >= eps[2]
    payload = json.loads(json_out.read_text())
    assert set(payload) == {"2", "8", "16"}


def test_quantize_report_32_is_zero(models_dir, tmp_path):
    csv = tmp_path / "in.csv"
    write_csv(csv, [[0.4, -0.2]])
    proc = run_cli("quantize-report", str(models_dir / "system_id.json"),
                   "--inputs", str(csv), "--bits", "32")
    assert proc.returncode == 0
    assert float(proc.stdout.strip().splitlines()[-1].split()[1]) == 0.0


def test_quantize_report_empty_csv(models_dir, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text("")
    proc = run_cli("quantize-report", str(models_dir / "system_id.json"),
                   "--inputs", str(csv))
    assert proc.returncode == 1


# --- codegen -------------------------------------------------------------------

def test_codegen_writes_three_files(models_dir, tmp_path):
    out = tmp_path / "gen"
    proc = run_cli("codegen", str(models_dir / "tiny_cnn.json"),
                   "--out", str(out))
    assert proc.returncode == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["tiny_cnn.c", "tiny_cnn.h", "tiny_cnn_params.h"]

    first = {p.name: p.read_bytes() for p in out.iterdir()}
    rerun = run_cli("codegen", str(models_dir / "tiny_cnn.json"),
                    "--out", str(out))
    assert rerun.returncode == 0
    for p in out.iterdir():
        assert p.read_bytes() == first[p.name]


def test_codegen_custom_prefix(models_dir, tmp_path):
    out = tmp_path / "gen"
    proc = run_cli("codegen", str(models_dir / "tiny_cnn.json"),
                   "--out", str(out), "--prefix", "net")
    assert proc.returncode == 0
    assert (out / "net.c").exists()


def test_codegen_unwritable_out(models_dir, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    proc = run_cli("codegen", str(models_dir / "tiny_cnn.json"),
                   "--out", str(blocker / "sub"))
    assert proc.returncode == 3

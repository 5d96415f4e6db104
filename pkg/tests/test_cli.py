import json
import math
import subprocess
import sys

import numpy as np
import pytest

from interp_lab.cli import run
from interp_lab.instances import Instance, gen_random
from interp_lab.measure import FiniteMeasureSpace


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def kernel_file(tmp_path):
    inst = gen_random(3, "4x4", "uniform01", "counting")
    path = tmp_path / "inst.json"
    path.write_text(inst.to_json())
    return str(path)


@pytest.fixture()
def scalar_file(tmp_path):
    inst = Instance(
        spaces=(FiniteMeasureSpace(np.ones(3)),),
        f=np.array([3.0, 1.0, 1.0]),
        p=(2.0,),
    )
    path = tmp_path / "scalar.json"
    path.write_text(inst.to_json())
    return str(path)


@pytest.fixture()
def condexp_file(tmp_path):
    inst = Instance(
        spaces=(FiniteMeasureSpace(np.full(4, 0.25)),),
        f=np.array([4.0, 0.0, 0.0, 4.0]),
        partitions=(((0, 1), (2, 3)), ((0, 2), (1, 3))),
    )
    path = tmp_path / "condexp.json"
    path.write_text(inst.to_json())
    return str(path)


def test_norm_weak(capsys, scalar_file):
    code, out, _ = invoke(capsys, "norm", "--in", scalar_file, "--functional", "weak")
    assert code == 0
    report = json.loads(out)
    assert report["value"] == pytest.approx(3.0)
    assert "instance_sha256" in report


def test_norm_rect(capsys, tmp_path):
    inst = Instance(
        spaces=(FiniteMeasureSpace(np.ones(2)), FiniteMeasureSpace(np.ones(2))),
        f=np.eye(2),
        p=(math.inf, math.inf),
    )
    path = tmp_path / "eye.json"
    path.write_text(inst.to_json())
    code, out, _ = invoke(capsys, "norm", "--in", str(path), "--functional", "rect")
    assert code == 0
    report = json.loads(out)
    assert report["value"] == pytest.approx(0.5)
    assert report["argmax"] == [[0], [0]]


def test_ksweep_row_count(capsys, kernel_file):
    code, out, _ = invoke(
        capsys, "ksweep", "--in", kernel_file, "--t-grid", "pow2:-5..5", "--out", "csv"
    )
    assert code == 0
    lines = out.strip().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert len(data) == 11
    header = [l for l in lines if l.startswith("#")]
    assert any("instance_sha256=" in h for h in header)
    for row in data:
        t, kt, bigk, ratio = (float(x) for x in row.split(","))
        assert kt <= bigk + 1e-9
        assert bigk <= 2.0 * kt + 1e-9
        assert ratio == pytest.approx(bigk / kt, rel=1e-12)


def test_kfunc_and_decomposition_dump(capsys, kernel_file, tmp_path):
    dump = tmp_path / "dec.json"
    code, out, _ = invoke(
        capsys,
        "kfunc",
        "--in",
        kernel_file,
        "--t",
        "1.0",
        "--p1",
        "2",
        "--p2",
        "inf",
        "--dump-decomposition",
        str(dump),
    )
    assert code == 0
    data = [l for l in out.strip().splitlines() if not l.startswith("#")]
    assert len(data) == 1
    payload = json.loads(dump.read_text())
    total = np.sum(np.asarray(payload["summands"]), axis=0)
    inst = Instance.from_json(open(kernel_file).read())
    assert np.allclose(total, inst.f, atol=1e-9)


def test_determinism_byte_identical(capsys, kernel_file):
    code1, out1, _ = invoke(capsys, "ksweep", "--in", kernel_file, "--t-grid", "pow2:-3..3")
    code2, out2, _ = invoke(capsys, "ksweep", "--in", kernel_file, "--t-grid", "pow2:-3..3")
    assert code1 == code2 == 0
    assert out1 == out2


def test_interp_norm(capsys, kernel_file):
    code, out, _ = invoke(
        capsys, "interp-norm", "--in", kernel_file, "--theta", "0.5",
        "--t-grid", "pow2:-6..6",
    )
    assert code == 0
    report = json.loads(out)
    assert report["certified"]
    lo, hi = report["certified_bracket"]
    assert lo - 1e-9 <= report["grid_value"] <= hi + 1e-9


def test_opnorm(capsys, tmp_path):
    inst = Instance(
        spaces=(FiniteMeasureSpace(np.ones(3)), FiniteMeasureSpace(np.ones(3))),
        f=np.eye(3),
    )
    path = tmp_path / "eye3.json"
    path.write_text(inst.to_json())
    code, out, _ = invoke(capsys, "opnorm", "--in", str(path), "--r", "2", "--s", "2")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.0)


def test_condexp(capsys, condexp_file):
    code, out, _ = invoke(capsys, "condexp", "--in", condexp_file, "--decompose")
    assert code == 0
    report = json.loads(out)
    assert report["condition"] == pytest.approx(1.0)
    assert report["value"] == pytest.approx(2.0, abs=1e-9)
    assert report["ratio"] == pytest.approx(2.0, abs=1e-9)


def test_gen_deterministic(capsys):
    code1, out1, _ = invoke(capsys, "gen", "--seed", "5", "--shape", "3x3", "--dist", "exp-tail")
    code2, out2, _ = invoke(capsys, "gen", "--seed", "5", "--shape", "3x3", "--dist", "exp-tail")
    assert code1 == code2 == 0
    assert out1 == out2
    inst = Instance.from_json(out1)
    assert inst.f.shape == (3, 3)


def test_gen_to_file_and_pipeline(capsys, tmp_path):
    out_path = tmp_path / "gen.json"
    code, out, _ = invoke(
        capsys, "gen", "--seed", "9", "--shape", "3x3", "--weights", "dirichlet",
        "--out", str(out_path),
    )
    assert code == 0
    assert json.loads(out)["written"] == str(out_path)
    code2, out2, _ = invoke(capsys, "kfunc", "--in", str(out_path), "--t", "2.0")
    assert code2 == 0


def test_verify_pass(capsys):
    code, out, _ = invoke(capsys, "verify", "varopoulos", "--trials", "5", "--seed", "3")
    assert code == 0
    report = json.loads(out)
    assert report["pass"]
    assert report["trials"] == 5
    assert report["extra"]["identity_2x2_ratio"] == pytest.approx(2.0, abs=1e-9)


def test_verify_vacuous(capsys):
    code, out, _ = invoke(capsys, "verify", "duality", "--trials", "0", "--seed", "1")
    assert code == 0
    report = json.loads(out)
    assert report["pass"]
    assert report["vacuous"]


def test_verify_unknown_suite(capsys):
    code, _, err = invoke(capsys, "verify", "nonsense", "--trials", "1")
    assert code == 2


def test_malformed_json_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{this is not json")
    code, _, err = invoke(capsys, "kfunc", "--in", str(bad), "--t", "1.0")
    assert code == 2
    assert "error" in err


def test_missing_file_exit_2(capsys):
    code, _, err = invoke(capsys, "kfunc", "--in", "/nonexistent.json", "--t", "1.0")
    assert code == 2


def test_usage_error_exit_2(capsys):
    code, _, _ = invoke(capsys, "kfunc", "--t", "1.0")  # missing --in
    assert code == 2


def test_module_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "interp_lab", "gen", "--seed", "1", "--shape", "2x2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    Instance.from_json(proc.stdout)


def test_jobs_flag_gives_identical_report(capsys):
    code1, out1, _ = invoke(
        capsys, "verify", "duality", "--trials", "8", "--seed", "4", "--jobs", "1"
    )
    code2, out2, _ = invoke(
        capsys, "verify", "duality", "--trials", "8", "--seed", "4", "--jobs", "4"
    )
    assert code1 == code2 == 0
    assert out1 == out2

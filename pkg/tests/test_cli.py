import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from gconcurrence.asymptotics import right_edge_density
from gconcurrence.cli import main
from gconcurrence.moments import g_moment_hs


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_curve(text):
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    rows = list(csv.DictReader(io.StringIO(body)))
    x = np.array([float(r["abscissa"]) for r in rows])
    y = np.array([float(r["density"]) for r in rows])
    return x, y, rows


def test_moment_g_n2(capsys):
    code, out, _ = run(capsys, "moment", "--n", "2", "--beta", "2", "--m", "1", "--of", "G")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "of,order,value,log_value"
    assert float(lines[1].split(",")[2]) == pytest.approx(3 * math.pi / 16, rel=1e-15)
    assert lines[1].split(",")[2].startswith("0.5890486")


def test_moment_order_zero(capsys):
    code, out, _ = run(capsys, "moment", "--n", "2", "--beta", "2", "--m", "0", "--of", "D")
    assert code == 0
    assert float(out.splitlines()[1].split(",")[2]) == 1.0


def test_moment_induced_equals_hs(capsys):
    _, a, _ = run(capsys, "moment", "--n", "3", "--k", "3", "--beta", "2", "--m", "1", "--of", "G")
    _, b, _ = run(capsys, "moment", "--n", "3", "--beta", "2", "--m", "1", "--of", "G")
    va, vb = float(a.splitlines()[1].split(",")[2]), float(b.splitlines()[1].split(",")[2])
    assert va == pytest.approx(vb, rel=1e-12)


def test_moment_json_and_complex(capsys):
    code, out, _ = run(capsys, "moment", "--n", "3", "--beta", "1", "--m", "1", "--m", "2+3j", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert [m["order"] for m in data["moments"]] == [[1.0, 0.0], [2.0, 3.0]]


@pytest.mark.parametrize("argv", [
    ["moment", "--n", "2", "--beta", "3", "--m", "1"],
    ["moment", "--n", "2", "--beta", "2"],
    ["moment", "--n", "x", "--beta", "2", "--m", "1"],
    ["density", "--n", "3", "--beta", "2", "--grid", "5"],
    ["validate"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_domain_error_exit(capsys):
    code, _, err = run(capsys, "moment", "--n", "3", "--beta", "2", "--m", "-2")
    assert code == 3
    assert "PoleError" in err


def test_capability_error_exit(capsys):
    code, _, err = run(capsys, "density", "--n", "13", "--beta", "2", "--method", "invert")
    assert code == 3
    assert "edge" in err


def test_accuracy_error_exit(capsys):
    code, _, err = run(capsys, "density", "--n", "8", "--beta", "2", "--method", "invert", "--tol", "1e-16")
    assert code == 4
    assert "AccuracyError" in err


def test_density_n2_real(capsys):
    code, out, _ = run(capsys, "density", "--n", "2", "--beta", "1", "--of", "D")
    assert code == 0
    x, y, rows = read_curve(out)
    assert np.all(y == 4.0)
    assert np.all((x > 0) & (x < 0.25))
    assert {r["method"] for r in rows} == {"closed_form"}


def test_density_g_normalized(capsys):
    code, out, _ = run(capsys, "density", "--n", "3", "--beta", "2", "--of", "G", "--grid", "400")
    assert code == 0
    x, y, _ = read_curve(out)
    # interior uniform grid; both ends of P(G) vanish
    total = np.trapezoid(np.concatenate(([0.0], y, [0.0])), np.concatenate(([0.0], x, [1.0])))
    assert total == pytest.approx(1.0, abs=1e-6)


def test_density_edge_near_right_end(capsys):
    code, out, _ = run(capsys, "density", "--n", "3", "--beta", "2", "--of", "D", "--method", "edge", "--grid", "50")
    assert code == 0
    x, y, _ = read_curve(out)
    right = x > 0.5 / 27
    assert np.any(right)
    np.testing.assert_allclose(y[right], right_edge_density(3, 2, x[right]), rtol=1e-15)


def test_density_output_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--output", str(a), "density", "--n", "4", "--beta", "1", "--grid", "60"]) == 0
    assert main(["--output", str(b), "density", "--n", "4", "--beta", "1", "--grid", "60"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"blend_window_t" in a.read_bytes()


def test_sample_csv_identical_and_seeded(capsys):
    argv = ["sample", "--n", "3", "--beta", "2", "--count", "2000", "--seed", "4", "--bins", "20", "--of", "G"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    assert a.splitlines()[0] == "# seed=4"
    assert "bin_left,bin_right,count,density" in a


def test_sample_dump(capsys):
    code, out, _ = run(capsys, "sample", "--n", "2", "--k", "4", "--beta", "1", "--count", "3", "--seed", "1", "--dump")
    assert code == 0
    lines = out.splitlines()
    assert lines[2] == "lambda_1,lambda_2,det_log,g"
    assert len(lines) == 6


def test_sample_summary(capsys):
    code, out, _ = run(capsys, "sample", "--n", "2", "--beta", "2", "--count", "20000", "--seed", "2")
    data = json.loads(out)
    assert code == 0 and data["seed"] == 2
    assert abs(data["mean_D"] - 0.1) < 5 * data["se_D"]


def test_edge_coeffs(capsys):
    code, out, _ = run(capsys, "edge-coeffs", "--n", "3", "--beta", "1")
    assert code == 0
    data = json.loads(out)
    coeffs = {(t["d_power"], t["log_power"]): t["coeff"] for t in data["terms"]}
    assert coeffs[("0", 0)] == 120 and coeffs[("1", 0)] == 1440
    code, out, _ = run(capsys, "edge-coeffs", "--n", "3", "--beta", "2", "--edge", "right")
    law = json.loads(out)["law"]
    assert law["exponent"] == 3


def test_edge_coeffs_n2_is_domain_error(capsys):
    assert run(capsys, "edge-coeffs", "--n", "2", "--beta", "2")[0] == 3


def test_limit_outputs(capsys):
    _, out, _ = run(capsys, "limit", "--q", "2")
    assert "X_q = 0.7357589" in out
    _, out, _ = run(capsys, "limit", "--asymptote")
    assert out.strip() == "1/e = 0.367879441"
    _, out, _ = run(capsys, "limit")
    rows = out.splitlines()[2:]
    assert len(rows) == 5
    assert float(rows[0].split(",")[1]) == pytest.approx(g_moment_hs(4, 2, 1).real, rel=1e-15)


def test_validate_quick(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "quick", "--seed", "7")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# seed=7 suite=quick"
    assert all(ln.startswith("PASS") for ln in lines[1:])
    assert len(lines) == 9


def test_config_files(capsys, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("n: 2\nbeta: 2\nm: [1, 2]\nof: G\n")
    code, out, _ = run(capsys, "--config", str(cfg), "moment")
    assert code == 0
    vals = [float(ln.split(",")[2]) for ln in out.splitlines()[1:]]
    assert vals == pytest.approx([3 * math.pi / 16, 0.4], rel=1e-15)
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"n": 3, "beta": 2, "m": 1}))
    code, out, _ = run(capsys, "--config", str(js), "moment", "--n", "2")
    assert float(out.splitlines()[1].split(",")[2]) == pytest.approx(0.1)


@pytest.mark.parametrize("text", ["beta: 3\n", "bogus: 1\n", "- 1\n", "n: [\n"])
def test_bad_config(capsys, tmp_path, text):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("n: 2\nm: 1\n" + text if not text.startswith(("-", "n:")) else text)
    assert run(capsys, "--config", str(cfg), "moment")[0] == 2


def test_console_script():
    exe = shutil.which("gconc")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "limit", "--q", "2"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "0.7357589" in res.stdout

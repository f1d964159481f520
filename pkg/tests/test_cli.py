import json
import subprocess
import sys

import pytest
from numpy.testing import assert_allclose

from conftest import GOLDEN
from spherical_pi.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, dispatch, render_json


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = dispatch([*args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_render_json_sorted_and_rounded():
    s = render_json({"b": 1 / 3, "a": [2.0, float("nan")]})
    assert s.index('"a"') < s.index('"b"')
    assert "0.333333333333" in s and "0.3333333333333" not in s
    assert '"nan"' in s


def test_spectrum_exit_ok(tmp_path):
    code, text = run(tmp_path, "spectrum", "--n", "2", "--op", "gamma0", "--max-degree", "3")
    assert code == EXIT_OK
    rep = json.loads(text)
    assert rep["passed"] and rep["operator"] == "gamma0"


def test_verify_exit_codes(tmp_path):
    assert run(tmp_path, "verify", "--all", "--n", "3", "--N", "4")[0] == EXIT_OK
    # pairing_plus cannot hold at n = 2
    code, text = run(tmp_path, "verify", "--all", "--n", "2", "--N", "4")
    assert code == EXIT_FAIL
    failed = [d["identity"] for d in json.loads(text)["identities"] if not d["passed"]]
    assert failed == ["pairing_plus"]


def test_norms_reports_isometry_failure(tmp_path):
    code, text = run(tmp_path, "norms", "--n", "3", "--N", "4")
    assert code == EXIT_FAIL
    checks = json.loads(text)["checks"]
    assert checks["T_equals_2_over_n"] and not checks["Pi_s1_isometry"]


def test_usage_errors(tmp_path):
    assert dispatch(["spectrum"]) == EXIT_USAGE
    assert dispatch(["nosuch"]) == EXIT_USAGE
    assert dispatch(["bounds", "--n", "3", "--p", "1", "--Bp", "1"]) == EXIT_USAGE
    assert dispatch(["verify", "--n", "2"]) == EXIT_USAGE
    assert dispatch(["bounds", "--n", "3", "--p", "2", "--Bp", "1", "--out", str(tmp_path / "no" / "x.json")]) == EXIT_USAGE
    assert dispatch(["--config", str(tmp_path / "missing.json"), "bounds", "--n", "3", "--p", "2", "--Bp", "1"]) == EXIT_USAGE


def test_bounds(tmp_path):
    code, text = run(tmp_path, "bounds", "--n", "3", "--p", "2", "--Bp", "1")
    assert code == EXIT_OK
    assert_allclose(json.loads(text)["T_Lp_bound"], 3.14159265359)


def test_config_defaults_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "N": 3}))
    code, text = run(tmp_path, "--config", str(cfg), "verify", "--identity", "thm_ds_w", "--n", "3")
    assert code == EXIT_OK
    rep = json.loads(text)
    assert rep["n"] == 3 and rep["N"] == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert dispatch(["--config", str(cfg), "verify", "--all", "--n", "2"]) == EXIT_USAGE


def test_bp_check_csv(tmp_path):
    csv_path = tmp_path / "bp.csv"
    code, text = run(tmp_path, "bp-check", "--h-list", "0.08,0.04", "--function", "deg2", "--tol", "0.05",
                     "--min-order", "1", "--csv", str(csv_path))
    assert code == EXIT_OK
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "h,residual,observed_order" and len(lines) == 3


def test_beltrami_flags_and_problem_file(tmp_path):
    code, text = run(tmp_path, "beltrami", "--N", "4", "--start", "random", "--seed", "1")
    assert code == EXIT_OK
    rep = json.loads(text)
    pf = tmp_path / "problem.json"
    pf.write_text(json.dumps(rep["problem"]))
    code2, text2 = run(tmp_path, "beltrami", "--problem", str(pf), name="b2.json")
    assert code2 == EXIT_OK
    assert json.loads(text2)["result"] == rep["result"]


def test_beltrami_precheck_failure_exit(tmp_path):
    code, text = run(tmp_path, "beltrami", "--N", "4", "--q-coeff", "0.95", "--variant", "s1")
    assert code == EXIT_FAIL
    assert "precheck" in json.loads(text)["error"]


@pytest.mark.parametrize("args", [
    ["pi-quad-check", "--h", "0.08", "--targets", "2", "--seed", "7"],
    ["beltrami", "--N", "4", "--start", "random", "--seed", "3"],
    ["spectrum", "--n", "3", "--op", "T", "--max-degree", "3"],
])
def test_byte_identical_reruns(tmp_path, args):
    a = run(tmp_path, *args, name="a.json")
    b = run(tmp_path, *args, name="b.json")
    assert a[1] == b[1]


@pytest.mark.parametrize("n", [2, 3])
def test_golden_spectrum(tmp_path, n):
    code, text = run(tmp_path, "spectrum", "--n", str(n), "--op", "all", "--max-degree", "4")
    assert code == EXIT_OK
    golden = json.loads((GOLDEN / f"spectrum_n{n}_N4.json").read_text())
    got = json.loads(text)
    for g, s in zip(golden["spectra"], got["spectra"]):
        assert g["operator"] == s["operator"]
        for gb, sb in zip(g["blocks"], s["blocks"]):
            assert gb["multiplicities"] == sb["multiplicities"]
            assert_allclose(sb["eigenvalues"], gb["eigenvalues"], rtol=1e-10, atol=1e-12)
            assert sb["residual"] < g["tolerance"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "spherical_pi", "bounds", "--n", "2", "--p", "4", "--Bp", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["command"] == "bounds"

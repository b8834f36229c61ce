import hashlib
import json
import os
import subprocess
import sys

import pytest

from henon_lab.cli import dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


def run_proc(*argv, threads=None):
    env = dict(os.environ)
    if threads is not None:
        env["HENON_LAB_THREADS"] = str(threads)
    return subprocess.run([sys.executable, "-m", "henon_lab.cli", *argv], capture_output=True, env=env)


def test_dumps_format():
    from gmpy2 import mpq

    assert dumps({"a": 0.1, "b": mpq(3, 4), "c": 1 + 2j, "d": float("nan")}) == \
        '{"a": 0.10000000000000001, "b": "3/4", "c": [1, 2], "d": null}'


def test_corpus_listing(capsys):
    code, out, _ = run(capsys, "corpus")
    assert code == 0
    assert {"quadratic", "cubic", "dissipative", "reversible_x3p1"} <= set(out["maps"])


def test_periodic_quadratic(capsys):
    code, out, _ = run(capsys, "periodic", "quadratic", "--n", "2")
    assert code == 0
    assert out["total_multiplicity"] == 4 and out["distinct"] == 4
    pts = sorted((round(p["point"][0][0], 9), round(p["point"][0][1], 9)) for p in out["points"])
    assert pts == [(-1.0, -1.732050808), (-1.0, 1.732050808), (0.0, 0.0), (2.0, 0.0)]
    assert {p["exact_period"] for p in out["points"]} == {1, 2}


def test_decompose(capsys):
    code, out, _ = run(capsys, "decompose", "quadratic")
    assert code == 0
    assert out["classification"]["kind"] == "Hyperbolic"
    assert out["classification"]["translation_length"] == 2
    assert out["jacobian"] == "1/1"


def test_green_eval(capsys):
    code, out, _ = run(capsys, "green", "eval", "quadratic", "--point", "10,0", "--tol", "1e-13")
    assert code == 0
    assert out["Gplus"]["value"] == pytest.approx(2.3023348426601489, abs=1e-12)


def test_height(capsys):
    code, out, _ = run(capsys, "height", "quadratic", "--point", "1,0", "--n", "8", "--threshold", "0.01")
    assert code == 0
    assert out["value"] > 0 and out["agrees"]
    assert out["contributions"][0]["place"] == "inf"
    assert out["verdict"] == "PositiveHeight"


def test_group_common_iterate(capsys, tmp_path):
    code, out, _ = run(capsys, "group", "common-iterate", "quadratic", "quadratic", "--bound", "2")
    assert code == 0
    assert out["found"] and out["exponents"] == [1, 1]


def test_lyapunov_and_holder(capsys):
    code, out, _ = run(capsys, "lyapunov", "quadratic", "--period", "2")
    assert code == 0 and abs(out["chi_u"] + out["chi_s"]) < 1e-9
    code, out, _ = run(capsys, "holder", "quadratic", "--side", "stable")
    assert code == 0 and out["relative_error"] <= 0.05


def test_proportionality_and_reversible(capsys):
    code, out, _ = run(capsys, "proportionality", "reversible_x3p1", "--samples", "80")
    assert code == 0 and out["alpha_hat"] == pytest.approx(1.0, abs=0.02)
    code, out, _ = run(capsys, "reversible", "quadratic", "--n", "1")
    assert code == 0


def test_malformed_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"P": [0, 0, 1,,]}')
    code, out, err = run(capsys, "periodic", str(bad), "--n", "1")
    assert code == 2 and out is None
    assert err["error"] == "parse" and err["path"] == str(bad)
    assert err["line"] == 1 and err["column"] > 1


def test_invalid_spec_field(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"forward": ["x^2 - y", "x"], "inverse": ["y", "x"]}')
    code, _, err = run(capsys, "decompose", str(bad))
    assert code == 2 and err["error"] == "input"


def test_usage_error(capsys):
    code, _, err = run(capsys, "periodic")
    assert code == 2 and err["error"] == "usage"


def test_computation_error_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "periodic", "elementary", "--n", "1")
    assert code != 0 and "error" in err


def test_render_deterministic_across_threads(tmp_path):
    digests = set()
    for threads in (1, 2, 4):
        out = tmp_path / f"g{threads}.ppm"
        res = run_proc("green", "render", "quadratic", "--window=-3,3,-3,3", "--res", "48",
                       "--out", str(out), "--seed", "5", threads=threads)
        assert res.returncode == 0, res.stderr
        assert res.stderr == b""
        report = json.loads(res.stdout)
        assert report.pop("out") == str(out)
        digests.add((hashlib.sha256(out.read_bytes()).hexdigest(), dumps(report)))
    assert len(digests) == 1


def test_height_deterministic_across_threads():
    outs = {run_proc("height", "dissipative", "--point", "1/2,3", "--n", "6", threads=t).stdout for t in (1, 3)}
    assert len(outs) == 1


def test_tol_override_honored(capsys):
    _, a, _ = run(capsys, "green", "eval", "quadratic", "--point", "1.5,0.5", "--tol", "1e-4")
    _, b, _ = run(capsys, "green", "eval", "quadratic", "--point", "1.5,0.5", "--tol", "1e-13")
    assert a["Gplus"]["error_bound"] > b["Gplus"]["error_bound"]
    assert abs(a["Gplus"]["value"] - b["Gplus"]["value"]) <= a["Gplus"]["error_bound"] + b["Gplus"]["error_bound"]

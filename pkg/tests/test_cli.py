import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from hofa.cli import main
from hofa.functions import FiniteFunction
from hofa.polynomials import NonClassicalPoly, write_polys


def schema(command):
    text = resources.files("hofa").joinpath(f"schemas/{command}.schema.json").read_text()
    return json.loads(text)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, schema("envelope"))
    jsonschema.validate(doc, schema(argv[0]))
    assert doc["header"]["command"] == argv[0]
    return doc["result"]


@pytest.fixture
def files(tmp_path):
    def put(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    rng = np.random.default_rng(0)
    x = np.arange(2**10)
    member = np.array([bin(v & 0b1011001).count("1") % 2 for v in x], dtype=np.uint8)
    noisy = member ^ (rng.random(2**10) < 0.05).astype(np.uint8)
    return {
        "one": put("one.txt", FiniteFunction.constant(1, 2, 3).to_text()),
        "delta": put("delta.txt", FiniteFunction(np.eye(1, 8, 0, dtype=np.uint8)[0]).to_text()),
        "rand4": put("rand4.txt", FiniteFunction((rng.random(16) < 0.5).astype(np.uint8)).to_text()),
        "noisy": put("noisy.txt", FiniteFunction(noisy).to_text()),
        "bad": put("bad.txt", "2 2 2\n0 1\n1 q\n"),
        "poly": put("poly.txt", NonClassicalPoly.monomial(2, (1, 0), k=1).to_text()),
        "factor": put("factor.txt", write_polys([NonClassicalPoly.linear(2, [1, 0, 1]),
                                                 NonClassicalPoly.monomial(2, (1, 1, 0))], 2, 3)),
        "map": put("map.txt", "2 2 3\n0 1 0\n0 0 1\n1 0 0\n"),
        "dir": str(tmp_path),
    }


def test_gowers_of_constant_is_one(capsys, files):
    res = run_json(capsys, "gowers", "--fn", files["one"], "--order", "2", "--exact")
    assert res["value"] == 1.0 and res["mode"] == "exact"


def test_gowers_sampled(capsys, files):
    code, out, _ = run(capsys, "gowers", "--fn", files["delta"], "--order", "2", "--samples", "5000", "--seed", "3")
    doc = json.loads(out)
    assert doc["header"]["samples"] == 5000 and doc["header"]["seed"] == 3
    assert doc["result"]["mode"] == "monte_carlo"


def test_malformed_file_exits_2_with_line_number(capsys, files):
    code, out, err = run(capsys, "gowers", "--fn", files["bad"], "--order", "2")
    assert code == 2 and out == ""
    assert "bad.txt:3:" in err


def test_missing_file_and_bad_flags(capsys, files):
    assert run(capsys, "gowers", "--fn", "/nonexistent", "--order", "2")[0] == 2
    assert run(capsys, "gowers", "--fn", files["one"])[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "check", "--threads", "0")[0] == 2


def test_restrict_along_map(capsys, files):
    res = run_json(capsys, "restrict", "--fn", files["delta"], "--map", files["map"])
    g = FiniteFunction.from_text(res["function"])
    assert (g.p, g.n) == (2, 2)
    # the plane x1 = 1 misses the origin
    assert g.values.tolist() == [0, 0, 0, 0]
    res = run_json(capsys, "restrict", "--fn", files["rand4"], "-m", "2", "--seed", "4")
    assert FiniteFunction.from_text(res["function"]).n == 2


def test_dist(capsys, files):
    res = run_json(capsys, "dist", "--fn1", files["delta"], "--fn2", files["one"], "--metric", "hamming")
    assert res["distance"] == 7 / 8


def test_mu_and_mu_dist(capsys, files):
    res = run_json(capsys, "mu", "--fn", files["delta"], "-k", "1", "--exact")
    table = {r["outcome"]: r["probability"] for r in res["table"]}
    assert table == {"00": 0.75, "01": 0.125, "10": 0.125}
    res = run_json(capsys, "mu-dist", "--fn1", files["delta"], "--fn2", files["one"], "-k", "1")
    assert res["stat_distance"] == 1.0
    res = run_json(capsys, "mu", "--fn", files["rand4"], "-k", "1", "--samples", "1000")
    assert res["mode"] == "monte_carlo"


def test_poly_commands(capsys, files):
    res = run_json(capsys, "poly-eval", "--poly", files["poly"], "--point", "1,0")
    assert res["value"] == "1/4"
    res = run_json(capsys, "poly-verify", "--poly", files["poly"])
    assert res["verified"] and res["degree"] == 2 and res["depth"] == 1
    res = run_json(capsys, "poly-verify", "--poly", files["poly"], "--degree", "1")
    assert not res["verified"]
    assert run(capsys, "poly-eval", "--poly", files["poly"], "--point", "1")[0] == 2


def test_factor_stats(capsys, files):
    res = run_json(capsys, "factor-stats", "--factor", files["factor"], "--rank")
    assert res["complexity"] == 2 and res["order"] == 4
    assert sum(a["count"] for a in res["atoms"]) == 8
    assert res["rank_proxy"]["max_bias"] == pytest.approx(0.5)


def test_decompose_bundle(capsys, files, tmp_path):
    bundle = tmp_path / "bundle"
    res = run_json(capsys, "decompose", "--fn", files["noisy"], "--degree", "1", "--tau", "0.2",
                   "--bundle", str(bundle))
    assert res["complexity"] >= 1
    for name in ("f1.txt", "f2.txt", "f3.txt", "factor.txt", "certificate.json"):
        assert (bundle / name).exists()
    f1 = FiniteFunction.from_text((bundle / "f1.txt").read_text())
    f3 = FiniteFunction.from_text((bundle / "f3.txt").read_text())
    f = FiniteFunction.from_text(open(files["noisy"]).read())
    assert np.allclose(f1.real() + f3.real(), f.real())


def test_tester_completeness_end_to_end(capsys, files):
    res = run_json(capsys, "test", "--fn", files["noisy"], "--property", "rm:1", "--delta", "0.05",
                   "--eps", "0.2", "-m", "6", "--trials", "200", "--seed", "0")
    assert res["accept_fraction"] >= 2 / 3 and res["verdict"] == "accept"
    assert len(res["per_trial_distances"]) == 200


def test_pipeline_command(capsys, files):
    res = run_json(capsys, "pipeline", "--fn", files["noisy"], "--property", "rm:1", "-m", "6",
                   "--embeddings", "20", "--gamma", "0.15")
    assert res["psi"]["mean_identity_error"] <= 1e-12
    assert res["final"]["holds"]


def test_check_and_sabotage(capsys):
    res = run_json(capsys, "check", "--scale", "small", "--seed", "0", "--threads", "1")
    assert res["passed"] and len(res["checks"]) == 10
    code, out, _ = run(capsys, "check", "--sabotage", "gowers", "--threads", "1")
    assert code == 3
    doc = json.loads(out)
    failed = {c["name"] for c in doc["result"]["checks"] if not c["passed"]}
    assert "u2_fourier_agreement" in failed


def test_csv_output_and_out_file(capsys, files, tmp_path):
    code, out, _ = run(capsys, "gowers", "--fn", files["one"], "--order", "2", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# command=gowers")
    assert "key,value" in lines and "value,1.0" in lines
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "--seed", "5", "gowers", "--fn", files["one"], "--order", "1", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["header"]["seed"] == 5


def test_identical_invocations_give_identical_bytes(capsys, files):
    argv = ("test", "--fn", files["noisy"], "--property", "rm:1", "--delta", "0.05", "--eps", "0.2",
            "-m", "6", "--trials", "50", "--seed", "7")
    a = run(capsys, *argv, "--threads", "1")[1]
    b = run(capsys, *argv, "--threads", "4")[1]
    assert a == b

import json
import subprocess
import sys

import numpy as np
import pytest

from matpoincare import cli
from matpoincare import markov_core as mc
from matpoincare import matrix_function as mf
from matpoincare import spectral as sp


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def k3(tmp_path):
    path = tmp_path / "k3.json"
    assert run("chain", "build", "--name", "complete", "--n", 3, "--output", path) == 0
    return path


def test_chain_build(tmp_path, capsys):
    out = tmp_path / "cube.json"
    assert run("chain", "build", "--name", "hypercube", "--m", 2, "-o", out) == 0
    data = json.loads(out.read_text())
    assert data["kind"] == "generator" and data["n"] == 4
    assert "reversibility_residual" in capsys.readouterr().err


def test_chain_build_params_json(tmp_path):
    out = tmp_path / "bd.json"
    assert run("chain", "build", "--name", "birth_death", "--params", '{"up": [2], "down": [1]}', "-o", out) == 0
    np.testing.assert_allclose(json.loads(out.read_text())["measure"], [1 / 3, 2 / 3])


def test_chain_build_product(tmp_path, k3):
    two = tmp_path / "two.json"
    run("chain", "build", "--name", "two_state", "--a", 1, "--b", 1, "-o", two)
    out = tmp_path / "prod.json"
    assert run("chain", "build", "--name", "product", "--left", k3, "--right", two, "-o", out) == 0
    assert json.loads(out.read_text())["n"] == 6


@pytest.mark.parametrize("argv", [
    ["chain", "build", "--name", "hypercube"],
    ["chain", "build", "--name", "hypercube", "--m", "0"],
    ["chain", "build", "--name", "nope"],
    ["chain", "build", "--name", "birth_death", "--up", "1,x", "--down", "1,1"],
    ["chain", "build", "--name", "complete", "--params", "{bad"],
])
def test_chain_build_errors(argv, capsys):
    assert cli.main(argv) == 2
    assert capsys.readouterr().err


@pytest.mark.parametrize("builder, alpha", [
    (["--name", "complete", "--n", "3"], 1 / 3),
    (["--name", "hypercube", "--m", "2"], 1 / 2),
    (["--name", "two_state", "--a", "1", "--b", "2"], 1 / 3),
])
def test_spectral(tmp_path, builder, alpha):
    chain = tmp_path / "c.json"
    run("chain", "build", *builder, "-o", chain)
    out = tmp_path / "s.json"
    assert run("spectral", chain, "-o", out) == 0
    assert json.loads(out.read_text())["alpha"] == pytest.approx(alpha, rel=1e-12)


def test_spectral_bad_chain(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "generator", "n": 3, "matrix": [[-1, 1, 0], [0, -1, 1], [1, 0, -1]]}))
    assert run("spectral", bad) == 2
    assert run("spectral", tmp_path / "missing.json") == 2


def _write_function(path, f):
    path.write_text(json.dumps(f.to_dict()))
    return path


def test_certify_exit_codes(tmp_path, k3):
    chain = mc.chain_from_dict(json.loads(k3.read_text()))
    spec = sp.eigendecompose(chain)
    eig = _write_function(tmp_path / "eig.json", mf.equality_tensor(spec, 1, np.eye(2)))
    out = tmp_path / "report.json"
    assert run("certify", k3, eig, "-o", out) == 0
    assert json.loads(out.read_text())["certificate"]["verdict"] == "Marginal"

    herm = _write_function(tmp_path / "h.json", mf.random_matrix_function(chain, 3, "hermitian", seed=1))
    assert run("certify", k3, herm, "-o", out) == 0
    assert run("certify", k3, eig, "--alpha", 0.5 / 3, "-o", out) == 1
    report = json.loads(out.read_text())
    assert report["certificate"]["verdict"] == "Fails" and report["alpha_valid"] is False

    wrong = _write_function(tmp_path / "w.json", mf.MatrixFunction(np.zeros((5, 2, 2))))
    assert run("certify", k3, wrong, "-o", out) == 2
    assert run("certify", k3, eig, "--alpha", -1, "-o", out) == 2


def test_fuzz_command(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("fuzz", "--trials", 60, "--seed", 7, "-o", a) == 0
    assert run("fuzz", "--trials", 60, "--seed", 7, "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()
    summary = json.loads(a.read_text())
    assert summary["trials"] == 60 and summary["failures"] == []
    neg = tmp_path / "neg.json"
    assert run("fuzz", "--trials", 60, "--invalid-alpha-factor", 0.9, "-o", neg) == 1
    assert json.loads(neg.read_text())["failures"]
    assert run("fuzz", "--chain-kinds", "bogus", "-o", neg) == 2


def test_tail_command(tmp_path, k3):
    const = _write_function(tmp_path / "c.json", mf.MatrixFunction.constant(3, np.eye(2)))
    out = tmp_path / "tail.csv"
    assert run("tail", k3, const, "--thresholds", "0.1,0.5,1", "--format", "csv", "-o", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,empirical,bound"
    assert all(float(r.split(",")[1]) == 0 for r in rows[1:])

    chain = mc.chain_from_dict(json.loads(k3.read_text()))
    f = _write_function(tmp_path / "f.json", mf.random_matrix_function(chain, 2, "general", seed=2))
    assert run("tail", k3, f, "--thresholds", "0.05,0.2,0.5,1,2", "--format", "csv", "-o", out) == 0
    for r in out.read_text().splitlines()[1:]:
        _, emp, bound = map(float, r.split(","))
        assert emp <= bound + 1e-12 and bound <= 1
    js = tmp_path / "tail.json"
    assert run("tail", k3, f, "--thresholds", "0.5,1", "-o", js) == 0
    assert set(json.loads(js.read_text())) >= {"thresholds", "empirical", "bound"}
    assert run("tail", k3, f, "--thresholds", "1,0.5", "-o", js) == 2
    wrong = _write_function(tmp_path / "w.json", mf.MatrixFunction(np.zeros((5, 2, 2))))
    assert run("tail", k3, wrong, "--thresholds", "1", "-o", js) == 2


def test_function_random(tmp_path, k3):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run("function", "random", k3, "--d", 2, "--kind", "eigenmode", "--mode", 1, "--seed", 3, "-o", p) == 0
    assert a.read_bytes() == b.read_bytes()
    out = tmp_path / "r.json"
    assert run("certify", k3, a, "-o", out) == 0
    assert json.loads(out.read_text())["certificate"]["verdict"] == "Marginal"


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "matpoincare", "chain", "build", "--name", "complete",
                           "--n", "4", "-o", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["n"] == 4
    proc = subprocess.run([sys.executable, "-m", "matpoincare", "spectral"], capture_output=True, text=True)
    assert proc.returncode == 2

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qsl.cli import fmt, main

DIRICHLET = {"alpha": [[1, 0], [0, 0], [0, 0], [0, 0]], "beta": [[0, 0], [0, 0], [1, 0], [0, 0]]}
STEP = [
    {"range": [0, 0.5], "rule": {"kind": "constant", "value": 0}},
    {"range": [0.5, 1], "rule": {"kind": "constant", "value": 1}},
]


def write(tmp_path, doc, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def laplace_doc(interval=(0, math.pi), **task):
    return {
        "coefficients": {"interval": list(interval), "p": 1, "Q": 0},
        "boundary": DIRICHLET,
        "task": task,
    }


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0].split(","), np.array([[float(x) if x not in ("true", "false") else x == "true" for x in ln.split(",")] for ln in lines[1:]])


def test_fmt():
    assert fmt(-0.0) == "0" and fmt(1.0) == "1" and fmt(1 / 3) == "0.333333333333333"


class TestSpectrum:
    def test_laplacian(self, tmp_path, capsys):
        out = tmp_path / "eig.csv"
        assert main(["spectrum", write(tmp_path, laplace_doc(window=[0.5, 30])), "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["lambda_re", "lambda_im", "residual", "possibly_multiple"]
        assert np.allclose(rows[:, 0], [1, 4, 9, 16, 25], atol=1e-8)
        assert "count: 5" in capsys.readouterr().out

    def test_delta_even_rows(self, tmp_path):
        doc = laplace_doc((0, 1), window=[1, 200])
        doc["coefficients"]["Q"] = STEP
        out = tmp_path / "eig.csv"
        assert main(["spectrum", write(tmp_path, doc), "--out", str(out)]) == 0
        _, rows = read_csv(out)
        # rows 2 and 4 (1-based) are the antisymmetric modes
        assert np.allclose(rows[1::2, 0], [(2 * np.pi) ** 2, (4 * np.pi) ** 2], atol=1e-7)

    def test_coupled_summary(self, tmp_path, capsys):
        doc = laplace_doc(window=[0.5, 30])
        doc["boundary"] = {"K": [[0, 0], [1, 0], [1, 0], [0, 0]]}
        assert main(["spectrum", write(tmp_path, doc), "--out", str(tmp_path / "e.csv")]) == 0
        assert "selfadjoint, coupled" in capsys.readouterr().out

    def test_missing_window(self, tmp_path, capsys):
        out = tmp_path / "e.csv"
        assert main(["spectrum", write(tmp_path, laplace_doc()), "--out", str(out)]) == 2
        assert "task.window" in capsys.readouterr().err
        assert not out.exists()

    def test_two_boundary_forms(self, tmp_path, capsys):
        doc = laplace_doc(window=[1, 2])
        doc["boundary"] = dict(DIRICHLET, K=[[1, 0], [0, 0], [0, 0], [1, 0]])
        assert main(["spectrum", write(tmp_path, doc)]) == 2
        assert "boundary" in capsys.readouterr().err

    def test_deterministic(self, tmp_path):
        path = write(tmp_path, laplace_doc(window=[0.5, 30]))
        main(["spectrum", path, "--out", str(tmp_path / "a.csv")])
        main(["spectrum", path, "--out", str(tmp_path / "b.csv")])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestGreen:
    def test_laplace_grid(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        path = write(tmp_path, laplace_doc((0, 1), **{"lambda": 0}))
        assert main(["green", path, "--out", str(out), "--grid", "51"]) == 0
        data = json.loads(out.read_text())
        t, s = np.array(data["t"]), np.array(data["s"])
        T, S = np.meshgrid(t, s, indexing="ij")
        exact = np.where(S <= T, S * (1 - T), T * (1 - S))
        assert np.max(np.abs(np.array(data["gamma_re"]) - exact)) <= 1e-8
        assert data["lambda"] == [0.0, 0.0]
        printed = capsys.readouterr().out
        defect = float(printed.split("symmetry defect: ")[1].split()[0])
        assert defect <= 1e-7

    def test_collision(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["green", write(tmp_path, laplace_doc(**{"lambda": 1})), "--out", str(out)]) == 3
        assert "eigenvalue" in capsys.readouterr().err
        assert not out.exists()


class TestResolve:
    def test_constant_forcing(self, tmp_path):
        out = tmp_path / "y.csv"
        path = write(tmp_path, laplace_doc((0, 1), **{"lambda": 0, "f": 1}))
        assert main(["resolve", path, "--out", str(out), "--grid", "21"]) == 0
        header, rows = read_csv(out)
        assert header == ["t", "re_y", "im_y", "re_d1y", "im_d1y"]
        t = rows[:, 0]
        assert np.max(np.abs(rows[:, 1] - t * (1 - t) / 2)) <= 1e-8

    def test_zero_forcing(self, tmp_path):
        out = tmp_path / "y.csv"
        path = write(tmp_path, laplace_doc((0, 1), **{"lambda": -1, "f": "zero"}))
        assert main(["resolve", path, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert np.all(rows[:, 1:] == 0)

    def test_dissipative_residual(self, tmp_path, capsys):
        doc = laplace_doc((0, 1), **{"lambda": [0, -1], "f": "t"})
        doc["boundary"] = {"K": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]}
        assert main(["resolve", write(tmp_path, doc), "--out", str(tmp_path / "y.csv")]) == 0
        printed = capsys.readouterr().out
        assert float(printed.split("residual: ")[1].split()[0]) <= 1e-6

    def test_lambda_dependent_k(self, tmp_path, capsys):
        doc = laplace_doc((0, 1), **{"lambda": [0, -1], "f": 1})
        doc["boundary"] = {"K_lambda": {"K0": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]], "K1": [[0, 0.1], [0, 0], [0, 0], [0, 0]]}}
        assert main(["resolve", write(tmp_path, doc), "--out", str(tmp_path / "y.csv")]) == 0

    def test_bad_preset(self, tmp_path, capsys):
        path = write(tmp_path, laplace_doc((0, 1), **{"lambda": 0.5, "f": "gauss"}))
        assert main(["resolve", path]) == 2
        assert "task.f" in capsys.readouterr().err


class TestClassify:
    def run(self, tmp_path, K):
        doc = {"boundary": {"K": K}}
        out = tmp_path / "c.json"
        assert main(["classify", write(tmp_path, doc), "--out", str(out)]) == 0
        return json.loads(out.read_text())

    def test_identity(self, tmp_path):
        r = self.run(tmp_path, [[1, 0], [0, 0], [0, 0], [1, 0]])
        assert r["selfadjoint"] and r["separated"] and r["K_a"] == [1.0, 0.0] and r["K_b"] == [1.0, 0.0]

    def test_half_one(self, tmp_path):
        r = self.run(tmp_path, [[0.5, 0], [0, 0], [0, 0], [1, 0]])
        assert r["dissipative"] and not r["selfadjoint"] and r["separated"]

    def test_shear(self, tmp_path):
        r = self.run(tmp_path, [[1, 0], [0.1, 0], [0, 0], [1, 0]])
        assert not r["selfadjoint"] and not r["dissipative"] and not r["separated"]

    def test_separated_shorthand(self, tmp_path):
        doc = {"boundary": {"K_a": [0, 1], "K_b": -1}}
        out = tmp_path / "c.json"
        assert main(["classify", write(tmp_path, doc), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["K_a"] == [0.0, 1.0]

    def test_malformed(self, tmp_path, capsys):
        doc = {"boundary": {"K": [[1, 0], [0, 0], [1, 0]]}}
        assert main(["classify", write(tmp_path, doc)]) == 2
        assert "boundary.K" in capsys.readouterr().err


class TestConverge:
    def doc(self, **task):
        d = laplace_doc((0, 1), **task)
        d["coefficients"]["Q"] = STEP
        return d

    def test_constant_family(self, tmp_path):
        out = tmp_path / "r.csv"
        doc = self.doc(family={"kind": "constant"}, samples=2)
        assert main(["converge", write(tmp_path, doc), "--out", str(out), "--grid", "51"]) == 0
        header, rows = read_csv(out)
        assert header == ["eps", "c1_l1", "c2_l1", "c3_l1", "c4_bc", "kernel_gap", "resolvent_bound"]
        assert np.all(rows[:, 1:] == 0)

    def test_mollified_monotone(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["converge", write(tmp_path, self.doc(samples=2)), "--out", str(out)]) == 0
        _, rows = read_csv(out)
        for col in (2, 3, 5, 6):
            assert np.all(np.diff(rows[:, col]) < 0)
        assert "final resolvent bound" in capsys.readouterr().out

    def test_bad_eps(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["converge", write(tmp_path, self.doc(eps=[0.1, 0.2])), "--out", str(out)]) == 2
        assert "task.eps" in capsys.readouterr().err
        assert not out.exists()

    def test_lambda_in_spectrum(self, tmp_path, capsys):
        doc = self.doc(**{"lambda": 11.77185916375068781, "samples": 0})
        assert main(["converge", write(tmp_path, doc)]) == 3


def test_invalid_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["classify", str(p)]) == 2


def test_console_script(tmp_path):
    path = write(tmp_path, {"boundary": {"K": [[0, 0], [1, 0], [1, 0], [0, 0]]}})
    proc = subprocess.run(
        [sys.executable, "-m", "qsl.cli", "classify", path], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classification"] == "selfadjoint, coupled"

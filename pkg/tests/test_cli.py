import json
import os

import pytest

from cartanvp import cli
from cartanvp import fixtures as fx


@pytest.fixture
def example1_spec(tmp_path):
    spec = fx.load("example1")
    path = tmp_path / "example1.json"
    path.write_text(json.dumps(spec))
    return str(path)


def run(argv):
    return cli.run(argv)


class TestAnalyze:
    def test_json_report(self, example1_spec):
        code, out = run(["analyze", "--spec", example1_spec])
        assert code == 0
        report = json.loads(out)
        assert report["classification"]["degree_case"] == "maximally_characteristic"
        assert report["classification"]["proper"] == "proper"
        assert report["classification"]["q"] == 2
        assert len(report["annihilator_basis"]) == 2
        assert report["frobenius"]["verdict"] == "not_integrable"
        assert report["seed"] == 50343

    def test_text_mirrors_json(self, example1_spec):
        code, out = run(["analyze", "--spec", example1_spec, "--format", "text"])
        assert code == 0
        assert "maximally_characteristic" in out
        assert "annihilator basis:" in out

    def test_byte_identical_reruns(self, example1_spec):
        _, out1 = run(["analyze", "--spec", example1_spec])
        _, out2 = run(["analyze", "--spec", example1_spec])
        assert out1.encode() == out2.encode()

    def test_seed_flag_echoed(self, example1_spec):
        _, out = run(["analyze", "--spec", example1_spec, "--seed", "7"])
        assert json.loads(out)["seed"] == 7

    def test_box_flag(self, example1_spec):
        code, out = run(["analyze", "--spec", example1_spec, "--box", "0.5,2.0"])
        assert code == 0
        report = json.loads(out)
        assert report["rank_certificate"]["box"] == [0.5, 2.0]

    def test_env_seed_override(self, example1_spec, monkeypatch):
        monkeypatch.setenv("CARTAN_VP_SEED", "99")
        _, out = run(["analyze", "--spec", example1_spec])
        assert json.loads(out)["seed"] == 99
        # explicit flag wins over the environment
        _, out2 = run(["analyze", "--spec", example1_spec, "--seed", "3"])
        assert json.loads(out2)["seed"] == 3


class TestEl:
    def test_equations_listed(self, example1_spec):
        code, out = run(["el", "--spec", example1_spec])
        assert code == 0
        report = json.loads(out)
        assert len(report["equations"]) == 3
        assert report["route"] == "minors"
        assert report["minor_vs_pullback_constant"] == "1"
        assert "Dz1_x1" in json.dumps(report["P"])

    def test_malformed_index_is_parse_error(self, tmp_path):
        spec = fx.load("example1")
        spec["factors"][0][0]["index"] = ["nope"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(spec))
        code, out = run(["el", "--spec", str(path)])
        assert code in (1, 2)
        assert "error" in json.loads(out)

    def test_parse_error_has_position(self, tmp_path):
        spec = fx.load("example1")
        spec["factors"][0][0]["coeff"] = "1 + * 2"
        path = tmp_path / "bad2.json"
        path.write_text(json.dumps(spec))
        code, out = run(["el", "--spec", str(path)])
        assert code == 2
        report = json.loads(out)
        assert report["position"] is not None


class TestAnnihilatorFrobenius:
    def test_annihilator(self, example1_spec):
        code, out = run(["annihilator", "--spec", example1_spec])
        report = json.loads(out)
        assert code == 0 and report["rank"] == 2
        assert report["certificate"]["seed"] == 50343

    def test_frobenius_exit_code(self, example1_spec):
        code, out = run(["frobenius", "--spec", example1_spec])
        assert code == 1  # generic coefficients: not integrable
        assert json.loads(out)["verdict"] == "not_integrable"
        code2, out2 = run(["frobenius", "--spec", example1_spec, "--instance", "constant"])
        assert code2 == 0
        assert json.loads(out2)["verdict"] == "integrable"


class TestVerify:
    def test_exact_solution(self, example1_spec, tmp_path):
        section = {
            "components": {
                "z1": "-1/2*x1 + 1/3*x2",
                "z2": "-2*x1 - 1/5*x2",
                "z3": "x1 - 3/4*x2",
            }
        }
        spath = tmp_path / "section.json"
        spath.write_text(json.dumps(section))
        code, out = run(
            ["verify", "--spec", example1_spec, "--instance", "constant", "--section", str(spath)]
        )
        assert code == 0
        report = json.loads(out)
        assert report["critical"] is True
        assert report["cross_checked"] is True

    def test_perturbed_solution(self, example1_spec, tmp_path):
        # perturb two components so the slope matrix has full rank
        section = {
            "components": {
                "z1": "-1/2*x1 + 1/3*x2 + x1^2",
                "z2": "-2*x1 - 1/5*x2 + x2^2",
                "z3": "x1 - 3/4*x2",
            }
        }
        spath = tmp_path / "bad_section.json"
        spath.write_text(json.dumps(section))
        code, out = run(
            ["verify", "--spec", example1_spec, "--instance", "constant", "--section", str(spath)]
        )
        assert code == 1
        report = json.loads(out)
        assert report["critical"] is False
        assert any(r != "0" for r in report["residuals"])

    def test_wrong_chart_section(self, example1_spec, tmp_path):
        spath = tmp_path / "wrong.json"
        spath.write_text(json.dumps({"components": {"z1": "0"}}))
        code, out = run(
            ["verify", "--spec", example1_spec, "--instance", "constant", "--section", str(spath)]
        )
        assert code in (1, 2)


class TestIntegrate:
    def test_affine_patch_csv(self, example1_spec, tmp_path):
        seedfile = {
            "components": {"z1": "0", "z2": "0", "z3": "0"},
            "grid": {"x1": [0.0, 1.0, 6], "x2": [0.0, 1.0, 6]},
        }
        spath = tmp_path / "seed.json"
        spath.write_text(json.dumps(seedfile))
        out_csv = tmp_path / "patch.csv"
        code, _ = run(
            [
                "integrate",
                "--spec", example1_spec,
                "--instance", "constant",
                "--section", str(spath),
                "--format", "csv",
                "--out", str(out_csv),
                "--step", "0.001",
            ]
        )
        assert code == 0
        lines = out_csv.read_text().strip().split("\n")
        assert lines[0].startswith("# {")
        assert len(lines) == 2 + 36
        # every residual column below the tolerance
        header = lines[1].split(",")
        res_cols = [i for i, h in enumerate(header) if h.startswith("residual_")]
        for row in lines[2:]:
            vals = row.split(",")
            assert all(abs(float(vals[i])) < 1e-6 for i in res_cols)

    def test_json_summary(self, example1_spec, tmp_path):
        seedfile = {
            "components": {"z1": "0", "z2": "0", "z3": "0"},
            "grid": {"x1": [0.0, 1.0, 4], "x2": [0.0, 1.0, 4]},
        }
        spath = tmp_path / "seed.json"
        spath.write_text(json.dumps(seedfile))
        code, out = run(
            ["integrate", "--spec", example1_spec, "--instance", "constant",
             "--section", str(spath), "--step", "0.01"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["nodes"] == 16
        assert report["max_residual"] < 1e-6


class TestIntegrateThetaInput:
    def test_rotation_helix(self, tmp_path):
        # action form of the planar rotation field, given as theta directly:
        # the characteristics swept over the time axis are helices
        import math

        spec = {
            "chart": {"base": ["t"], "fiber_z": ["x", "y"], "fiber_w": []},
            "theta": [
                {"coeff": "-1/2*y", "index": ["x"]},
                {"coeff": "1/2*x", "index": ["y"]},
                {"coeff": "-1/2*x^2 - 1/2*y^2", "index": ["t"]},
            ],
            "options": {"seed": 50343},
        }
        path = tmp_path / "rotation.json"
        path.write_text(json.dumps(spec))
        seedfile = {
            "components": {"x": "1", "y": "0"},
            "grid": {"t": [0.0, 6.0, 61]},
        }
        spath = tmp_path / "seed.json"
        spath.write_text(json.dumps(seedfile))
        out_csv = tmp_path / "helix.csv"
        code, _ = run(
            ["integrate", "--spec", str(path), "--section", str(spath),
             "--format", "csv", "--out", str(out_csv), "--tol", "0.01"]
        )
        assert code == 0
        rows = out_csv.read_text().strip().split("\n")[2:]
        worst = 0.0
        for row in rows:
            t, x, y = (float(v) for v in row.split(",")[:3])
            worst = max(worst, abs(x - math.cos(t)), abs(y - math.sin(t)))
        assert worst < 1e-8  # integrator accuracy, far below the FD tolerance


class TestLiouville:
    def test_rotation_field(self, tmp_path):
        spec = {
            "phase": ["x", "y"],
            "omega": [{"coeff": "1", "index": ["x", "y"]}],
            "field": {"x": "-y", "y": "x"},
        }
        path = tmp_path / "liouville.json"
        path.write_text(json.dumps(spec))
        code, out = run(["liouville", "--spec", str(path)])
        assert code == 0
        report = json.loads(out)
        assert report["is_liouville"] is True
        assert report["hodge_identity"] is True
        assert report["characteristic_field"]["t"] == "1"

    def test_non_liouville_field(self, tmp_path):
        spec = {
            "phase": ["x", "y"],
            "omega": [{"coeff": "1", "index": ["x", "y"]}],
            "field": {"x": "x", "y": "0"},
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(spec))
        code, out = run(["liouville", "--spec", str(path)])
        assert code == 1
        assert json.loads(out)["is_liouville"] is False

    def test_supplied_sigma(self, tmp_path):
        spec = {
            "phase": ["x", "y"],
            "omega": [{"coeff": "1", "index": ["x", "y"]}],
            "field": {"x": "-y", "y": "x"},
            "sigma": [{"coeff": "x", "index": ["y"]}],
        }
        path = tmp_path / "sigma.json"
        path.write_text(json.dumps(spec))
        code, out = run(["liouville", "--spec", str(path)])
        assert code == 0
        report = json.loads(out)
        assert report["hodge_identity"] is True
        # theta carries the supplied primitive, not the homotopy one
        assert {"coeff": "x", "index": ["y"]} in report["theta"]

    def test_zero_field(self, tmp_path):
        spec = {
            "phase": ["x", "y"],
            "omega": [{"coeff": "1", "index": ["x", "y"]}],
            "field": {"x": "0", "y": "0"},
        }
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(spec))
        code, out = run(["liouville", "--spec", str(path)])
        assert code == 0
        report = json.loads(out)
        # theta reduces to the primitive of the volume form
        assert report["theta"] == [
            {"coeff": "-1/2*y", "index": ["x"]},
            {"coeff": "1/2*x", "index": ["y"]},
        ]


class TestEntryPoint:
    def test_console_script_deterministic_across_processes(self, example1_spec):
        import subprocess
        import sys

        cmd = [sys.executable, "-m", "cartanvp.cli", "analyze", "--spec", example1_spec]
        env = dict(os.environ, PYTHONHASHSEED="0")
        out1 = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
        env2 = dict(os.environ, PYTHONHASHSEED="4242")
        out2 = subprocess.run(cmd, capture_output=True, env=env2, check=True).stdout
        assert out1 == out2
        assert json.loads(out1)["classification"]["q"] == 2


class TestExample:
    @pytest.mark.parametrize("name", fx.FIXTURE_NAMES)
    def test_examples_pass(self, name):
        code, out = run(["example", name])
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True

    def test_text_shows_discrepancies(self):
        code, out = run(["example", "example3", "--format", "text"])
        assert code == 0
        assert "discrepancy" in out

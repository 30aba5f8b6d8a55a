import json
import subprocess
from pathlib import Path

import numpy as np
import pytest

from fkmcone.certify import FKM_COLUMNS, PRODUCT_COLUMNS
from fkmcone.cli import run


@pytest.fixture()
def invoke(capsys):
    def _invoke(*args):
        code = run([str(a) for a in args])
        return code, capsys.readouterr().out

    return _invoke


class TestCertifyCommand:
    def test_certified(self, invoke):
        code, out = invoke("certify", "--m", 9, "--k", 1)
        assert code == 0
        record = json.loads(out)
        assert record["verdict"] == "certified"
        assert record["n"] == 15

    def test_invalid_exit_code(self, invoke):
        code, out = invoke("certify", "--m", 2, "--k", 1)
        assert code == 2
        assert json.loads(out)["verdict"] == "invalid"

    def test_inconclusive_exit_code(self, invoke):
        code, _ = invoke("certify", "--m", 2, "--k", 2)
        assert code == 1

    def test_product(self, invoke):
        code, out = invoke("certify", "--factors", "3,3,3,3", "--format", "csv")
        assert code == 0
        header, row = out.strip().splitlines()
        assert header == ",".join(PRODUCT_COLUMNS)
        assert row.startswith("3;3;3;3,21,")

    def test_text_format(self, invoke):
        code, out = invoke("certify", "--m", 9, "--k", 1, "--format", "text")
        assert code == 0
        assert "certified" in out

    def test_needs_arguments(self, invoke):
        code, _ = invoke("certify", "--m", 9)
        assert code == 2

    def test_unknown_flag(self, invoke):
        code, _ = invoke("certify", "--bogus")
        assert code == 2


class TestVerifyCommand:
    def test_passes(self, invoke):
        code, out = invoke(
            "verify", "--m", 2, "--k", 2, "--samples", 100, "--seed", 7, "--tol", 1e-9
        )
        assert code == 0
        record = json.loads(out)
        assert record["passed"]
        assert record["tolerances"]["IDENTITY_TOL"] == 1e-9

    def test_system_file_round_trip(self, invoke, tmp_path):
        path = tmp_path / "system.json"
        code, _ = invoke("construct", "--m", 3, "--k", 3, "--out", path)
        assert code == 0
        assert path.exists()
        _, from_file = invoke("verify", "--system", path, "--samples", 20)
        _, from_args = invoke("verify", "--m", 3, "--k", 3, "--samples", 20)
        assert from_file == from_args

    def test_invalid_system(self, invoke):
        code, _ = invoke("verify", "--m", 2, "--k", 1)
        assert code == 2


class TestConstructCommand:
    def test_stdout(self, invoke):
        code, out = invoke("construct", "--m", 2, "--k", 2)
        assert code == 0
        data = json.loads(out)
        assert (data["m"], data["k"]) == (2, 2)


class TestVanishingCommand:
    def test_no_angle(self, invoke):
        code, out = invoke("vanishing", "--dim", 12, "--alpha2", 30)
        assert code == 1
        assert json.loads(out)["reason"] == "start-infeasible"

    def test_angle(self, invoke):
        code, out = invoke(
            "vanishing", "--dim", 12, "--alpha2", 17.85, "--profile", "limit-form"
        )
        assert code == 0
        assert json.loads(out)["exists"]

    def test_negative_alpha(self, invoke):
        code, _ = invoke("vanishing", "--dim", 12, "--alpha2", -1)
        assert code == 2

    def test_table_row(self, invoke):
        code, out = invoke(
            "vanishing", "--dim", 12, "--alpha2", 19.44, "--profile", "table-12"
        )
        assert code == 1
        record = json.loads(out)
        assert record["row_alpha_sq"] == pytest.approx(20.25)

    def test_needs_dim_and_alpha(self, invoke):
        code, _ = invoke("vanishing", "--dim", 12)
        assert code == 2

    def test_numeric_profile(self, invoke):
        code, out = invoke(
            "vanishing", "--profile", "numeric", "--m", 3, "--k", 3, "--points", 60
        )
        assert code in (0, 1)
        record = json.loads(out)
        assert record["profile"] == "numeric"
        assert record["dim"] == 22
        assert record["alpha_sq"] == pytest.approx(60.0, abs=1e-6)

    def test_numeric_needs_system(self, invoke):
        code, _ = invoke("vanishing", "--profile", "numeric")
        assert code == 2


class TestRadiusCommand:
    def test_closed_form(self, invoke):
        code, out = invoke("radius", "--m", 9, "--n", 15)
        assert code == 0
        record = json.loads(out)
        assert record["N_rad"] == pytest.approx(np.arctan(np.sqrt(3) / 2))

    def test_scan(self, invoke):
        code, out = invoke("radius", "--m", 2, "--k", 2, "--samples", 5)
        assert code == 0
        record = json.loads(out)
        assert record["max_deviation"] <= 1e-6
        assert record["theta_first"] == pytest.approx(record["N_rad"], abs=1e-6)
        assert max(abs(v) for v in record["residuals"].values()) <= 1e-6
        assert len(record["scans"]) == 5
        assert all(s["theta_first"] is not None for s in record["scans"])


class TestCurvatureCommand:
    def test_alpha_sq(self, invoke):
        code, out = invoke("curvature", "--m", 3, "--k", 3, "--samples", 2)
        assert code == 0
        record = json.loads(out)
        assert record["alpha_sq"] == pytest.approx(60.0, abs=1e-4)
        rows = record["profile"]
        assert len(rows) == 9
        assert rows[0]["det_min"] == pytest.approx(1.0)
        assert set(rows[0]) == {"t", "beta", "frob_sq", "trace", "det_min"}

    def test_csv_rows_per_t(self, invoke):
        args = ["curvature", "--m", 3, "--k", 3, "--samples", 2, "--t-points", 5]
        code, out = invoke(*args, "--format", "csv")
        assert code == 0
        header, *rows = out.strip().splitlines()
        assert header == "t,beta,frob_sq,trace,det_min"
        assert len(rows) == 5
        det_min = [float(r.split(",")[-1]) for r in rows]
        assert det_min[0] == pytest.approx(1.0)
        assert det_min == sorted(det_min, reverse=True)


class TestSweepCommand:
    def test_csv_header(self, invoke):
        code, out = invoke("sweep", "--m", "2:3", "--k", "1:3", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == ",".join(FKM_COLUMNS)
        assert len(lines) == 1 + 6

    def test_products_json(self, invoke):
        code, out = invoke("sweep", "--dim", "21:23")
        assert code == 0
        records = json.loads(out)
        assert [r["factors"] for r in records] == [[3, 3, 3, 3], [], [3, 9]]
        assert [r["verdict"] for r in records] == ["certified", "invalid", "certified"]

    def test_needs_ranges(self, invoke):
        code, _ = invoke("sweep", "--m", "2:3")
        assert code == 2


def test_installed_command_is_deterministic():
    """Two runs of the installed entry point print identical reports."""
    args = ["fkmcone", "certify", "--m", "3", "--k", "3"]
    outputs = [
        subprocess.run(
            args, capture_output=True, text=True, cwd=Path(__file__).parent.parent
        )
        for _ in range(2)
    ]
    assert all(r.returncode == 0 for r in outputs), outputs[0].stderr
    assert outputs[0].stdout == outputs[1].stdout

import csv
import io
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from birkhoff import LaurentSeries, MatrixLoop, monomial
from birkhoff.cli import run_command
from birkhoff.io import LoopSpec, emit_loop_spec

GOLDEN = Path(__file__).parent / "golden"


def write_loop(path, loop, basis=None):
    path.write_text(emit_loop_spec(LoopSpec.from_loop(loop, basis)), encoding="utf-8")
    return str(path)


def run(argv):
    out = io.StringIO()
    code = run_command(argv, stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), text


@pytest.fixture
def golden(tmp_path):
    for p in GOLDEN.glob("*.loop"):
        shutil.copy(p, tmp_path / p.name)
    return tmp_path


class TestFactor:
    def test_scalar_linear(self, golden):
        code, rep, _ = run(["factor", "--input", str(golden / "z_minus_2.loop"), "--mode", "scalar"])
        assert code == 0
        assert rep["pass"] and rep["error"] is None
        assert rep["result"]["kappa"] == 0
        assert rep["residuals"]["reconstruction"] <= 1e-9
        assert rep["verify"]["passed"]

    def test_matrix_on_circle_zero(self, golden):
        code, rep, _ = run(["factor", "--mode", "matrix", "--bound", "4", "--input", str(golden / "one_minus_z.loop")])
        assert code == 3
        assert rep["error"]["type"] == "NotInvertibleError"
        assert rep["pass"] is False

    def test_matrix_planted(self, golden):
        code, rep, _ = run(["factor", "--input", str(golden / "planted_2_0_m1.loop")])
        assert code == 0
        assert rep["result"]["indices"] == [2, 0, -1]
        assert rep["verify"]["checks"]["index_sum"]

    def test_group_mode(self, golden, tmp_path):
        trace = tmp_path / "trace.csv"
        code, rep, _ = run(
            ["factor", "--mode", "group", "--radius", "0.2", "--input", str(golden / "sl2_near_identity.loop"),
             "--trace-csv", str(trace)]
        )
        assert code == 0
        assert rep["result"]["indices"] == [0, 0]
        rows = list(csv.reader(trace.open()))
        assert rows[0] == ["sample_index", "theta", "residual"]
        assert len(rows) == 257
        assert max(float(r[2]) for r in rows[1:]) <= 1e-8

    def test_group_mode_out_of_ball(self, golden):
        code, rep, _ = run(["factor", "--mode", "group", "--input", str(golden / "sl2_near_identity.loop")])
        assert code == 4
        assert rep["error"]["type"] == "DomainError"

    def test_scalar_mode_needs_scalar(self, golden):
        code, rep, _ = run(["factor", "--mode", "scalar", "--input", str(golden / "diag_2_m1.loop")])
        assert code == 2

    def test_canonical_obstruction_is_failure(self, tmp_path):
        path = write_loop(tmp_path / "d.loop", MatrixLoop.monomial_diag((3, -3)))
        code, rep, _ = run(["factor", "--bound", "1", "--input", path])
        assert code == 4

    def test_band_cap_overflow(self, golden):
        code, rep, _ = run(["factor", "--mode", "scalar", "--band-cap", "4", "-i", str(golden / "exp_mixed.loop")])
        assert code == 4
        assert rep["config"]["band_cap"] == 4


class TestOtherCommands:
    def test_winding(self, golden):
        code, rep, _ = run(["winding", "--input", str(golden / "z_pow_5.loop")])
        assert code == 0
        assert rep["result"]["winding"] == 5

    def test_winding_matrix(self, golden):
        code, rep, _ = run(["winding", "--input", str(golden / "diag_2_m1.loop")])
        assert rep["result"]["winding"] == 1

    def test_indices(self, golden):
        code, rep, _ = run(["indices", "--input", str(golden / "diag_2_m1.loop"), "--enumeration", "spread-desc"])
        assert code == 0
        assert rep["result"]["indices"] == [2, -1]

    def test_project(self, tmp_path):
        path = write_loop(tmp_path / "f.loop", LaurentSeries([2, 0, 5, 1], kmin=-2))
        code, rep, _ = run(["project", "--input", path])
        assert code == 0
        assert rep["result"]["plus"]["kmin"] == 0 and rep["result"]["plus"]["kmax"] == 1
        assert rep["result"]["ominus"]["kmin"] == -2 and rep["result"]["ominus"]["kmax"] == -2

    def test_norms(self, tmp_path):
        path = write_loop(tmp_path / "f.loop", LaurentSeries([3, 0, 0, 4], kmin=-1))
        code, rep, _ = run(["norms", "--input", path])
        assert code == 0
        assert rep["norms"]["wiener"] == 7
        assert set(rep["norms"]["annulus"]) == {"2", "4", "8"}

    def test_verify_round_trip(self, golden, tmp_path):
        loop = str(golden / "planted_2_0_m1.loop")
        _, _, text = run(["factor", "--input", loop])
        report = tmp_path / "report.json"
        report.write_text(text)
        code, rep, _ = run(["verify", "--input", loop, "--report", str(report)])
        assert code == 0
        assert rep["pass"]

    def test_verify_against_wrong_loop(self, golden, tmp_path):
        _, _, text = run(["factor", "--input", str(golden / "planted_2_0_m1.loop")])
        report = tmp_path / "report.json"
        report.write_text(text)
        path = write_loop(tmp_path / "other.loop", MatrixLoop.monomial_diag((2, 0, -1)))
        code, rep, _ = run(["verify", "--input", path, "--report", str(report)])
        assert code == 4
        assert not rep["pass"]

    def test_bch_check(self):
        code, rep, _ = run(["bch-check", "--pairs", "5"])
        assert code == 0
        assert rep["residuals"]["exp_oracle"] <= 1e-10
        assert rep["result"]["lipschitz_remainder"] < 0.5
        assert rep["result"]["lipschitz_bch"] <= 0.27


class TestExitCodes:
    def test_parse_error(self, tmp_path):
        p = tmp_path / "bad.loop"
        p.write_text('{"version": 1, "n": 1, "kmin": 0, "kmax": 2, "entries": [[[[1, 0], [2, 0]]]]}')
        code, rep, _ = run(["norms", "--input", str(p)])
        assert code == 2
        assert "entries[0][0]" in rep["error"]["message"]

    def test_missing_file(self, tmp_path):
        code, rep, _ = run(["norms", "--input", str(tmp_path / "nope.loop")])
        assert code == 2

    def test_usage_error(self, capsys):
        assert run_command(["factor"]) == 2
        assert run_command(["frobnicate"]) == 2

    def test_worst_code_wins(self, golden):
        code, reps, _ = run(["winding", "-i", str(golden / "z_pow_5.loop"), str(golden / "one_minus_z.loop")])
        assert code == 3
        assert [r["pass"] for r in reps] == [True, False]

    def test_internal_error_dumps(self, golden, monkeypatch, capsys):
        import birkhoff.cli as cli

        def boom(spec, args):
            raise RuntimeError("unexpected")

        monkeypatch.setitem(cli.HANDLERS, "norms", boom)
        code, rep, _ = run(["norms", "-i", str(golden / "z_pow_5.loop")])
        assert code == 5
        assert "Traceback" in capsys.readouterr().err


class TestDeterminism:
    def test_identical_runs(self, golden):
        argv = ["factor", "-i", *sorted(str(p) for p in golden.glob("*.loop") if "one_minus" not in p.name)]
        a = run(argv)[2]
        b = run(argv)[2]
        assert a == b

    def test_jobs_preserve_order(self, golden):
        paths = [str(golden / n) for n in ("z_pow_5.loop", "diag_2_m1.loop", "z_minus_2.loop", "exp_mixed.loop")]
        _, serial, _ = run(["winding", "-i", *paths])
        _, parallel, _ = run(["winding", "-j", "4", "-i", *paths])
        strip = lambda reps: [{k: v for k, v in r.items() if k != "command"} for r in reps]  # noqa: E731
        assert strip(serial) == strip(parallel)
        assert [r["result"]["winding"] for r in parallel] == [5, 1, 0, 0]

    def test_digest_and_timings(self, golden):
        path = str(golden / "z_pow_5.loop")
        _, plain, _ = run(["winding", "-i", path])
        _, timed, _ = run(["winding", "-i", path, "--timings"])
        assert "timings" not in plain
        assert timed["timings"]["seconds"] >= 0
        assert len(plain["input"]["sha256"]) == 64

    def test_multi_input_trace_files(self, tmp_path):
        paths = [write_loop(tmp_path / f"g{i}.loop", monomial(i)) for i in (1, 2)]
        trace = tmp_path / "t.csv"
        code, _, _ = run(["factor", "--mode", "scalar", "--trace-csv", str(trace), "-i", *paths])
        assert code == 0
        assert (tmp_path / "t.0.csv").exists() and (tmp_path / "t.1.csv").exists()
        assert np.isfinite(np.loadtxt(tmp_path / "t.1.csv", delimiter=",", skiprows=1)).all()

import csv
import io
import json

import pytest

from qrelay import bounds, cli, qlin
from qrelay.cli import main
from qrelay.errors import InfeasibleError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestEval:
    def test_wired_pdf(self, capsys):
        code, out, _ = run(capsys, "eval", "--channel", "fixture:wired_relay.json",
                           "--config", "fixture:wired_pdf.json")
        assert code == 0
        (row,) = rows_of(out)
        assert float(row["rate"]) == pytest.approx(2.0, abs=1e-12)
        assert len(row["manifest"]) == 16

    def test_mf_matches_closed_form(self, capsys):
        code, out, _ = run(capsys, "eval", "--channel", "fixture:depolarizing.json",
                           "--config", "fixture:depolarizing_mf.json", "--p", "0.2", "--q", "0.6")
        assert code == 0
        (row,) = rows_of(out)
        expect = bounds.eval_depolarizing_closed_form(0.2, 0.6)
        assert float(row["rate"]) == pytest.approx(expect, abs=1e-9)

    def test_malformed_kraus_exits_2(self, capsys, tmp_path):
        doc = json.loads(cli.read_text("fixture:wired_relay.json"))
        k0 = qlin.complex_from_json(doc["kraus"][0], 2)
        doc["kraus"][0] = qlin.complex_to_json(k0 * 1.3 ** 0.5)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "eval", "--channel", str(path),
                           "--config", "fixture:wired_pdf.json")
        assert code == 2
        assert "residual=" in err and "invariant=" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--channel", str(tmp_path / "nope.json"),
                           "--config", "fixture:wired_pdf.json")
        assert code == 2 and err


class TestSweep:
    def test_grid_rows(self, capsys):
        code, out, _ = run(capsys, "sweep", "--p-grid", "0,0.25,0.5", "--q-grid", "0,0.4",
                           "--no-optimize")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 6
        by = {(float(r["p"]), float(r["q"])): r for r in rows}
        assert float(by[0.0, 0.0]["closed_form"]) == pytest.approx(1.0)
        assert float(by[0.5, 0.4]["closed_form"]) == pytest.approx(0.0, abs=1e-12)
        for r in rows:
            assert float(r["mf_reference"]) == pytest.approx(float(r["closed_form"]), abs=1e-9)
            assert float(r["lhs"]) == pytest.approx(float(r["rhs"]), abs=1e-9)
            assert r["optimizer_best"] == ""

    @pytest.mark.parametrize("grid", ["", "0,1.5"])
    def test_bad_grid(self, capsys, grid):
        code, _, _ = run(capsys, "sweep", "--p-grid", grid, "--no-optimize")
        assert code == 2


class TestClassify:
    def _table(self, out):
        return {r["property"]: r for r in rows_of(out)}

    def test_wired_relay(self, capsys):
        code, out, _ = run(capsys, "classify", "--channel", "fixture:wired_relay.json")
        t = self._table(out)
        assert code == 0
        assert t["degraded"]["value"] == "no" and float(t["degraded"]["residual"]) >= 0.1

    def test_hadamard(self, capsys):
        _, out, _ = run(capsys, "classify", "--channel", "fixture:hadamard_bitpipe.json")
        t = self._table(out)
        assert t["degraded"]["value"] == "yes"
        assert t["hadamard"]["value"] == "yes"

    def test_orc_untestable_without_split(self, capsys):
        _, out, _ = run(capsys, "classify", "--channel", "fixture:bsc_cq.json")
        assert self._table(out)["orc"]["value"] == "not testable"


class TestSimulate:
    def test_bitpipe_is_error_free(self, capsys):
        code, out, _ = run(capsys, "simulate", "--config", "fixture:packing_bitpipe.json",
                           "--trials", "5")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 5
        for r in rows:
            assert float(r["error"]) <= 1.0
            if r["degenerate"] == "no":
                assert float(r["error"]) <= float(r["bound"]) + 1e-12

    def test_gentle(self, capsys):
        code, out, _ = run(capsys, "simulate", "--config", "fixture:gentle.json",
                           "--trials", "20", "--seed", "3")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 20 and all(r["holds"] == "yes" for r in rows)

    def test_n_override(self, capsys):
        code, out, _ = run(capsys, "simulate", "--config", "fixture:packing_plus.json",
                           "--trials", "2", "--n", "3")
        assert code == 0
        assert {r["n"] for r in rows_of(out)} == {"3"}


class TestReproducibility:
    def test_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["optimize", "--channel", "fixture:bsc_cq.json", "--bound", "pdf",
                         "--cards", "U=1,X1=1", "--restarts", "2", "--max-evals", "200",
                         "--seed", "7", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert rows_of(a.read_text())[-1]["restart"] == "best"

    def test_manifest_changes_with_seed(self):
        one = cli.RunManifest("eval", {"channel": "fixture:bsc_cq.json"}, 1, "x.csv")
        two = cli.RunManifest("eval", {"channel": "fixture:bsc_cq.json"}, 2, "x.csv")
        moved = cli.RunManifest("eval", {"channel": "fixture:bsc_cq.json"}, 1, "y.csv")
        assert one.digest != two.digest
        assert one.digest == moved.digest

    def test_infeasible_exit_code(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise InfeasibleError("no feasible point")
        monkeypatch.setattr(cli.optimizer, "maximize", boom)
        code, _, err = run(capsys, "optimize", "--channel", "fixture:bsc_cq.json",
                           "--bound", "pdf")
        assert code == 3 and "infeasible" in err


def test_parse_cards():
    assert cli.parse_cards("U=2, X0=3,G1=4") == {"card_U": 2, "card_X0": 3, "dim_G1": 4}

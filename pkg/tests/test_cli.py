"""
Tests for the command line
"""

import json

import pytest

from api.cli import EXIT_ERROR, EXIT_IMPRECISE, EXIT_OK, main
from tests.programs import IDENTITY_SOURCE, WORKED_SOURCE


@pytest.fixture
def worked_file(tmp_path):
    path = tmp_path / "worked.scm"
    path.write_text(WORKED_SOURCE)
    return path


class TestAnalyze:
    def test_prints_flows(self, worked_file, capsys):
        assert main(["analyze", str(worked_file), "--value-policy", "1cfa", "--kont-policy", "p4f"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "worked [1cfa/p4f]" in out
        assert "(y,4) -> {#t}" in out

    def test_imprecise_policy_exit_code(self, worked_file, capsys):
        code = main(["analyze", str(worked_file), "--value-policy", "1cfa", "--kont-policy", "naive",
                     "--check-precision"])
        assert code == EXIT_IMPRECISE
        assert "(y,4)" in capsys.readouterr().out

    def test_precise_policy_exit_code(self, worked_file):
        code = main(["analyze", str(worked_file), "--value-policy", "1cfa", "--kont-policy", "p4f",
                     "--check-precision"])
        assert code == EXIT_OK

    def test_json_to_stdout(self, worked_file, capsys):
        assert main(["analyze", str(worked_file), "--kont-policy", "aac", "--json", "-"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["program"] == "worked"
        assert report["kont_policy"] == "aac"
        assert report["flows"]["x"] == {"x": ["#f", "#t"]}

    def test_dot_and_trace(self, worked_file, tmp_path):
        dot, trace = tmp_path / "dsg.dot", tmp_path / "trace.jsonl"
        assert main(["analyze", str(worked_file), "--dot", str(dot), "--trace", str(trace)]) == EXIT_OK
        assert dot.read_text().startswith("digraph dsg {")
        lines = trace.read_text().splitlines()
        assert json.loads(lines[0])["label"] == 0

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "bad.scm"
        path.write_text("(let ([x #t]) x")
        assert main(["analyze", str(path)]) == EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_diagnostics_are_printed(self, tmp_path, capsys):
        path = tmp_path / "stuck.scm"
        path.write_text("(let ([a (#t #f)]) a)")
        assert main(["analyze", str(path)]) == EXIT_OK
        assert "warning: #t is not callable at 0" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "absent.scm")]) == EXIT_ERROR

    def test_bad_policy_name(self, worked_file):
        with pytest.raises(SystemExit):
            main(["analyze", str(worked_file), "--kont-policy", "2cfa"])


class TestBench:
    def test_bench_outputs(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "worked.scm").write_text(WORKED_SOURCE)
        (corpus / "identity.scm").write_text(IDENTITY_SOURCE)
        out, csv, dat = tmp_path / "report.json", tmp_path / "bench.csv", tmp_path / "bench.dat"
        code = main(["bench", "--corpus", str(corpus), "--out", str(out), "--csv", str(csv),
                     "--gnuplot", str(dat), "--workers", "1"])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert [r["program"] for r in report["rows"]] == ["identity", "worked"]
        assert csv.exists() and dat.exists()
        assert "AAC/P4F configurations" in capsys.readouterr().out

    def test_matrix_runs_every_pair(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "identity.scm").write_text(IDENTITY_SOURCE)
        out = tmp_path / "report.json"
        assert main(["bench", "--corpus", str(corpus), "--matrix", "--out", str(out)]) == EXIT_OK
        (row,) = json.loads(out.read_text())["rows"]
        assert len(row["cells"]) == 8

    def test_failed_entries_set_the_exit_code(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "identity.scm").write_text(IDENTITY_SOURCE)
        (corpus / "broken.scm").write_text("(let ([x #t]) x")
        out = tmp_path / "report.json"
        assert main(["bench", "--corpus", str(corpus), "--out", str(out), "--workers", "1"]) == EXIT_ERROR
        rows = {r["program"]: r for r in json.loads(out.read_text())["rows"]}
        assert rows["broken"]["error"]
        assert not rows["identity"]["error"]
        assert "1 entries failed: broken" in capsys.readouterr().err

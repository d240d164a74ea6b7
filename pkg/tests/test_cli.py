import csv
import io
import json

import pytest

from basiskey.cli import OUTPUT_DIR_ENV, main

IDEAL = "protocol = basiskey\nmode = enumerate\nexpect sift_fraction = 1/4 tol 0\n"
FAILING = "protocol = basiskey\nmode = enumerate\nexpect sift_fraction = 1/3 tol 0\n"


def write_scenario(tmp_path, text, name="case.scn"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestRunCommand:
    def test_passing_scenario_exits_zero(self, tmp_path, capsys):
        rc = main(["run", write_scenario(tmp_path, IDEAL)])
        assert rc == 0
        body = json.loads(capsys.readouterr().out)
        assert body["scenario"] == "case"
        assert body["metrics"]["sift_fraction"]["exact"] == "1/4"
        assert body["expectations"][0]["pass"] is True

    def test_failed_expectation_exits_one(self, tmp_path, capsys):
        rc = main(["run", write_scenario(tmp_path, FAILING)])
        assert rc == 1
        body = json.loads(capsys.readouterr().out)
        assert body["expectations"][0]["pass"] is False

    def test_parse_error_exits_two(self, tmp_path, capsys):
        rc = main(["run", write_scenario(tmp_path, "protocol = basiskey\nsorce = x\n")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "line 2" in err and "sorce" in err

    def test_missing_file_exits_two(self, capsys):
        assert main(["run", "/nonexistent/file.scn"]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_seed_determinism(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path, "protocol = basiskey\nrounds = 2000\nrepeats = 2\nseed = 1\n"
        )

        def run_with_seed(seed):
            assert main(["run", path, "--seed", str(seed)]) == 0
            return json.loads(capsys.readouterr().out)

        a, b, c = run_with_seed(7), run_with_seed(7), run_with_seed(8)
        assert a["metrics"]["sift_fraction"]["value"] == b["metrics"]["sift_fraction"]["value"]
        assert a["metrics"]["sift_fraction"]["value"] != c["metrics"]["sift_fraction"]["value"]
        assert a["seed"] == 7

    def test_output_env_var(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "outputs"))
        rc = main(["run", write_scenario(tmp_path, IDEAL), "--out", "sub/report.json"])
        assert rc == 0
        assert capsys.readouterr().out == ""
        saved = tmp_path / "outputs" / "sub" / "report.json"
        assert json.loads(saved.read_text())["scenario"] == "case"

    def test_csv_format(self, tmp_path, capsys):
        rc = main(["run", write_scenario(tmp_path, IDEAL), "--format", "csv"])
        assert rc == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        sift = next(r for r in rows if r["metric"] == "sift_fraction")
        assert sift["exact"] == "1/4"
        assert sift["pass"] == "true"


class TestEnumerateCommand:
    def test_forces_exact(self, tmp_path, capsys):
        # montecarlo scenario, but the subcommand enumerates it
        path = write_scenario(tmp_path, "protocol = bb84\nrounds = 7\n")
        assert main(["enumerate", path]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["mode"] == "enumerate"
        assert body["metrics"]["sift_fraction"]["exact"] == "1/2"

    def test_not_enumerable_exits_two(self, tmp_path, capsys):
        path = write_scenario(tmp_path, "protocol = basiskey\nsource = weak:0.5\n")
        assert main(["enumerate", path]) == 2
        assert "source.mu" in capsys.readouterr().err


class TestTable1Command:
    def test_text_default(self, capsys):
        assert main(["table1"]) == 0
        out = capsys.readouterr().out
        assert "inconclusive" in out and "error!" in out

    def test_json(self, capsys):
        assert main(["table1", "--format", "json"]) == 0
        rows = json.loads(capsys.readouterr().out)["rows"]
        assert len(rows) == 7
        assert rows[0]["probability"] == "1/2"

    def test_csv(self, capsys):
        assert main(["table1", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("eve_basis,resend,bob_basis")
        assert len(lines) == 8


class TestAttackSuiteCommand:
    def test_subset_text_output(self, capsys):
        rc = main(
            [
                "attack-suite",
                "--preset", "ideal-basiskey-exact",
                "--preset", "intercept-resend-basiskey-exact",
                "--format", "text",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "ok   ideal-basiskey-exact" in out
        assert out.strip().endswith("2 presets in " + out.strip().rsplit(" in ", 1)[1])

    def test_unknown_preset_exits_two(self, capsys):
        assert main(["attack-suite", "--preset", "nope"]) == 2
        assert "available" in capsys.readouterr().err

    def test_json_subset(self, capsys):
        rc = main(
            ["attack-suite", "--preset", "pns2-basiskey-exact", "--format", "json"]
        )
        assert rc == 0
        body = json.loads(capsys.readouterr().out)
        assert body["ok"] is True
        assert body["reports"][0]["scenario"] == "pns2-basiskey-exact"


class TestReportCommand:
    def test_json_to_csv_conversion(self, tmp_path, capsys):
        scn = write_scenario(tmp_path, IDEAL)
        saved = tmp_path / "r.json"
        assert main(["run", scn, "--out", str(saved)]) == 0
        capsys.readouterr()

        assert main(["report", str(saved), "--format", "csv"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert any(r["metric"] == "sift_fraction" for r in rows)

    def test_failing_report_exits_one(self, tmp_path, capsys):
        scn = write_scenario(tmp_path, FAILING)
        saved = tmp_path / "r.json"
        assert main(["run", scn, "--out", str(saved)]) == 1
        capsys.readouterr()
        assert main(["report", str(saved)]) == 1

    def test_invalid_json_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["report", str(bad)]) == 2

    def test_non_report_document_exits_two(self, tmp_path, capsys):
        doc = tmp_path / "doc.json"
        doc.write_text('{"hello": 1}', encoding="utf-8")
        assert main(["report", str(doc)]) == 2


class TestPresetsCommand:
    def test_listing(self, capsys):
        assert main(["presets"]) == 0
        names = capsys.readouterr().out.split()
        assert "ideal-basiskey-exact" in names
        assert len(names) >= 30

    def test_show(self, capsys):
        assert main(["presets", "--show", "ideal-basiskey-exact"]) == 0
        assert "protocol = basiskey" in capsys.readouterr().out

    def test_show_unknown(self, capsys):
        assert main(["presets", "--show", "nope"]) == 2


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc_info:
        main(["no-such-command"])
    assert exc_info.value.code == 2

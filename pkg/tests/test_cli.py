import io
import json

import pytest

from atdlab.cli import run as cli_run
from atdlab.fixtures import TERSE_BUDGET_EMAIL
from atdlab.lexicon import load_default_pack, serialize_pack


@pytest.fixture
def pack_file(tmp_path):
    path = tmp_path / "pack.json"
    path.write_text(serialize_pack(load_default_pack()), encoding="utf-8")
    return path


class TestClassifyCommand:
    def test_plain_output(self, capsys):
        assert cli_run(["classify", "--body", TERSE_BUDGET_EMAIL]) == 0
        out = capsys.readouterr().out
        assert out.startswith("label: bald_on_record\n")
        assert "scores:" in out

    def test_json_output_is_stable(self, capsys):
        assert cli_run(["classify", "--body", TERSE_BUDGET_EMAIL, "--json"]) == 0
        out = capsys.readouterr().out
        doc = json.loads(out)
        assert doc["label"] == "bald_on_record"
        assert out == json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def test_explain_lists_hits(self, capsys):
        code = cli_run(
            ["classify", "--body", "Please send it.", "--json", "--explain"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert {h["id"] for h in doc["hits"]} == {"def-please", "core-send"}

    def test_body_and_file_conflict(self, tmp_path, capsys):
        path = tmp_path / "body.txt"
        path.write_text("x", encoding="utf-8")
        code = cli_run(
            ["classify", "--body", "x", "--file", str(path)]
        )
        assert code == 1
        assert "not both" in capsys.readouterr().err

    def test_body_from_file_and_stdin(self, tmp_path, capsys, monkeypatch):
        path = tmp_path / "body.txt"
        path.write_text(TERSE_BUDGET_EMAIL, encoding="utf-8")
        assert cli_run(["classify", "--file", str(path)]) == 0
        capsys.readouterr()
        monkeypatch.setattr("sys.stdin", io.StringIO(TERSE_BUDGET_EMAIL))
        assert cli_run(["classify", "--file", "-"]) == 0

    def test_empty_body_is_input_error(self, capsys):
        assert cli_run(["classify", "--body", "  "]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_subcommand_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli_run([])
        assert exc.value.code == 1

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_run(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("atdlab ")


class TestHeadCommand:
    def test_plain(self, capsys):
        assert cli_run(["head", "--body", TERSE_BUDGET_EMAIL]) == 0
        assert capsys.readouterr().out.splitlines()[0] == "we need a budget"

    def test_json(self, capsys):
        assert cli_run(["head", "--body", TERSE_BUDGET_EMAIL, "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["tokens"] == ["we", "need", "a", "budget"]
        assert doc["span"] == [0, 16]

    def test_headless_body_errors(self, capsys):
        assert cli_run(["head", "--body", "The sky is blue."]) == 1


class TestRewriteCommands:
    def test_rewrite_and_reverse_round_trip(self, tmp_path, capsys):
        record_path = tmp_path / "record.json"
        code = cli_run(
            [
                "rewrite",
                "--body", TERSE_BUDGET_EMAIL,
                "--target", "negative",
                "--slot", "deadline=today",
                "--record", str(record_path),
                "--json",
            ]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert "the deadline is today" in doc["body"]
        assert record_path.exists()

        code = cli_run(
            ["reverse", "--body", doc["body"], "--record", str(record_path)]
        )
        assert code == 0
        assert capsys.readouterr().out == TERSE_BUDGET_EMAIL + "\n"

    def test_reverse_rejects_wrong_text(self, tmp_path, capsys):
        record_path = tmp_path / "record.json"
        cli_run(
            [
                "rewrite",
                "--body", TERSE_BUDGET_EMAIL,
                "--target", "positive",
                "--record", str(record_path),
            ]
        )
        capsys.readouterr()
        code = cli_run(["reverse", "--body", "unrelated text", "--record", str(record_path)])
        assert code == 1

    def test_bad_target_name(self, capsys):
        code = cli_run(["rewrite", "--body", "x", "--target", "shouty"])
        assert code == 1

    def test_bad_slot_syntax(self, capsys):
        code = cli_run(
            ["rewrite", "--body", TERSE_BUDGET_EMAIL, "--target", "negative", "--slot", "deadline"]
        )
        assert code == 1
        assert "NAME=VALUE" in capsys.readouterr().err

    def test_sorry_command(self, tmp_path, capsys):
        record_path = tmp_path / "record.json"
        code = cli_run(
            ["sorry", "--body", "I forgot the file.", "--record", str(record_path), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["body"] == "I'm sorry, but I forgot the file."
        saved = json.loads(record_path.read_text(encoding="utf-8"))
        assert saved == doc["record"]


class TestSimulateAndSentinel:
    def test_simulate_bundled(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = cli_run(["simulate", "--name", "s04_blunt_from_start", "--out", str(out), "--json"])
        assert code == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["scenario"] == "s04_blunt_from_start"
        assert (out / "transcript.json").exists()
        assert (out / "view_alice.json").exists()

    def test_simulate_needs_exactly_one_source(self, tmp_path, capsys):
        assert cli_run(["simulate", "--out", str(tmp_path / "x")]) == 1
        capsys.readouterr()
        code = cli_run(
            [
                "simulate",
                "--name", "s01_quiet_pair",
                "--scenario", "also.json",
                "--out", str(tmp_path / "y"),
            ]
        )
        assert code == 1

    def test_diff_detects_mutation(self, tmp_path, capsys):
        out = tmp_path / "run"
        cli_run(["simulate", "--name", "s04_blunt_from_start", "--out", str(out)])
        capsys.readouterr()
        code = cli_run(
            [
                "sentinel", "diff",
                "--view", str(out / "view_bob.json"),
                "--canonical", str(out / "sent.json"),
                "--json",
            ]
        )
        assert code == 2
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdict"] == "mutated"
        assert doc["evidence"]

    def test_diff_clean_view_exits_zero(self, tmp_path, capsys):
        out = tmp_path / "run"
        cli_run(["simulate", "--name", "s01_quiet_pair", "--out", str(out)])
        capsys.readouterr()
        code = cli_run(
            [
                "sentinel", "diff",
                "--view", str(out / "view_bob.json"),
                "--canonical", str(out / "sent.json"),
            ]
        )
        assert code == 0
        assert "verdict: clean" in capsys.readouterr().out

    def test_quote_detector_on_device_view(self, tmp_path, capsys):
        out = tmp_path / "run"
        cli_run(["simulate", "--name", "s04_blunt_from_start", "--out", str(out)])
        capsys.readouterr()
        code = cli_run(["sentinel", "quote", "--view", str(out / "view_bob.json")])
        assert code == 0

    def test_drift_detector_exit_codes(self, tmp_path, capsys):
        negative = "Sorry to bother you, but could you possibly look at this? We need it."
        bald = "We need it, now!"
        bodies = [negative] * 5 + [bald] * 2
        messages = [
            {
                "id": f"m{i:03d}",
                "thread_id": "t1",
                "from": "bob",
                "to": "alice",
                "subject": "s",
                "sent_at": "2026-01-05T09:00:00+00:00",
                "segments": [{"kind": "fresh", "text": body}],
            }
            for i, body in enumerate(bodies)
        ]
        view = tmp_path / "view.json"
        view.write_text(json.dumps({"messages": messages}), encoding="utf-8")
        code = cli_run(["sentinel", "drift", "--view", str(view), "--sender", "bob"])
        assert code == 2
        capsys.readouterr()
        code = cli_run(
            ["sentinel", "drift", "--view", str(view), "--sender", "bob", "--alarm", "0.9"]
        )
        assert code == 0
        capsys.readouterr()
        code = cli_run(["sentinel", "drift", "--view", str(view), "--sender", "alice"])
        assert code == 1

    def test_missing_required_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_run(["sentinel", "diff", "--view", "x.json"])
        assert exc.value.code == 1

    def test_evaluate_scenario_file(self, tmp_path, capsys):
        scenario = {
            "name": "inline",
            "seed": 7,
            "actors": [
                {"id": "alice", "reply_policy": "counter_request", "base_strategy": "bald_on_record"},
                {"id": "bob", "reply_policy": "counter_request", "base_strategy": "bald_on_record"},
            ],
            "script": {"mode": "generated", "messages": 4, "opener": "alice"},
            "attack": {"targets": {"bob": {"strategy": "negative"}}},
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario), encoding="utf-8")
        out = tmp_path / "rates.csv"
        code = cli_run(
            [
                "sentinel", "evaluate",
                "--scenario", str(path),
                "--detector", "diff",
                "--out", str(out),
                "--json",
            ]
        )
        assert code == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows == [{"scenario": "inline", "detector": "diff", "tpr": 1.0, "fpr": 0.0}]
        assert out.exists()

    def test_evaluate_needs_some_input(self, tmp_path, capsys):
        code = cli_run(["sentinel", "evaluate", "--out", str(tmp_path / "x.csv")])
        assert code == 1


class TestRulepackAndScenarios:
    def test_validate_good_pack(self, pack_file, capsys):
        assert cli_run(["rulepack", "validate", str(pack_file)]) == 0
        assert capsys.readouterr().out.startswith("ok: version 1.0.0")

    def test_validate_bad_pack(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"version": "1.0.0"}', encoding="utf-8")
        assert cli_run(["rulepack", "validate", str(path)]) == 1

    def test_export_plain_round_trips(self, capsys):
        assert cli_run(["rulepack", "export"]) == 0
        out = capsys.readouterr().out
        assert out == serialize_pack(load_default_pack())

    def test_export_extension_wrapper(self, capsys):
        assert cli_run(["rulepack", "export", "--format", "extension"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["kind"] == "politeness-rule-pack"
        assert doc["format_version"] == 1
        assert doc["rank_band"] == 0.75
        assert doc["pack"]["version"] == "1.0.0"

    def test_export_to_file(self, tmp_path, capsys):
        out = tmp_path / "pack.json"
        assert cli_run(["rulepack", "export", "--out", str(out)]) == 0
        assert out.read_text(encoding="utf-8") == serialize_pack(load_default_pack())

    def test_env_pack_used_and_flag_wins(self, tmp_path, pack_file, capsys, monkeypatch):
        doc = json.loads(pack_file.read_text(encoding="utf-8"))
        doc["version"] = "9.9.9"
        env_pack = tmp_path / "env_pack.json"
        env_pack.write_text(json.dumps(doc), encoding="utf-8")
        monkeypatch.setenv("ATDLAB_PACK", str(env_pack))

        assert cli_run(["rulepack", "export"]) == 0
        assert json.loads(capsys.readouterr().out)["version"] == "9.9.9"

        assert cli_run(["rulepack", "export", "--pack", str(pack_file)]) == 0
        assert json.loads(capsys.readouterr().out)["version"] == "1.0.0"

    def test_env_pack_missing_file_errors(self, capsys, monkeypatch):
        monkeypatch.setenv("ATDLAB_PACK", "/nonexistent/pack.json")
        assert cli_run(["classify", "--body", "x"]) == 1
        assert "cannot read pack" in capsys.readouterr().err

    def test_scenarios_listing(self, capsys):
        assert cli_run(["scenarios"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 12
        assert lines[0] == "s01_quiet_pair"
        assert cli_run(["scenarios", "--json"]) == 0
        assert json.loads(capsys.readouterr().out) == lines

# Copyright (c) 2025, Hopnet Communications LLP and Contributors
# See license.txt

import json

from typer.testing import CliRunner

from substation_testbed.cli import app

runner = CliRunner()


class TestCli:
    def test_list(self):
        result = runner.invoke(app, ["list"])
        assert result.exit_code == 0
        assert "s5_goose_replay" in result.output

    def test_run_writes_artifacts(self, tmp_path):
        result = runner.invoke(app, ["run", "--scenario", "s1_fault_trip", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "s1_fault_trip" / "report.json").read_text())
        assert report["tripTimeNs"] == 19_100_000

    def test_run_no_pcap(self, tmp_path):
        result = runner.invoke(app, ["run", "-s", "s1_fault_trip", "-o", str(tmp_path), "--no-pcap"])
        assert result.exit_code == 0
        assert not (tmp_path / "s1_fault_trip" / "capture.pcap").exists()
        assert (tmp_path / "s1_fault_trip" / "events.jsonl").exists()

    def test_run_failed_expectation_exits_1(self, tmp_path):
        path = tmp_path / "quiet.json"
        path.write_text(json.dumps({"name": "quiet", "durationNs": 20_000_000, "expect": {"breakerOpen": True}}))
        result = runner.invoke(app, ["run", "--scenario", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 1

    def test_run_invalid_scenario(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        result = runner.invoke(app, ["run", "--scenario", str(path)])
        assert result.exit_code == 1
        assert "VALIDATION_ERROR" in result.output

    def test_run_needs_scenario_or_all(self):
        assert runner.invoke(app, ["run"]).exit_code == 2

    def test_decode_and_analyze(self, tmp_path):
        runner.invoke(app, ["run", "-s", "s1_fault_trip", "-o", str(tmp_path)])
        decoded = runner.invoke(app, ["decode", str(tmp_path / "s1_fault_trip" / "capture.pcap")])
        assert decoded.exit_code == 0
        assert "goId=PC1_TRIP stNum=2 sqNum=0" in decoded.output
        analyzed = runner.invoke(app, ["analyze", str(tmp_path / "s1_fault_trip" / "events.jsonl")])
        assert analyzed.exit_code == 0
        assert json.loads(analyzed.output)["T_p_ns"] == 19_100_000

    def test_attack_learn_missing_capture(self):
        result = runner.invoke(app, ["attack", "learn", "/no/such/capture.pcap"])
        assert result.exit_code == 1

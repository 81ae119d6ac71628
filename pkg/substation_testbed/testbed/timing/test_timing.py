# Copyright (c) 2025, Hopnet Communications LLP and Contributors
# See license.txt

import json

import pytest

from substation_testbed.exceptions import IncompleteChainError, TestbedError
from substation_testbed.testbed.attacker.attacker import AttackKind
from substation_testbed.testbed.timing.timing import (
    TimingReport,
    analyze_window,
    decompose,
    read_event_log,
    timing_json,
)

FAULT_AT = 104_166_666


def fault_chain(t_a=13_000_000, t_b=100_000, t_c=6_000_000, origin="fault_inception"):
    buffered = FAULT_AT + t_a
    delivered = buffered + t_b
    return [
        {"t": FAULT_AT, "kind": origin, "device": "feeder"},
        {"t": FAULT_AT + 100_000, "kind": "trip_decision", "device": "pc1"},
        {"t": buffered, "kind": "goose_buffered", "device": "pc1", "goId": "PC1_TRIP", "stNum": 2, "trip": True},
        {"t": delivered, "kind": "goose_delivered", "device": "mu1", "goId": "PC1_TRIP", "stNum": 2, "sqNum": 0, "trip": True},
        {"t": delivered + t_c, "kind": "breaker_open", "device": "cb1", "cause": "hardwired_trip", "feederRmsA": 14142.1},
    ]


class TestDecompose:
    def test_fault_chain(self):
        report = decompose(fault_chain())
        assert (report.t_a, report.t_b, report.t_c) == (13_000_000, 100_000, 6_000_000)
        assert report.t_p == 19_100_000
        assert report.origin_kind == "fault_inception"

    def test_order_of_log_does_not_matter(self):
        assert decompose(reversed(fault_chain())) == decompose(fault_chain())

    def test_live_status_goose_before_trip_is_ignored(self):
        events = [
            {"t": 0, "kind": "goose_buffered", "device": "pc1", "goId": "PC1_TRIP", "stNum": 1, "trip": False},
            {"t": 100_000, "kind": "goose_delivered", "device": "mu1", "goId": "PC1_TRIP", "stNum": 1, "sqNum": 0, "trip": False},
        ] + fault_chain()
        assert decompose(events).t_p == 19_100_000

    def test_attack_origin(self):
        report = decompose(fault_chain(t_a=0, origin="attack_start"))
        assert report.origin_kind == "attack_start"
        assert report.t_a == 0
        assert report.t_p == 6_100_000

    @pytest.mark.parametrize("dropped, missing", [
        ("breaker_open", "breaker_open"),
        ("goose_delivered", "goose_delivered"),
        ("goose_buffered", "goose_buffered"),
        ("fault_inception", "fault_inception"),
    ])
    def test_incomplete_chain(self, dropped, missing):
        events = [event for event in fault_chain() if event["kind"] != dropped]
        with pytest.raises(IncompleteChainError) as error:
            decompose(events)
        assert error.value.missing == missing

    def test_empty_log(self):
        with pytest.raises(IncompleteChainError):
            decompose([])


class TestAnalyzeWindow:
    def test_replay_detected_before_actuation(self):
        report = TimingReport("attack_start", 0, 0, 100_000, 6_000_000)
        window = analyze_window(AttackKind.GOOSE_REPLAY, report, 300_000, 1_000_000)
        assert window.available_window == 6_000_000
        assert window.blocked

    def test_breaker_ied_window_too_short(self):
        report = TimingReport("attack_start", 0, 0, 100_000, 2_000_000)
        window = analyze_window(AttackKind.GOOSE_REPLAY, report, 300_000, 2_000_000)
        assert not window.blocked

    def test_sv_attack_uses_protection_window(self):
        report = TimingReport("attack_start", 0, 13_000_000, 100_000, 6_000_000)
        window = analyze_window(AttackKind.SV_FDI, report, 300_000, 1_000_000)
        assert window.available_window == 13_000_000
        assert window.blocked

    def test_undetected_attack_never_blocked(self):
        report = TimingReport("attack_start", 0, 0, 100_000, 6_000_000)
        assert not analyze_window(AttackKind.GOOSE_SPOOF, report, None, 0).blocked

    def test_exact_window_is_not_blocked(self):
        report = TimingReport("attack_start", 0, 0, 100_000, 6_000_000)
        assert not analyze_window(AttackKind.GOOSE_SPOOF, report, 5_000_000, 1_000_000).blocked


class TestTimingJson:
    def test_keys(self):
        report = decompose(fault_chain())
        window = analyze_window(AttackKind.SV_FDI, report, 300_000, 1_000_000)
        data = timing_json(report, [window])
        assert data["T_p_ns"] == data["T_a_ns"] + data["T_b_ns"] + data["T_c_ns"]
        assert data["windows"][0]["attackKind"] == "sv_fdi"
        assert data["windows"][0]["blocked"] is True

    def test_read_event_log(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text("\n".join(json.dumps(event) for event in fault_chain()) + "\n")
        assert decompose(read_event_log(str(path))).t_p == 19_100_000

    def test_read_event_log_rejects_garbage(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text("not json\n")
        with pytest.raises(TestbedError):
            read_event_log(str(path))

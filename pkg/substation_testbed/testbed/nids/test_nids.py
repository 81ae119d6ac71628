# Copyright (c) 2025, Hopnet Communications LLP and Contributors
# See license.txt

import pytest

from substation_testbed.exceptions import ValidationError
from substation_testbed.testbed.frame_codec.frame_codec import (
    GooseFrame,
    MacAddress,
    SvFrame,
    UtcTimestamp,
    decode_goose,
    encode_goose,
    encode_sv,
)
from substation_testbed.testbed.nids.nids import DEFAULT_RULES, Nids, NidsConfig, RuleId
from substation_testbed.testbed.process_bus.process_bus import ProcessBus

EPOCH = 1_704_067_200
SV_GAP = 208_333


def make_config(**overrides) -> NidsConfig:
    fields = dict(
        known_sv_ids=frozenset({"MU01", "MU02"}),
        known_go_ids=frozenset({"PC1_TRIP"}),
        known_gocb_refs=frozenset({"PC1LD0/LLN0$GO$gcbTrip"}),
    )
    fields.update(overrides)
    return NidsConfig(**fields)


def goose(st_num, sq_num, t_ms=0, trip=False, go_id="PC1_TRIP", seconds=EPOCH) -> bytes:
    return encode_goose(GooseFrame(
        dst=MacAddress.parse("01:0C:CD:01:00:01"), src=MacAddress.parse("00:1A:2B:3C:4D:02"),
        app_id=1, gocb_ref="PC1LD0/LLN0$GO$gcbTrip", time_allowed_to_live=2000,
        dat_set="PC1LD0/LLN0$dsTrip", go_id=go_id,
        t=UtcTimestamp.from_sim_time(seconds, t_ms * 1_000_000), st_num=st_num, sq_num=sq_num, all_data=[trip],
    ))


def sv(smp_cnt, value=0, sv_id="MU01") -> bytes:
    return encode_sv(SvFrame(
        dst=MacAddress.parse("01:0C:CD:04:00:03"), src=MacAddress.parse("00:1A:2B:3C:4D:01"),
        app_id=0x4000, sv_id=sv_id, smp_cnt=smp_cnt, conf_rev=1, smp_synch=2,
        samples=[(value, 0)] * 8,
    ))


def rules(alerts):
    return sorted({alert.rule_id for alert in alerts})


class TestGooseRules:
    def test_live_sequence_is_clean(self):
        nids = Nids(None, make_config())
        frames = [goose(1, 0), goose(1, 1), goose(1, 2), goose(2, 0, t_ms=10, trip=True), goose(2, 1, t_ms=10)]
        for n, frame in enumerate(frames):
            assert nids.on_frame(frame, n * 1_000_000) == []

    def test_replayed_old_state_raises_r2(self):
        nids = Nids(None, make_config())
        nids.on_frame(goose(4, 3, t_ms=50), 0)
        alerts = nids.on_frame(goose(2, 0, t_ms=10, trip=True), 1_000_000)
        assert RuleId.R2 in rules(alerts)

    def test_stale_timestamp_raises_r3(self):
        nids = Nids(None, make_config())
        nids.on_frame(goose(4, 0), 0)
        alerts = nids.on_frame(goose(2, 0, seconds=EPOCH - 86_400), 1_000_000)
        assert rules(alerts) == [RuleId.R2, RuleId.R3]

    def test_conformant_spoof_is_invisible(self):
        nids = Nids(None, make_config())
        nids.on_frame(goose(1, 5), 0)
        assert nids.on_frame(goose(2, 0, t_ms=140, trip=True), 140_000_000) == []

    def test_non_conformant_spoof_detected(self):
        nids = Nids(None, make_config())
        nids.on_frame(goose(1, 5), 0)
        alerts = nids.on_frame(goose(1, 5, trip=True), 140_000_000)
        assert RuleId.R2 in rules(alerts)

    @pytest.mark.parametrize(
        "second, expected",
        [
            (goose(1, 2, t_ms=5), RuleId.R3),   # t changed, stNum unchanged
            (goose(2, 0, t_ms=0), RuleId.R3),   # stNum changed, t unchanged
            (goose(2, 3, t_ms=5), RuleId.R2),   # stNum changed, sqNum not reset
            (goose(1, 1, t_ms=0), RuleId.R2),   # sqNum repeated
        ],
    )
    def test_rule_matrix(self, second, expected):
        nids = Nids(None, make_config())
        nids.on_frame(goose(1, 1), 0)
        assert expected in rules(nids.on_frame(second, 1_000))

    def test_unknown_go_id_raises_r1(self):
        nids = Nids(None, make_config())
        assert rules(nids.on_frame(goose(1, 0, go_id="ROGUE"), 0)) == [RuleId.R1]

    def test_undecodable_frame_raises_r1(self):
        nids = Nids(None, make_config())
        alerts = nids.on_frame(goose(1, 0)[:-3], 0)
        assert rules(alerts) == [RuleId.R1]
        assert alerts[0].stream_id == "?"

    def test_disabled_rule_is_silent(self):
        nids = Nids(None, make_config(enabled_rules=frozenset({RuleId.R1})))
        nids.on_frame(goose(4, 0), 0)
        assert nids.on_frame(goose(2, 0, t_ms=3), 1_000) == []


class TestSvRules:
    def test_continuous_stream_is_clean(self):
        nids = Nids(None, make_config())
        for n in range(4790, 4800 + 20):
            assert nids.on_frame(sv(n % 4800, n), n * SV_GAP) == []

    def test_conflicting_duplicate_raises_r4(self):
        nids = Nids(None, make_config())
        for n in range(10):
            nids.on_frame(sv(n, 1), n * SV_GAP)
        alerts = nids.on_frame(sv(9, 20_000_000), 10 * SV_GAP)
        assert rules(alerts) == [RuleId.R4]
        assert any("different samples" in alert.detail for alert in alerts)

    def test_smp_cnt_gap_raises_r4(self):
        nids = Nids(None, make_config())
        nids.on_frame(sv(0), 0)
        assert rules(nids.on_frame(sv(5), SV_GAP)) == [RuleId.R4]

    def test_rate_rule_needs_enabling(self):
        slow = [(sv(n), n * 400_000) for n in range(12)]
        nids = Nids(None, make_config())
        assert all(nids.on_frame(frame, t) == [] for frame, t in slow)
        nids = Nids(None, make_config(enabled_rules=DEFAULT_RULES | {RuleId.R5}))
        alerts = [alert for frame, t in slow for alert in nids.on_frame(frame, t)]
        assert rules(alerts) == [RuleId.R5]

    def test_streams_are_independent(self):
        first = [(sv(n, sv_id="MU01"), n * SV_GAP) for n in range(20)]
        second = [(sv(n, 7, sv_id="MU02"), n * SV_GAP + 1) for n in range(0, 20, 2)]
        interleaved = Nids(None, make_config())
        merged = sorted(first + second, key=lambda item: item[1])
        together = [a for frame, t in merged for a in interleaved.on_frame(frame, t)]
        separate = Nids(None, make_config())
        apart = [a for frame, t in first + second for a in separate.on_frame(frame, t)]
        assert sorted(together, key=repr) == sorted(apart, key=repr)


class TestAlertPublishing:
    def run_bus(self, frames):
        bus = ProcessBus()
        nids = Nids(bus, make_config(), EPOCH)
        nids.attach()
        for frame in frames:
            bus.publish(frame, "test")
        bus.run_until(10_000_000)
        return bus, nids

    def test_detection_latency(self):
        bus, nids = self.run_bus([goose(4, 0), goose(2, 0, seconds=EPOCH - 86_400)])
        assert nids.alerts
        assert all(alert.latency_ns == 300_000 for alert in nids.alerts)
        alert_frames = [r for r in bus.capture if r.publisher == "nids"]
        assert alert_frames[0].publish_at == nids.alerts[0].detect_at
        assert alert_frames[0].deliver_at - nids.alerts[0].deliver_at < 500_000

    def test_two_alerts_one_state_change(self):
        bus, nids = self.run_bus([goose(4, 0), goose(2, 0, seconds=EPOCH - 86_400)])
        assert len(nids.alerts) == 2
        alert_goose = [decode_goose(r.frame_bytes) for r in bus.capture if r.publisher == "nids"]
        assert {frame.st_num for frame in alert_goose} == {1}
        assert alert_goose[0].all_data == (True,)

    def test_each_alerting_frame_increments_st_num(self):
        bus, nids = self.run_bus([sv(0), sv(5), sv(9)])
        alert_goose = [decode_goose(r.frame_bytes) for r in bus.capture if r.publisher == "nids"]
        assert sorted({frame.st_num for frame in alert_goose}) == [1, 2]

    def test_alert_goose_is_self_exempt(self):
        _, nids = self.run_bus([goose(4, 0), goose(2, 0)])
        assert all(alert.stream_id != "NIDS_ALERT" for alert in nids.alerts)

    def test_alerts_logged(self):
        bus, _ = self.run_bus([goose(1, 0, go_id="ROGUE")])
        logged = [event for event in bus.events if event["kind"] == "alert"]
        assert logged[0]["ruleId"] == "R1" and logged[0]["latencyNs"] == 300_000

    def test_started_stream_publishes_idle_state(self):
        bus = ProcessBus()
        nids = Nids(bus, make_config(), EPOCH)
        nids.attach()
        nids.start()
        bus.publish(goose(1, 0, go_id="ROGUE"), "test")
        bus.run_until(10_000_000)
        records = [r for r in bus.capture if r.publisher == "nids"]
        frames = [decode_goose(r.frame_bytes) for r in records]
        assert records[0].publish_at == 0
        assert (frames[0].st_num, frames[0].all_data) == (1, (False,))
        tripped = [frame for frame in frames if frame.all_data == (True,)]
        assert (tripped[0].st_num, tripped[0].sq_num) == (2, 0)


class TestReport:
    def test_clean_report(self):
        nids = Nids(None, make_config())
        for n in range(5):
            nids.on_frame(sv(n), n * SV_GAP)
        report = nids.report([])
        assert report["alertCount"] == 0
        assert report["ruleCounts"] == {"R1": 0, "R2": 0, "R3": 0, "R4": 0, "R5": 0}

    def test_missed_and_detected_attacks(self):
        nids = Nids(None, make_config())
        nids.on_frame(goose(4, 0), 0)
        nids.on_frame(goose(2, 0, seconds=EPOCH - 86_400), 5_000_000)
        report = nids.report([
            {"name": "replay", "streamId": "PC1_TRIP", "firstDeliverAt": 5_000_000},
            {"name": "fdi", "streamId": "MU01", "firstDeliverAt": 1_000},
        ])
        assert report["missedAttacks"] == ["fdi"]
        assert report["detected"]["replay"]["detectionLatencyNs"] == 300_000
        assert report["ruleCounts"]["R2"] == 1

    def test_config_validation(self):
        with pytest.raises(ValidationError) as error:
            make_config(sv_rate_tolerance=1.5).validate()
        assert error.value.key_path == "nids.svRateTolerance"

    def test_response_budget(self):
        with pytest.raises(ValidationError) as error:
            make_config(processing_delay_ns=450_000).validate()
        assert error.value.key_path == "nids.processingDelayNs"
        make_config(processing_delay_ns=399_999).validate()
        make_config(processing_delay_ns=450_000).validate(alert_transfer_ns=None)

# Copyright (c) 2025, Hopnet Communications LLP and Contributors
# See license.txt

import json

import pytest

from substation_testbed import hooks
from substation_testbed.exceptions import ValidationError
from substation_testbed.testbed.attacker.attacker import GooseReplay, SvFdi
from substation_testbed.testbed.devices.circuit_breaker import BreakerMode
from substation_testbed.testbed.devices.protection_ied import PcProfile
from substation_testbed.testbed.frame_codec.frame_codec import (
    GooseFrame,
    MacAddress,
    UtcTimestamp,
    encode_goose,
)
from substation_testbed.testbed.nids.nids import RuleId
from substation_testbed.testbed.process_bus.capture import write_capture_jsonl, write_pcap
from substation_testbed.testbed.process_bus.process_bus import CaptureRecord
from substation_testbed.testbed.scenario.decode import decode, render_line
from substation_testbed.testbed.scenario.runner import run
from substation_testbed.testbed.scenario.scenario import list_builtin, load, parse


def trip_frame(st_num=2) -> bytes:
    return encode_goose(GooseFrame(
        dst=MacAddress.parse("01:0C:CD:01:00:01"), src=MacAddress.parse("00:1A:2B:3C:4D:02"),
        app_id=1, gocb_ref="PC1LD0/LLN0$GO$gcbTrip", time_allowed_to_live=2000,
        dat_set="PC1LD0/LLN0$dsTrip", go_id="PC1_TRIP", t=UtcTimestamp(1_704_067_200, 0),
        st_num=st_num, sq_num=0, all_data=[True],
    ))


def write_scenario(tmp_path, data) -> str:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return str(path)


def key_path_of(data) -> str:
    with pytest.raises(ValidationError) as error:
        parse(data)
    return error.value.key_path


class TestLoad:
    def test_minimal_file_is_fully_defaulted(self, tmp_path):
        scenario = load(write_scenario(tmp_path, {"name": "s1_fault_trip"}))
        assert scenario.name == "s1_fault_trip"
        assert scenario.faults == [] and scenario.attacks == []
        assert scenario.pc.profile is PcProfile.ORIGINAL
        assert scenario.breaker.mode is BreakerMode.HARDWIRED_VIA_MU
        assert scenario.nids.enabled_rules == frozenset({RuleId.R1, RuleId.R2, RuleId.R3, RuleId.R4})
        assert scenario.resolved["devices"]["pc"]["pickupRmsA"] == 1000.0
        assert scenario.resolved["devices"]["pc"]["processingDelayNs"] == 12_900_000
        assert scenario.resolved["feeder"]["samplingRate"] == 4800
        assert scenario.resolved["bus"]["fixedLatencyNs"] == 100_000

    def test_builtin_by_name(self):
        scenario = load("s4_sv_fdi")
        attack = scenario.attacks[0]
        assert isinstance(attack, SvFdi)
        assert attack.injected_peak_a == 20_000.0
        assert attack.target_stream == "MU01"
        assert attack.inter_packet_ns == 210_000

    def test_every_builtin_loads(self):
        names = [entry["name"] for entry in list_builtin()]
        assert names == list(hooks.builtin_scenarios)
        for name in names:
            assert load(name).name == name

    def test_seed_override(self):
        scenario = load("s1_fault_trip", seed=42)
        assert scenario.seed == 42 and scenario.latency.seed == 42
        assert scenario.resolved["seed"] == 42

    def test_unknown_scenario_name(self):
        with pytest.raises(ValidationError) as error:
            load("s9_does_not_exist")
        assert error.value.key_path == "scenario"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"name\": ")
        with pytest.raises(ValidationError):
            load(str(path))

    def test_captured_frame_from_hex(self):
        scenario = parse({
            "name": "replay",
            "attacks": [{"name": "replay", "variant": "goose_replay", "injectAtNs": 1000, "capturedFrame": {"hex": trip_frame().hex()}}],
        })
        attack = scenario.attacks[0]
        assert isinstance(attack, GooseReplay)
        assert attack.captured_frame == trip_frame()
        assert scenario.resolved["attacks"][0]["capturedFrameHex"] == trip_frame().hex()

    def test_captured_frame_from_pcap(self, tmp_path):
        pcap = tmp_path / "trip.pcap"
        write_pcap(str(pcap), [CaptureRecord(0, 100, trip_frame(3), "pc1"), CaptureRecord(0, 200, trip_frame(4), "pc1")])
        path = write_scenario(tmp_path, {
            "name": "replay",
            "attacks": [{"name": "replay", "variant": "goose_replay", "capturedFrame": {"pcap": "trip.pcap", "index": 1}}],
        })
        assert load(path).attacks[0].captured_frame == trip_frame(4)

    def test_captured_frame_from_scenario(self):
        attack = load("s5_goose_replay").attacks[0]
        assert attack.stream_id == "PC1_TRIP"
        assert attack.captured_frame[12:14] == b"\x88\xb8"


class TestValidation:
    def test_negative_pickup(self):
        assert key_path_of({"name": "x", "devices": {"pc": {"pickupRmsA": -5}}}) == "devices.pc.pickupRmsA"

    def test_unknown_key(self):
        assert key_path_of({"name": "x", "devices": {"mu": {"colour": "red"}}}) == "devices.mu.colour"

    def test_unknown_top_level_key(self):
        assert key_path_of({"name": "x", "durationMs": 10}) == "durationMs"

    def test_wrong_type(self):
        assert key_path_of({"name": "x", "durationNs": "100"}) == "durationNs"

    def test_bool_is_not_an_int(self):
        assert key_path_of({"name": "x", "seed": True}) == "seed"

    def test_name_required(self):
        assert key_path_of({"description": "nameless"}) == "name"

    def test_invalid_mac(self):
        assert key_path_of({"name": "x", "devices": {"mu": {"src": "00:1A:2B"}}}) == "devices.mu.src"

    def test_unknown_rule(self):
        assert key_path_of({"name": "x", "nids": {"rules": ["R1", "R9"]}}) == "nids.rules[1]"

    def test_unknown_profile(self):
        assert key_path_of({"name": "x", "devices": {"pc": {"profile": "fast"}}}) == "devices.pc.profile"

    def test_fault_below_normal_current(self):
        data = {"name": "x", "faults": [{"inceptionNs": 0, "faultCurrentPeakA": 100}]}
        assert key_path_of(data) == "faults[0].faultCurrentPeakA"

    def test_nids_response_budget(self):
        assert key_path_of({"name": "x", "nids": {"processingDelayNs": 450_000}}) == "nids.processingDelayNs"
        slow_bus = {"name": "x", "bus": {"fixedLatencyNs": 150_000, "jitterNs": 100_000}}
        assert key_path_of(slow_bus) == "nids.processingDelayNs"
        parse({**slow_bus, "nids": {"enabled": False}})

    def test_attack_target_must_be_configured(self):
        data = {"name": "x", "attacks": [{"name": "fdi", "variant": "sv_fdi", "targetStream": "MU99"}]}
        assert key_path_of(data) == "attacks[0].targetStream"

    def test_spoof_may_target_breaker_status(self):
        scenario = parse({
            "name": "x",
            "devices": {"breaker": {"mode": "direct_goose_breaker_ied"}},
            "attacks": [{"name": "spoof", "variant": "goose_spoof", "targetStream": "CB1_STATUS", "allData": [False]}],
        })
        assert scenario.attacks[0].stream_id == "CB1_STATUS"
        assert "CB1_STATUS" in scenario.nids_whitelist().known_go_ids

    def test_spoof_cannot_target_sv_stream(self):
        data = {"name": "x", "attacks": [{"name": "spoof", "variant": "goose_spoof", "targetStream": "MU01"}]}
        assert key_path_of(data) == "attacks[0].targetStream"

    def test_fdi_faster_than_nominal_rate_rejected(self):
        data = {"name": "x", "attacks": [{"name": "fdi", "variant": "sv_fdi", "targetStream": "MU01", "interPacketNs": 100_000}]}
        assert key_path_of(data) == "attacks[0].interPacketNs"

    def test_duplicate_attack_names(self):
        attack = {"name": "spoof", "variant": "goose_spoof", "targetStream": "PC1_TRIP"}
        assert key_path_of({"name": "x", "attacks": [attack, attack]}) == "attacks[1].name"

    def test_replay_needs_one_source(self):
        data = {"name": "x", "attacks": [{"name": "r", "variant": "goose_replay", "capturedFrame": {}}]}
        assert key_path_of(data) == "attacks[0].capturedFrame"

    def test_replay_of_non_goose_rejected(self):
        data = {"name": "x", "attacks": [{"name": "r", "variant": "goose_replay", "capturedFrame": {"hex": "00" * 60}}]}
        assert key_path_of(data) == "attacks[0].capturedFrame"

    def test_status_stream_only_in_breaker_ied_mode(self):
        data = {"name": "x", "devices": {"breaker": {"status": {"goId": "CB1_STATUS"}}}}
        assert key_path_of(data) == "devices.breaker.status"

    def test_pc_must_subscribe_to_configured_mu(self):
        assert key_path_of({"name": "x", "devices": {"pc": {"subscribedSvId": "MU02"}}}) == "devices.pc.subscribedSvId"

    def test_retransmission_schedule(self):
        data = {"name": "x", "devices": {"pc": {"trip": {"retransmissionIntervalsMs": [2, 0]}}}}
        assert key_path_of(data) == "devices.pc.trip.retransmissionIntervalsMs"

    def test_capture_format(self):
        assert key_path_of({"name": "x", "output": {"captureFormat": "csv"}}) == "output.captureFormat"


class TestRun:
    def test_artifacts_written(self, tmp_path):
        result = run(load("s1_fault_trip"), out_dir=str(tmp_path))
        assert result.exit_code == 0
        folder = tmp_path / "s1_fault_trip"
        assert (folder / "report.json").exists()
        assert (folder / "events.jsonl").exists()
        assert (folder / "capture.pcap").exists()
        report = json.loads((folder / "report.json").read_text())
        assert report["passed"] is True
        assert report["scenario"]["name"] == "s1_fault_trip"

    def test_failed_expectation_exits_1(self):
        scenario = parse({
            "name": "x",
            "durationNs": 150_000_000,
            "faults": [{"inceptionNs": 104_166_666, "faultCurrentPeakA": 20000}],
            "expect": {"tripTimeMs": 30.0, "tripTimeTolMs": 1.0},
        })
        result = run(scenario)
        assert result.exit_code == 1
        check = result.report["expectations"][0]
        assert check["name"] == "tripTimeMs" and check["passed"] is False

    def test_no_fault_no_trip(self):
        result = run(parse({"name": "quiet", "durationNs": 50_000_000, "expect": {"breakerOpen": False, "alertCount": 0}}))
        assert result.exit_code == 0
        assert result.report["tripTimeNs"] is None
        assert result.report["timing"] == {"incomplete": "breaker_open"}

    def test_jsonl_capture_format(self, tmp_path):
        scenario = parse({"name": "quiet", "durationNs": 5_000_000, "output": {"captureFormat": "jsonl"}})
        result = run(scenario, out_dir=str(tmp_path))
        assert result.paths["capture"].endswith("capture.jsonl")
        lines = (tmp_path / "quiet" / "capture.jsonl").read_text().splitlines()
        assert len(lines) == result.report["capture"]["frames"]

    def test_nids_disabled(self):
        result = run(parse({"name": "quiet", "durationNs": 5_000_000, "nids": {"enabled": False}}))
        assert result.testbed.nids is None
        assert result.report["detection"] == {}


class TestDecode:
    def test_empty_pcap(self, tmp_path):
        path = tmp_path / "empty.pcap"
        write_pcap(str(path), [])
        assert decode(str(path)) == []

    def test_hex_input(self):
        listing = decode(trip_frame().hex())
        assert listing[0]["kind"] == "Goose"
        assert listing[0]["fields"]["stNum"] == 2
        assert listing[0]["receivedAtNs"] is None

    def test_undecodable_frame_is_not_fatal(self):
        frames = " ".join([trip_frame()[:-2].hex(), trip_frame(3).hex()])
        listing = decode(frames)
        assert "error" in listing[0]
        assert listing[1]["fields"]["stNum"] == 3
        assert "ERROR" in render_line(listing[0])

    def test_non_hex_input_rejected(self):
        with pytest.raises(ValidationError):
            decode("this-is-not-hex")

    def test_jsonl_capture_keeps_publishers(self, tmp_path):
        path = tmp_path / "capture.jsonl"
        write_capture_jsonl(str(path), [CaptureRecord(0, 100_000, trip_frame(), "pc1")])
        listing = decode(str(path))
        assert listing[0]["publisher"] == "pc1"
        assert listing[0]["receivedAtNs"] == 100_000

    def test_replay_capture_shows_stale_counters(self, tmp_path):
        run(load("s5_goose_replay"), out_dir=str(tmp_path))
        listing = decode(str(tmp_path / "s5_goose_replay" / "capture.pcap"))
        trip_frames = [entry["fields"] for entry in listing if entry.get("fields", {}).get("goId") == "PC1_TRIP"]
        assert {fields["stNum"] for fields in trip_frames} == {2, 4}
        replayed = [fields for fields in trip_frames if fields["stNum"] == 2]
        assert len(replayed) == 1 and replayed[0]["allData"] == [True]

    def test_fdi_capture_interleaves_same_sv_id(self, tmp_path):
        run(load("s4_sv_fdi"), out_dir=str(tmp_path))
        listing = decode(str(tmp_path / "s4_sv_fdi" / "capture.pcap"))
        sv = [entry["fields"] for entry in listing if entry["kind"] == "Sv"]
        assert {fields["svId"] for fields in sv} == {"MU01"}
        counts = [fields["smpCnt"] for fields in sv]
        assert counts.count(240) == 2

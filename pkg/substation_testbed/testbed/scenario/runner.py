# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Scenario runner

Wires the bay (feeder, breaker, merging unit, P&C IED, NIDS, attacker) onto one
process bus, runs it to the scenario horizon and builds the run report.

Device order is fixed (attach and start follow it), so the (time, seq) order of
the event loop and hence the capture only depend on the scenario and its seed.
"""

import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from substation_testbed import hooks
from substation_testbed.exceptions import IncompleteChainError, TestbedError, throw
from substation_testbed.logger import debug_print, info_print
from substation_testbed.testbed.attacker.attacker import Attacker
from substation_testbed.testbed.devices.circuit_breaker import BreakerMode, CircuitBreaker
from substation_testbed.testbed.devices.merging_unit import MergingUnit
from substation_testbed.testbed.devices.protection_ied import ProtectionIed
from substation_testbed.testbed.frame_codec.frame_codec import FrameKind, classify_frame, decode_goose
from substation_testbed.testbed.nids.nids import Nids, frame_digest
from substation_testbed.testbed.power_model.power_model import Feeder
from substation_testbed.testbed.process_bus.capture import pcap_bytes
from substation_testbed.testbed.process_bus.process_bus import ProcessBus
from substation_testbed.testbed.scenario.scenario import Scenario, load
from substation_testbed.testbed.timing.timing import analyze_window, decompose, timing_json

FEEDER_ID = "feeder"


@dataclass
class Testbed:
    scenario: Scenario
    bus: ProcessBus
    feeder: Feeder
    breaker: CircuitBreaker
    mu: MergingUnit
    pc: ProtectionIed
    nids: Optional[Nids] = None
    attacker: Optional[Attacker] = None

    __test__ = False

    @property
    def devices(self) -> List[Any]:
        devices = [self.breaker, self.mu, self.pc]
        if self.nids is not None:
            devices.append(self.nids)
        if self.attacker is not None:
            devices.append(self.attacker)
        return devices


@dataclass
class RunResult:
    report: Dict[str, Any]
    exit_code: int
    paths: Dict[str, str] = field(default_factory=dict)
    testbed: Optional[Testbed] = None


def build_testbed(scenario: Scenario) -> Testbed:
    bus = ProcessBus(scenario.latency, horizon_ns=scenario.duration_ns, realtime=scenario.realtime)
    feeder = Feeder(scenario.feeder, scenario.fault)
    breaker = CircuitBreaker(bus, feeder, scenario.breaker, scenario.epoch_seconds)
    hardwired = scenario.breaker.mode is BreakerMode.HARDWIRED_VIA_MU
    testbed = Testbed(
        scenario=scenario,
        bus=bus,
        feeder=feeder,
        breaker=breaker,
        mu=MergingUnit(bus, feeder, scenario.mu, breaker if hardwired else None),
        pc=ProtectionIed(bus, scenario.pc, scenario.epoch_seconds),
        nids=Nids(bus, scenario.nids_whitelist(), scenario.epoch_seconds) if scenario.nids_enabled else None,
        attacker=Attacker(bus, scenario.attacks, scenario.epoch_seconds) if scenario.attacks else None,
    )

    def on_fault(t: int, sample_index: int):
        fault = scenario.fault
        bus.record("fault_inception", FEEDER_ID, sampleIndex=sample_index, phase=fault.phase, faultCurrentPeakA=fault.peak_for(scenario.feeder))
        info_print(f"fault inception on phase {fault.phase} at {t} ns (sample {sample_index})")

    bus.register_timer_handler(FEEDER_ID, on_fault)
    return testbed


def simulate(scenario: Scenario) -> Testbed:
    testbed = build_testbed(scenario)
    for device in testbed.devices:
        device.attach()
    for device in testbed.devices:
        device.start()
    fault_index = testbed.feeder.fault_sample_index()
    if fault_index is not None:
        fault_at = scenario.feeder.sample_time_ns(fault_index)
        if fault_at <= scenario.duration_ns:
            testbed.bus.set_timer(FEEDER_ID, fault_at, fault_index)
    testbed.bus.run_until(scenario.duration_ns)
    debug_print(f"{scenario.name}: {testbed.bus.statistics.as_dict()}")
    return testbed


# ----------------------------------------------------------------------
# Report
# ----------------------------------------------------------------------

def attack_deliveries(testbed: Testbed) -> List[Dict[str, Any]]:
    """First delivery of every attack's injected frames on the capture timeline"""
    if testbed.attacker is None:
        return []
    first_seen: Dict[str, int] = {}
    for record in testbed.bus.capture:
        first_seen.setdefault(frame_digest(record.frame_bytes), record.deliver_at)
    deliveries = []
    for attack in testbed.attacker.attacks:
        times = [first_seen[digest] for digest in testbed.attacker.injected[attack.name] if digest in first_seen]
        deliveries.append({
            "name": attack.name,
            "kind": attack.kind,
            "streamId": attack.stream_id,
            "firstDeliverAt": min(times) if times else None,
        })
    return deliveries


def capture_summary(testbed: Testbed) -> Dict[str, Any]:
    capture = testbed.bus.capture
    by_kind = Counter(classify_frame(record.frame_bytes).value for record in capture)
    by_publisher = Counter(record.publisher for record in capture)
    return {
        "frames": len(capture),
        "byKind": dict(sorted(by_kind.items())),
        "byPublisher": dict(sorted(by_publisher.items())),
        "sha256": hashlib.sha256(pcap_bytes(capture, testbed.scenario.epoch_seconds)).hexdigest(),
    }


def breaker_summary(testbed: Testbed) -> Dict[str, Any]:
    opened = [event for event in testbed.bus.events if event["kind"] == "breaker_open"]
    summary = {"closed": testbed.breaker.closed, "operations": testbed.breaker.operations}
    if opened:
        summary.update(openedAtNs=opened[0]["t"], cause=opened[0]["cause"], feederRmsA=opened[0]["feederRmsA"])
    return summary


def _check(name: str, expected: Any, actual: Any, passed: bool) -> Dict[str, Any]:
    return {"name": name, "expected": expected, "actual": actual, "passed": bool(passed)}


def evaluate_expectations(scenario: Scenario, trip_time_ns: Optional[int], detection: Dict[str, Any], breaker: Dict[str, Any]) -> List[Dict[str, Any]]:
    expect = scenario.expect
    checks = []
    if expect.trip_time_ms is not None:
        actual = None if trip_time_ns is None else trip_time_ns / 1_000_000
        passed = actual is not None and abs(actual - expect.trip_time_ms) <= expect.trip_time_tol_ms
        checks.append(_check("tripTimeMs", [expect.trip_time_ms, expect.trip_time_tol_ms], actual, passed))
    alert_count = detection.get("alertCount", 0)
    if expect.alert_count is not None:
        checks.append(_check("alertCount", expect.alert_count, alert_count, alert_count == expect.alert_count))
    if expect.min_alerts is not None:
        checks.append(_check("minAlerts", expect.min_alerts, alert_count, alert_count >= expect.min_alerts))
    if expect.alert_rules is not None:
        fired = sorted(rule for rule, count in detection.get("ruleCounts", {}).items() if count)
        checks.append(_check("alertRules", list(expect.alert_rules), fired, fired == list(expect.alert_rules)))
    if expect.missed_attacks is not None:
        missed = sorted(detection.get("missedAttacks", []))
        checks.append(_check("missedAttacks", sorted(expect.missed_attacks), missed, missed == sorted(expect.missed_attacks)))
    if expect.breaker_open is not None:
        is_open = not breaker["closed"]
        checks.append(_check("breakerOpen", expect.breaker_open, is_open, is_open == expect.breaker_open))
    if expect.max_detection_latency_ns is not None:
        latencies = [entry["detectionLatencyNs"] for entry in detection.get("detected", {}).values()]
        worst = max(latencies) if latencies else None
        passed = worst is not None and worst <= expect.max_detection_latency_ns
        checks.append(_check("maxDetectionLatencyNs", expect.max_detection_latency_ns, worst, passed))
    return checks


def build_report(testbed: Testbed) -> Dict[str, Any]:
    scenario = testbed.scenario
    deliveries = attack_deliveries(testbed)
    detection = testbed.nids.report(deliveries) if testbed.nids is not None else {}

    timing: Dict[str, Any]
    trip_time_ns = None
    try:
        decomposition = decompose(testbed.bus.events)
    except IncompleteChainError as e:
        timing = {"incomplete": e.missing}
    else:
        trip_time_ns = decomposition.t_p
        windows = []
        for attack in deliveries:
            latency = detection.get("detected", {}).get(attack["name"], {}).get("detectionLatencyNs")
            windows.append(analyze_window(attack["kind"], decomposition, latency, scenario.mitigation_deploy_ns))
        timing = timing_json(decomposition, windows)

    breaker = breaker_summary(testbed)
    expectations = evaluate_expectations(scenario, trip_time_ns, detection, breaker)
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "scenario": scenario.resolved,
        "timing": timing,
        "tripTimeNs": trip_time_ns,
        "detection": detection,
        "attacks": [{**attack, "kind": attack["kind"].value} for attack in deliveries],
        "breaker": breaker,
        "capture": capture_summary(testbed),
        "bus": testbed.bus.statistics.as_dict(),
        "expectations": expectations,
        "passed": all(check["passed"] for check in expectations),
    }


def write_artifacts(testbed: Testbed, report: Dict[str, Any], out_dir: str) -> Dict[str, str]:
    scenario = testbed.scenario
    target = os.path.join(out_dir, scenario.name)
    try:
        os.makedirs(target, exist_ok=True)
    except OSError as e:
        raise TestbedError(f"Cannot create output directory {target}: {e}", title="Scenario Output") from e

    paths = {"events": os.path.join(target, hooks.events_file)}
    testbed.bus.export_events(paths["events"])
    if scenario.output.pcap:
        paths["capture"] = os.path.join(target, hooks.capture_file[scenario.output.capture_format])
        testbed.bus.export_capture(paths["capture"], scenario.output.capture_format, scenario.epoch_seconds)
    if scenario.output.report:
        paths["report"] = os.path.join(target, hooks.report_file)
        try:
            with open(paths["report"], "w", encoding="utf-8") as handle:
                json.dump(report, handle, indent=2, sort_keys=True)
                handle.write("\n")
        except OSError as e:
            raise TestbedError(f"Cannot write report {paths['report']}: {e}", title="Scenario Output") from e
    return paths


def run(scenario: Scenario, out_dir: Optional[str] = None) -> RunResult:
    """
    Run the scenario. Artifacts are written under out_dir/<name>/ when out_dir is given.
    Exit code 0 when every declared expectation holds, 1 otherwise.
    """
    testbed = simulate(scenario)
    report = build_report(testbed)
    paths = write_artifacts(testbed, report, out_dir) if out_dir else {}
    exit_code = 0 if report["passed"] else 1
    info_print(f"{scenario.name}: trip {report['tripTimeNs']} ns, {report['detection'].get('alertCount', 0)} alerts, exit {exit_code}")
    return RunResult(report=report, exit_code=exit_code, paths=paths, testbed=testbed)


_resolving = set()


def captured_trip_frame(name: str, go_id: Optional[str] = None) -> bytes:
    """First trip GOOSE frame (allData[0] true) captured when running scenario `name`"""
    if name in _resolving:
        throw(f"circular reference to scenario '{name}'", key_path="attacks.capturedFrame.fromScenario")
    _resolving.add(name)
    try:
        scenario = load(name)
        testbed = simulate(scenario)
    finally:
        _resolving.discard(name)

    go_id = go_id or scenario.pc.trip_stream.go_id
    for record in testbed.bus.capture:
        if classify_frame(record.frame_bytes) is not FrameKind.GOOSE:
            continue
        frame = decode_goose(record.frame_bytes)
        if frame.go_id == go_id and frame.all_data and frame.all_data[0] is True:
            return record.frame_bytes
    throw(f"scenario '{name}' captured no trip GOOSE for '{go_id}'", key_path="attacks.capturedFrame.fromScenario")

# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Trip latency decomposition

    T_p = T_a + T_b + T_c

T_a  origin (fault inception or attack start) -> trip GOOSE enters the publish buffer
T_b  GOOSE buffered -> received by the actuating device (MU or breaker IED)
T_c  received -> breaker open

Segments are taken from one chain of logged events, so the identity holds exactly.
"""

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

from substation_testbed.exceptions import IncompleteChainError, TestbedError
from substation_testbed.testbed.attacker.attacker import AttackKind

ORIGIN_KINDS = ("fault_inception", "attack_start")


@dataclass(frozen=True)
class TimingReport:
    origin_kind: str
    origin_at: int
    t_a: int
    t_b: int
    t_c: int

    @property
    def t_p(self) -> int:
        return self.t_a + self.t_b + self.t_c

    def as_dict(self) -> Dict:
        return {
            "origin": self.origin_kind,
            "originAtNs": self.origin_at,
            "T_a_ns": self.t_a,
            "T_b_ns": self.t_b,
            "T_c_ns": self.t_c,
            "T_p_ns": self.t_p,
        }


@dataclass(frozen=True)
class WindowAnalysis:
    attack_kind: AttackKind
    available_window: int
    detection_latency: Optional[int]
    mitigation_deploy_time: int

    @property
    def blocked(self) -> bool:
        if self.detection_latency is None:
            return False
        return self.detection_latency + self.mitigation_deploy_time < self.available_window

    def as_dict(self) -> Dict:
        return {
            "attackKind": self.attack_kind.value,
            "availableWindowNs": self.available_window,
            "detectionLatencyNs": self.detection_latency,
            "mitigationDeployTimeNs": self.mitigation_deploy_time,
            "blocked": self.blocked,
        }


def _first(events: List[Dict], kind: str, after: int, predicate=lambda event: True) -> Optional[Dict]:
    for event in events:
        if event["kind"] == kind and event["t"] >= after and predicate(event):
            return event
    return None


def decompose(events: Iterable[Dict]) -> TimingReport:
    """
    Build the TimingReport from an event log. The chain is anchored at the
    breaker opening: origin is the last fault/attack start before the trip GOOSE
    that was delivered to the actuating device and opened the breaker.
    """
    events = sorted(events, key=lambda event: event["t"])

    breaker_open = _first(events, "breaker_open", 0)
    if breaker_open is None:
        raise IncompleteChainError("breaker_open")

    trip_deliveries = [
        event for event in events
        if event["kind"] == "goose_delivered" and event.get("trip") and event["t"] <= breaker_open["t"]
    ]
    if not trip_deliveries:
        raise IncompleteChainError("goose_delivered")
    delivered = trip_deliveries[0]

    buffered = [
        event for event in events
        if event["kind"] == "goose_buffered" and event.get("trip") and event["t"] <= delivered["t"]
        and event.get("goId") == delivered.get("goId") and event.get("stNum") == delivered.get("stNum")
    ]
    if not buffered:
        raise IncompleteChainError("goose_buffered")
    buffered_at = buffered[-1]["t"]

    origins = [event for event in events if event["kind"] in ORIGIN_KINDS and event["t"] <= buffered_at]
    if not origins:
        raise IncompleteChainError("fault_inception")
    origin = origins[-1]

    return TimingReport(
        origin_kind=origin["kind"],
        origin_at=origin["t"],
        t_a=buffered_at - origin["t"],
        t_b=delivered["t"] - buffered_at,
        t_c=breaker_open["t"] - delivered["t"],
    )


def analyze_window(attack_kind: AttackKind, report: TimingReport, detection_latency: Optional[int], mitigation_deploy_time: int) -> WindowAnalysis:
    """
    SV attacks have to be stopped before the trip GOOSE exists (window T_a);
    GOOSE attacks between the malicious GOOSE receipt and breaker actuation (window T_c).
    """
    available = report.t_a if attack_kind is AttackKind.SV_FDI else report.t_c
    return WindowAnalysis(attack_kind, available, detection_latency, mitigation_deploy_time)


def read_event_log(path: str) -> List[Dict]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return [json.loads(line) for line in handle if line.strip()]
    except OSError as e:
        raise TestbedError(f"Cannot read event log {path}: {e}", title="Event Log") from e
    except json.JSONDecodeError as e:
        raise TestbedError(f"Event log {path} is not JSONL: {e}", title="Event Log") from e


def timing_json(report: TimingReport, windows: Iterable[WindowAnalysis] = ()) -> Dict:
    data = report.as_dict()
    data["windows"] = [window.as_dict() for window in windows]
    return data

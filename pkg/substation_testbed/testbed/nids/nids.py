# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Rule-based NIDS for the process bus

Rules (each can be switched off in the scenario):
R1  unknown stream: svId / goId / gocbRef not on the whitelist, or an SV/GOOSE
    frame that does not decode
R2  GOOSE sequence: stNum decreased, stNum unchanged with sqNum <= last,
    or stNum increased with sqNum != 0
R3  GOOSE timestamp: t changed without a stNum change, t unchanged across a
    stNum change, or t older than the last t minus the skew tolerance
R4  SV duplication: an smpCnt already seen recently with a different payload,
    or an smpCnt other than last + 1 (mod 4800)
R5  SV rate: mean inter-arrival of the last frames outside the tolerance band

Stream state is kept per stream id and updated after every evaluated frame.
All alerts raised by one frame are reported with a single alert GOOSE state change.
"""

import hashlib
from collections import Counter, OrderedDict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, FrozenSet, List, Optional, Sequence

from substation_testbed.config import (
    BUS_FIXED_LATENCY_NS,
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    MIN_SV_INTER_PACKET_NS,
    NIDS_MAX_RESPONSE_NS,
    NIDS_PROCESSING_DELAY_NS,
    NIDS_RATE_WINDOW_FRAMES,
    NIDS_SV_DIGEST_HISTORY,
    NIDS_SV_RATE_TOLERANCE,
    NS_PER_MS,
    RETRANSMISSION_INTERVALS_MS,
    SMP_CNT_MODULO,
)
from substation_testbed.exceptions import FrameDecodeError, throw
from substation_testbed.logger import info_print
from substation_testbed.testbed.devices.goose_publisher import GoosePublisher, GooseStreamConfig
from substation_testbed.testbed.frame_codec.frame_codec import (
    FrameKind,
    GooseFrame,
    MacAddress,
    SvFrame,
    UtcTimestamp,
    classify_frame,
    decode_goose,
    decode_sv,
)
from substation_testbed.testbed.process_bus.process_bus import ProcessBus, SubscriptionFilter


class RuleId(str, Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"


DEFAULT_RULES = frozenset({RuleId.R1, RuleId.R2, RuleId.R3, RuleId.R4})
UNKNOWN_STREAM = "?"


def default_alert_stream(go_id: str = "NIDS_ALERT") -> GooseStreamConfig:
    return GooseStreamConfig(
        go_id=go_id,
        gocb_ref="NIDSLD0/LLN0$GO$gcbAlert",
        dat_set="NIDSLD0/LLN0$dsAlert",
        src=MacAddress.parse("00:1A:2B:3C:4D:10"),
        app_id=0x0010,
    )


def frame_digest(frame_bytes: bytes) -> str:
    return hashlib.sha256(frame_bytes).hexdigest()[:16]


def samples_digest(frame: SvFrame) -> bytes:
    """64-bit digest of the samples field as it appears on the wire"""
    payload = b"".join(
        value.to_bytes(4, "big", signed=True) + quality.to_bytes(4, "big")
        for value, quality in frame.samples
    )
    return hashlib.blake2b(payload, digest_size=8).digest()


@dataclass(frozen=True)
class NidsConfig:
    device_id: str = "nids"
    known_sv_ids: FrozenSet[str] = frozenset()
    known_go_ids: FrozenSet[str] = frozenset()
    known_gocb_refs: FrozenSet[str] = frozenset()
    enabled_rules: FrozenSet[RuleId] = DEFAULT_RULES
    processing_delay_ns: int = NIDS_PROCESSING_DELAY_NS
    timestamp_skew_tolerance_ns: int = 2 * max(RETRANSMISSION_INTERVALS_MS) * NS_PER_MS
    sv_rate_tolerance: float = NIDS_SV_RATE_TOLERANCE
    nominal_sv_interval_ns: int = MIN_SV_INTER_PACKET_NS
    rate_window_frames: int = NIDS_RATE_WINDOW_FRAMES
    digest_history: int = NIDS_SV_DIGEST_HISTORY
    alert_stream: GooseStreamConfig = field(default_factory=default_alert_stream)

    def validate(self, key_path: str = "nids", alert_transfer_ns: Optional[int] = BUS_FIXED_LATENCY_NS):
        """alert_transfer_ns is the worst-case bus latency of the alert GOOSE; None skips the response budget check"""
        if self.processing_delay_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.processingDelayNs")
        if alert_transfer_ns is not None and self.processing_delay_ns + alert_transfer_ns >= NIDS_MAX_RESPONSE_NS:
            throw(
                f"detection delay plus alert transfer ({alert_transfer_ns} ns) must stay below {NIDS_MAX_RESPONSE_NS} ns",
                key_path=f"{key_path}.processingDelayNs",
            )
        if self.timestamp_skew_tolerance_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.timestampSkewToleranceNs")
        if not 0 < self.sv_rate_tolerance < 1:
            throw("must be a fraction between 0 and 1", key_path=f"{key_path}.svRateTolerance")
        if self.rate_window_frames < 2:
            throw("must be at least 2", key_path=f"{key_path}.rateWindowFrames")
        self.alert_stream.validate(f"{key_path}.alert")


@dataclass(frozen=True)
class Alert:
    rule_id: RuleId
    stream_id: str
    deliver_at: int
    detect_at: int
    frame_digest: str
    detail: str

    @property
    def latency_ns(self) -> int:
        return self.detect_at - self.deliver_at

    def as_dict(self) -> Dict:
        return {
            "ruleId": self.rule_id.value,
            "streamId": self.stream_id,
            "deliverAtNs": self.deliver_at,
            "detectAtNs": self.detect_at,
            "latencyNs": self.latency_ns,
            "frameDigest": self.frame_digest,
            "detail": self.detail,
        }


@dataclass
class SvStreamState:
    last_smp_cnt: int
    last_arrival: int
    digests: "OrderedDict[int, bytes]" = field(default_factory=OrderedDict)
    arrivals: Deque[int] = field(default_factory=deque)


@dataclass
class GooseStreamState:
    st_num: int
    sq_num: int
    t: UtcTimestamp
    last_arrival: int


class Nids:
    def __init__(self, bus: Optional[ProcessBus], config: NidsConfig, epoch_seconds: int = 0):
        self.bus = bus
        self.config = config
        self.device_id = config.device_id
        self.sv_streams: Dict[str, SvStreamState] = {}
        self.goose_streams: Dict[str, GooseStreamState] = {}
        self.alerts: List[Alert] = []
        self.frames_evaluated = 0
        self.publisher: Optional[GoosePublisher] = None
        if bus is not None:
            self.publisher = GoosePublisher(bus, self.device_id, config.alert_stream, epoch_seconds)

    def attach(self):
        self.bus.register_timer_handler(self.device_id, self._on_timer)
        self.bus.subscribe(SubscriptionFilter.of({ETHERTYPE_SV, ETHERTYPE_GOOSE}), self._on_delivery, self.device_id)

    def start(self):
        self.publisher.start([False], self.bus.now)

    def _enabled(self, rule: RuleId) -> bool:
        return rule in self.config.enabled_rules

    # ------------------------------------------------------------------
    # Rule evaluation
    # ------------------------------------------------------------------

    def on_frame(self, frame_bytes: bytes, deliver_at: int) -> List[Alert]:
        kind = classify_frame(frame_bytes)
        if kind is FrameKind.OTHER:
            return []
        findings: List[tuple] = []
        stream_id = UNKNOWN_STREAM
        try:
            frame = decode_sv(frame_bytes) if kind is FrameKind.SV else decode_goose(frame_bytes)
        except FrameDecodeError as e:
            findings.append((RuleId.R1, f"undecodable {kind.value} frame: {e}"))
        else:
            if isinstance(frame, GooseFrame):
                stream_id = frame.go_id
                if stream_id == self.config.alert_stream.go_id:
                    return []
                findings.extend(self._check_goose(frame, deliver_at))
            else:
                stream_id = frame.sv_id
                findings.extend(self._check_sv(frame, deliver_at))

        self.frames_evaluated += 1
        detect_at = deliver_at + self.config.processing_delay_ns
        digest = frame_digest(frame_bytes)
        alerts = [
            Alert(rule_id=rule, stream_id=stream_id, deliver_at=deliver_at, detect_at=detect_at, frame_digest=digest, detail=detail)
            for rule, detail in findings
            if self._enabled(rule)
        ]
        self.alerts.extend(alerts)
        return alerts

    def _check_goose(self, frame: GooseFrame, deliver_at: int) -> List[tuple]:
        findings = []
        if frame.go_id not in self.config.known_go_ids or frame.gocb_ref not in self.config.known_gocb_refs:
            findings.append((RuleId.R1, f"unknown GOOSE stream goId={frame.go_id} gocbRef={frame.gocb_ref}"))

        last = self.goose_streams.get(frame.go_id)
        if last is not None:
            if frame.st_num < last.st_num:
                findings.append((RuleId.R2, f"stNum decreased {last.st_num} -> {frame.st_num}"))
            elif frame.st_num == last.st_num and frame.sq_num <= last.sq_num:
                findings.append((RuleId.R2, f"sqNum not increasing {last.sq_num} -> {frame.sq_num} at stNum {frame.st_num}"))
            elif frame.st_num > last.st_num and frame.sq_num != 0:
                findings.append((RuleId.R2, f"stNum {last.st_num} -> {frame.st_num} without sqNum reset (sqNum {frame.sq_num})"))

            if frame.st_num == last.st_num and frame.t != last.t:
                findings.append((RuleId.R3, f"t changed without stNum change at stNum {frame.st_num}"))
            elif frame.st_num != last.st_num and frame.t == last.t:
                findings.append((RuleId.R3, f"t unchanged across stNum {last.st_num} -> {frame.st_num}"))
            if frame.t.to_ns() < last.t.to_ns() - self.config.timestamp_skew_tolerance_ns:
                age_ms = (last.t.to_ns() - frame.t.to_ns()) / NS_PER_MS
                findings.append((RuleId.R3, f"t is {age_ms:.1f} ms older than the last seen t"))

        self.goose_streams[frame.go_id] = GooseStreamState(frame.st_num, frame.sq_num, frame.t, deliver_at)
        return findings

    def _check_sv(self, frame: SvFrame, deliver_at: int) -> List[tuple]:
        findings = []
        if frame.sv_id not in self.config.known_sv_ids:
            findings.append((RuleId.R1, f"unknown SV stream svId={frame.sv_id}"))

        digest = samples_digest(frame)
        state = self.sv_streams.get(frame.sv_id)
        if state is None:
            state = SvStreamState(last_smp_cnt=frame.smp_cnt, last_arrival=deliver_at)
            self.sv_streams[frame.sv_id] = state
        else:
            seen = state.digests.get(frame.smp_cnt)
            if seen is not None and seen != digest:
                findings.append((RuleId.R4, f"smpCnt {frame.smp_cnt} seen before with different samples"))
            expected = (state.last_smp_cnt + 1) % SMP_CNT_MODULO
            if frame.smp_cnt != expected:
                findings.append((RuleId.R4, f"smpCnt {frame.smp_cnt}, expected {expected}"))

            state.arrivals.append(deliver_at - state.last_arrival)
            if len(state.arrivals) > self.config.rate_window_frames:
                state.arrivals.popleft()
            if len(state.arrivals) == self.config.rate_window_frames:
                mean_gap = sum(state.arrivals) / len(state.arrivals)
                nominal = self.config.nominal_sv_interval_ns
                if abs(mean_gap - nominal) > self.config.sv_rate_tolerance * nominal:
                    findings.append((RuleId.R5, f"mean inter-arrival {mean_gap:.0f} ns outside {nominal} ns +/- {self.config.sv_rate_tolerance:.0%}"))

        state.last_smp_cnt = frame.smp_cnt
        state.last_arrival = deliver_at
        state.digests.pop(frame.smp_cnt, None)
        state.digests[frame.smp_cnt] = digest
        while len(state.digests) > self.config.digest_history:
            state.digests.popitem(last=False)
        return findings

    # ------------------------------------------------------------------
    # Bus side
    # ------------------------------------------------------------------

    def _on_delivery(self, t: int, frame_bytes: bytes):
        alerts = self.on_frame(frame_bytes, t)
        if not alerts:
            return
        for alert in alerts:
            self.bus.record("alert", self.device_id, **alert.as_dict())
            info_print(f"{self.device_id} {alert.rule_id.value} on {alert.stream_id}: {alert.detail}")
        self.bus.set_timer(self.device_id, alerts[0].detect_at, alerts)

    def _on_timer(self, t: int, alerts: Sequence[Alert]):
        self.publish_alert(alerts, t)

    def publish_alert(self, alerts: Sequence[Alert], t: int):
        """One alert GOOSE state change (stNum + 1, allData=[true]) per alerting frame"""
        self.publisher.change_state([True], t, force=True)
        self.bus.record("alert_goose", self.device_id, stNum=self.publisher.state.st_num, rules=sorted({a.rule_id.value for a in alerts}))

    # ------------------------------------------------------------------
    # Summary
    # ------------------------------------------------------------------

    def report(self, attacks: Sequence[Dict] = ()) -> Dict:
        """
        Detection summary. `attacks` holds {"name", "streamId", "firstDeliverAt"}
        for every injected attack; an attack with no alert on its stream at or
        after its first delivery is missed.
        """
        counts = Counter(alert.rule_id.value for alert in self.alerts)
        detected, missed = {}, []
        for attack in attacks:
            first = attack.get("firstDeliverAt")
            matching = [
                alert for alert in self.alerts
                if first is not None and alert.stream_id == attack["streamId"] and alert.deliver_at >= first
            ]
            if matching:
                detected[attack["name"]] = {
                    "firstDetectAtNs": matching[0].detect_at,
                    "detectionLatencyNs": matching[0].detect_at - first,
                    "rules": sorted({alert.rule_id.value for alert in matching}),
                }
            else:
                missed.append(attack["name"])
        return {
            "framesEvaluated": self.frames_evaluated,
            "alertCount": len(self.alerts),
            "ruleCounts": {rule.value: counts.get(rule.value, 0) for rule in RuleId},
            "alerts": [alert.as_dict() for alert in self.alerts],
            "detected": detected,
            "missedAttacks": missed,
        }

# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Scenario files

A scenario is a JSON object with camelCase keys. Every section is optional;
missing keys take the component defaults. Loading:
1. reads the file (or a built-in scenario by name, see hooks.builtin_scenarios)
2. checks key types and rejects unknown keys, naming the dotted key path
3. builds the component configs and runs their validate() methods
4. checks that every referenced stream id resolves to a configured device

The fully defaulted values are kept in Scenario.resolved and echoed into the
run report.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from substation_testbed import hooks
from substation_testbed.config import DEFAULT_EPOCH_SECONDS, NS_PER_MS
from substation_testbed.exceptions import FrameEncodeError, TestbedError, ValidationError, throw
from substation_testbed.logger import debug_print
from substation_testbed.testbed.attacker.attacker import AttackKind, AttackSpec, GooseReplay, GooseSpoof, SvFdi
from substation_testbed.testbed.devices.circuit_breaker import BreakerConfig, BreakerMode, default_status_stream
from substation_testbed.testbed.devices.goose_publisher import GooseStreamConfig
from substation_testbed.testbed.devices.merging_unit import MuConfig
from substation_testbed.testbed.devices.protection_ied import PcConfig, PcProfile, default_trip_stream
from substation_testbed.testbed.frame_codec.frame_codec import MacAddress, VlanTag
from substation_testbed.testbed.nids.nids import DEFAULT_RULES, NidsConfig, RuleId, default_alert_stream
from substation_testbed.testbed.power_model.power_model import FaultSpec, FeederConfig
from substation_testbed.testbed.process_bus.process_bus import LatencyModel

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(__file__))), "fixtures")

DEFAULT_DURATION_NS = 200 * NS_PER_MS
DEFAULT_MITIGATION_DEPLOY_NS = 1 * NS_PER_MS


@dataclass(frozen=True)
class Expectations:
    trip_time_ms: Optional[float] = None
    trip_time_tol_ms: float = 1.0
    alert_count: Optional[int] = None
    alert_rules: Optional[Tuple[str, ...]] = None
    min_alerts: Optional[int] = None
    missed_attacks: Optional[Tuple[str, ...]] = None
    breaker_open: Optional[bool] = None
    max_detection_latency_ns: Optional[int] = None


@dataclass(frozen=True)
class OutputOptions:
    pcap: bool = True
    report: bool = True
    capture_format: str = "pcap"


@dataclass
class Scenario:
    name: str
    description: str = ""
    seed: int = 0
    duration_ns: int = DEFAULT_DURATION_NS
    epoch_seconds: int = DEFAULT_EPOCH_SECONDS
    realtime: bool = False
    latency: LatencyModel = field(default_factory=LatencyModel)
    feeder: FeederConfig = field(default_factory=FeederConfig)
    faults: List[FaultSpec] = field(default_factory=list)
    mu: MuConfig = field(default_factory=MuConfig)
    pc: PcConfig = field(default_factory=PcConfig)
    breaker: BreakerConfig = field(default_factory=BreakerConfig)
    nids_enabled: bool = True
    nids: NidsConfig = field(default_factory=NidsConfig)
    attacks: List[AttackSpec] = field(default_factory=list)
    expect: Expectations = field(default_factory=Expectations)
    mitigation_deploy_ns: int = DEFAULT_MITIGATION_DEPLOY_NS
    output: OutputOptions = field(default_factory=OutputOptions)
    resolved: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def fault(self) -> Optional[FaultSpec]:
        return self.faults[0] if self.faults else None

    def known_streams(self) -> Dict[str, str]:
        """stream id -> kind for every stream a configured device publishes"""
        streams = {self.mu.sv_id: "sv", self.pc.trip_stream.go_id: "goose"}
        if self.breaker.status_stream is not None:
            streams[self.breaker.status_stream.go_id] = "goose"
        return streams

    def nids_whitelist(self) -> NidsConfig:
        """NIDS config with the whitelist filled from the configured devices"""
        gocb_refs = {self.pc.trip_stream.gocb_ref}
        go_ids = {self.pc.trip_stream.go_id}
        if self.breaker.status_stream is not None:
            gocb_refs.add(self.breaker.status_stream.gocb_ref)
            go_ids.add(self.breaker.status_stream.go_id)
        return NidsConfig(
            device_id=self.nids.device_id,
            known_sv_ids=frozenset({self.mu.sv_id}),
            known_go_ids=frozenset(go_ids),
            known_gocb_refs=frozenset(gocb_refs),
            enabled_rules=self.nids.enabled_rules,
            processing_delay_ns=self.nids.processing_delay_ns,
            timestamp_skew_tolerance_ns=self.nids.timestamp_skew_tolerance_ns,
            sv_rate_tolerance=self.nids.sv_rate_tolerance,
            nominal_sv_interval_ns=self.nids.nominal_sv_interval_ns,
            rate_window_frames=self.nids.rate_window_frames,
            digest_history=self.nids.digest_history,
            alert_stream=self.nids.alert_stream,
        )


class _Section:
    """
    Typed reader over one JSON object. Every key read is recorded with its
    resolved value; finish() rejects the keys nobody asked for.
    """

    def __init__(self, data: Any, key_path: str, resolved: Dict[str, Any]):
        if not isinstance(data, dict):
            throw("must be an object", key_path=key_path)
        self.data = data
        self.key_path = key_path
        self.resolved = resolved
        self._used = set()

    def path(self, key: str) -> str:
        return f"{self.key_path}.{key}" if self.key_path else key

    def get(self, key: str, default: Any, kind: type, resolved_as: Any = None) -> Any:
        self._used.add(key)
        value = self.data.get(key, default)
        if value is not None:
            if kind is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if (kind in (int, float) and isinstance(value, bool)) or not isinstance(value, kind):
                throw(f"must be of type {kind.__name__}", key_path=self.path(key))
        self.resolved[key] = value if resolved_as is None else resolved_as
        return value

    def get_int(self, key: str, default: Optional[int], minimum: Optional[int] = None) -> Optional[int]:
        value = self.get(key, default, int)
        if value is not None and minimum is not None and value < minimum:
            throw(f"must be at least {minimum}", key_path=self.path(key))
        return value

    def get_mac(self, key: str, default: MacAddress) -> MacAddress:
        text = self.get(key, str(default), str)
        try:
            return MacAddress.parse(text)
        except FrameEncodeError as e:
            throw(e.message.split(": ", 1)[-1], key_path=self.path(key))

    def get_choice(self, key: str, default: str, choices) -> str:
        value = self.get(key, default, str)
        if value not in choices:
            throw(f"must be one of {', '.join(sorted(choices))}", key_path=self.path(key))
        return value

    def get_list(self, key: str, default: Optional[list], item_kind: type) -> Optional[list]:
        value = self.get(key, default, list)
        if value is None:
            return None
        for index, item in enumerate(value):
            if (item_kind is int and isinstance(item, bool)) or not isinstance(item, item_kind):
                throw(f"items must be of type {item_kind.__name__}", key_path=f"{self.path(key)}[{index}]")
        self.resolved[key] = list(value)
        return list(value)

    def section(self, key: str) -> "_Section":
        self._used.add(key)
        resolved = self.resolved.setdefault(key, {})
        return _Section(self.data.get(key, {}), self.path(key), resolved)

    def items(self, key: str) -> List["_Section"]:
        self._used.add(key)
        raw = self.data.get(key, [])
        if not isinstance(raw, list):
            throw("must be a list", key_path=self.path(key))
        resolved_items = self.resolved.setdefault(key, [])
        sections = []
        for index, item in enumerate(raw):
            resolved_items.append({})
            sections.append(_Section(item, f"{self.path(key)}[{index}]", resolved_items[-1]))
        return sections

    def has(self, key: str) -> bool:
        return key in self.data

    def finish(self):
        for key in sorted(set(self.data) - self._used):
            throw("unknown key", key_path=self.path(key))


# ----------------------------------------------------------------------
# Section readers
# ----------------------------------------------------------------------

def _read_vlan(section: _Section) -> Optional[VlanTag]:
    if not section.has("vlan"):
        section.get("vlan", None, dict)
        return None
    vlan = section.section("vlan")
    tag = VlanTag(vid=vlan.get_int("vid", 0, minimum=0), priority=vlan.get_int("priority", 4, minimum=0))
    if tag.vid > 0x0FFF:
        throw("must fit in 12 bits", key_path=vlan.path("vid"))
    if tag.priority > 7:
        throw("must be between 0 and 7", key_path=vlan.path("priority"))
    vlan.finish()
    return tag


def _read_stream(section: _Section, default: GooseStreamConfig) -> GooseStreamConfig:
    intervals = section.get_list("retransmissionIntervalsMs", list(default.retransmission_intervals_ms), int)
    stream = GooseStreamConfig(
        go_id=section.get("goId", default.go_id, str),
        gocb_ref=section.get("gocbRef", default.gocb_ref, str),
        dat_set=section.get("datSet", default.dat_set, str),
        src=section.get_mac("src", default.src),
        dst=section.get_mac("dst", default.dst),
        app_id=section.get_int("appId", default.app_id, minimum=0),
        conf_rev=section.get_int("confRev", default.conf_rev, minimum=0),
        time_allowed_to_live_ms=section.get_int("timeAllowedToLiveMs", default.time_allowed_to_live_ms, minimum=1),
        retransmission_intervals_ms=tuple(intervals),
        initial_st_num=section.get_int("initialStNum", default.initial_st_num),
        vlan=_read_vlan(section),
    )
    section.finish()
    return stream


def _read_feeder(section: _Section) -> FeederConfig:
    defaults = FeederConfig()
    feeder = FeederConfig(
        frequency_hz=section.get_int("frequencyHz", defaults.frequency_hz, minimum=1),
        sampling_rate=section.get_int("samplingRate", defaults.sampling_rate, minimum=1),
        normal_current_peak_a=section.get("normalCurrentPeakA", defaults.normal_current_peak_a, float),
        nominal_voltage_peak_v=section.get("nominalVoltagePeakV", defaults.nominal_voltage_peak_v, float),
    )
    section.finish()
    return feeder


def _read_faults(root: _Section, feeder: FeederConfig) -> List[FaultSpec]:
    faults = []
    for section in root.items("faults"):
        fault = FaultSpec(
            inception_ns=section.get_int("inceptionNs", 0),
            fault_current_peak_a=section.get("faultCurrentPeakA", None, float),
            phase=section.get("phase", "A", str),
            type=section.get("type", "line_to_ground", str),
        )
        section.resolved["faultCurrentPeakA"] = fault.peak_for(feeder)
        section.finish()
        fault.validate(feeder, key_path=section.key_path)
        faults.append(fault)
    if len(faults) > 1:
        throw("only one fault per scenario is modelled", key_path="faults")
    return faults


def _read_mu(section: _Section, feeder: FeederConfig) -> MuConfig:
    defaults = MuConfig()
    mu = MuConfig(
        device_id=section.get("deviceId", defaults.device_id, str),
        sv_id=section.get("svId", defaults.sv_id, str),
        dst=section.get_mac("dst", defaults.dst),
        src=section.get_mac("src", defaults.src),
        app_id=section.get_int("appId", defaults.app_id, minimum=0),
        conf_rev=section.get_int("confRev", defaults.conf_rev, minimum=0),
        smp_synch=section.get_int("smpSynch", defaults.smp_synch, minimum=0),
        sampling_rate=section.get_int("samplingRate", feeder.sampling_rate),
        sv_processing_delay_ns=section.get_int("svProcessingDelayNs", defaults.sv_processing_delay_ns),
        goose_to_trip_delay_ns=section.get_int("gooseToTripDelayNs", defaults.goose_to_trip_delay_ns),
        subscribed_go_id=section.get("subscribedGoId", defaults.subscribed_go_id, str),
        vlan=_read_vlan(section),
    )
    section.finish()
    mu.validate(feeder.sampling_rate, key_path=section.key_path)
    return mu


def _read_pc(section: _Section, feeder: FeederConfig, mu: MuConfig) -> PcConfig:
    defaults = PcConfig()
    profile = section.get_choice("profile", defaults.profile.value, {p.value for p in PcProfile})
    pc = PcConfig(
        device_id=section.get("deviceId", defaults.device_id, str),
        subscribed_sv_id=section.get("subscribedSvId", mu.sv_id, str),
        trip_stream=_read_stream(section.section("trip"), default_trip_stream()),
        profile=PcProfile(profile),
        processing_delay_ns=section.get("processingDelayNs", None, int),
        pickup_rms_a=section.get("pickupRmsA", defaults.pickup_rms_a, float),
        window_samples=section.get_int("windowSamples", feeder.samples_per_cycle),
    )
    section.resolved["processingDelayNs"] = pc.effective_processing_delay_ns
    section.finish()
    pc.validate(feeder.samples_per_cycle, key_path=section.key_path)
    return pc


def _read_breaker(section: _Section, pc: PcConfig) -> BreakerConfig:
    defaults = BreakerConfig()
    mode = BreakerMode(section.get_choice("mode", defaults.mode.value, {m.value for m in BreakerMode}))
    status = None
    if mode is BreakerMode.DIRECT_GOOSE_BREAKER_IED:
        status = _read_stream(section.section("status"), default_status_stream())
    elif section.has("status"):
        throw("only used in direct_goose_breaker_ied mode", key_path=section.path("status"))
    breaker = BreakerConfig(
        device_id=section.get("deviceId", defaults.device_id, str),
        mode=mode,
        direct_goose_delay_ns=section.get_int("directGooseDelayNs", defaults.direct_goose_delay_ns),
        subscribed_go_id=section.get("subscribedGoId", pc.trip_stream.go_id, str),
        status_stream=status,
    )
    section.finish()
    breaker.validate(key_path=section.key_path)
    return breaker


def _read_nids(section: _Section, latency: LatencyModel) -> Tuple[bool, NidsConfig]:
    defaults = NidsConfig()
    enabled = section.get("enabled", True, bool)
    rule_names = section.get_list("rules", sorted(rule.value for rule in DEFAULT_RULES), str)
    for index, rule in enumerate(rule_names):
        if rule not in {r.value for r in RuleId}:
            throw(f"unknown rule '{rule}'", key_path=f"{section.path('rules')}[{index}]")
    nids = NidsConfig(
        device_id=section.get("deviceId", defaults.device_id, str),
        enabled_rules=frozenset(RuleId(rule) for rule in rule_names),
        processing_delay_ns=section.get_int("processingDelayNs", defaults.processing_delay_ns),
        timestamp_skew_tolerance_ns=section.get_int("timestampSkewToleranceNs", defaults.timestamp_skew_tolerance_ns),
        sv_rate_tolerance=section.get("svRateTolerance", defaults.sv_rate_tolerance, float),
        rate_window_frames=section.get_int("rateWindowFrames", defaults.rate_window_frames),
        digest_history=section.get_int("digestHistory", defaults.digest_history, minimum=1),
        alert_stream=_read_stream(section.section("alert"), default_alert_stream()),
    )
    section.finish()
    nids.validate(key_path=section.key_path, alert_transfer_ns=latency.fixed_ns + latency.jitter_ns if enabled else None)
    return enabled, nids


def _read_captured_frame(section: _Section, base_dir: str) -> bytes:
    sources = [key for key in ("fromScenario", "hex", "pcap") if section.has(key)]
    if len(sources) != 1:
        throw("exactly one of fromScenario, hex, pcap is required", key_path=section.key_path)
    source = sources[0]
    if source == "hex":
        text = section.get("hex", None, str)
        section.finish()
        try:
            return bytes.fromhex(text)
        except ValueError:
            throw("not a hex string", key_path=section.path("hex"))
    if source == "pcap":
        from substation_testbed.testbed.process_bus.capture import read_pcap

        path = section.get("pcap", None, str)
        index = section.get_int("index", 0, minimum=0)
        section.finish()
        path = path if os.path.isabs(path) else os.path.join(base_dir, path)
        try:
            packets = read_pcap(path)
        except (OSError, TestbedError) as e:
            throw(f"cannot read pcap: {e}", key_path=section.path("pcap"))
        if index >= len(packets):
            throw(f"pcap has only {len(packets)} packets", key_path=section.path("index"))
        return packets[index].frame_bytes

    from substation_testbed.testbed.scenario.runner import captured_trip_frame

    name = section.get("fromScenario", None, str)
    go_id = section.get("goId", None, str)
    section.finish()
    return captured_trip_frame(name, go_id=go_id)


def _read_attacks(root: _Section, feeder: FeederConfig, base_dir: str) -> List[AttackSpec]:
    attacks: List[AttackSpec] = []
    for section in root.items("attacks"):
        name = section.get("name", None, str)
        if not name:
            throw("is required", key_path=section.path("name"))
        variant = AttackKind(section.get_choice("variant", AttackKind.SV_FDI.value, {k.value for k in AttackKind}))
        if variant is AttackKind.SV_FDI:
            defaults = SvFdi(name, "")
            attack = SvFdi(
                name=name,
                target_stream=section.get("targetStream", None, str) or "",
                injected_peak_a=section.get("injectedPeakA", defaults.injected_peak_a, float),
                inter_packet_ns=section.get_int("interPacketNs", defaults.inter_packet_ns),
                start_at_ns=section.get_int("startAtNs", defaults.start_at_ns),
                duration_ns=section.get_int("durationNs", defaults.duration_ns),
                voltage_peak_v=feeder.nominal_voltage_peak_v,
                frequency_hz=feeder.frequency_hz,
                sampling_rate=feeder.sampling_rate,
            )
        elif variant is AttackKind.GOOSE_REPLAY:
            captured = _read_captured_frame(section.section("capturedFrame"), base_dir)
            section.resolved["capturedFrameHex"] = captured.hex()
            attack = GooseReplay(
                name=name,
                captured_frame=captured,
                inject_at_ns=section.get_int("injectAtNs", 0),
            )
        else:
            all_data = section.get_list("allData", [True], bool)
            attack = GooseSpoof(
                name=name,
                target_stream=section.get("targetStream", None, str) or "",
                all_data=tuple(all_data),
                conformant=section.get("conformant", True, bool),
                inject_at_ns=section.get_int("injectAtNs", 0),
            )
        section.finish()
        attack.validate(key_path=section.key_path)
        if any(existing.name == name for existing in attacks):
            throw(f"duplicate attack name '{name}'", key_path=section.path("name"))
        attacks.append(attack)
    return attacks


def _read_expect(section: _Section) -> Expectations:
    rules = section.get_list("alertRules", None, str)
    missed = section.get_list("missedAttacks", None, str)
    expect = Expectations(
        trip_time_ms=section.get("tripTimeMs", None, float),
        trip_time_tol_ms=section.get("tripTimeTolMs", 1.0, float),
        alert_count=section.get("alertCount", None, int),
        alert_rules=tuple(sorted(rules)) if rules is not None else None,
        min_alerts=section.get("minAlerts", None, int),
        missed_attacks=tuple(missed) if missed is not None else None,
        breaker_open=section.get("breakerOpen", None, bool),
        max_detection_latency_ns=section.get("maxDetectionLatencyNs", None, int),
    )
    section.finish()
    if expect.trip_time_tol_ms < 0:
        throw("must not be negative", key_path=section.path("tripTimeTolMs"))
    return expect


def _read_output(section: _Section) -> OutputOptions:
    output = OutputOptions(
        pcap=section.get("pcap", True, bool),
        report=section.get("report", True, bool),
        capture_format=section.get_choice("captureFormat", "pcap", set(hooks.capture_file)),
    )
    section.finish()
    return output


def _check_references(scenario: Scenario):
    streams = scenario.known_streams()
    if scenario.pc.subscribed_sv_id != scenario.mu.sv_id:
        throw(f"'{scenario.pc.subscribed_sv_id}' is not published by any merging unit", key_path="devices.pc.subscribedSvId")
    trip_go_id = scenario.pc.trip_stream.go_id
    if scenario.breaker.mode is BreakerMode.HARDWIRED_VIA_MU and scenario.mu.subscribed_go_id != trip_go_id:
        throw(f"'{scenario.mu.subscribed_go_id}' is not published by any P&C IED", key_path="devices.mu.subscribedGoId")
    if scenario.breaker.mode is BreakerMode.DIRECT_GOOSE_BREAKER_IED and scenario.breaker.subscribed_go_id != trip_go_id:
        throw(f"'{scenario.breaker.subscribed_go_id}' is not published by any P&C IED", key_path="devices.breaker.subscribedGoId")
    if len(streams) < 2 + (scenario.breaker.status_stream is not None):
        throw("stream ids of the configured devices must be distinct", key_path="devices")
    if scenario.nids.alert_stream.go_id in streams:
        throw("alert goId collides with a device stream", key_path="nids.alert.goId")
    for index, attack in enumerate(scenario.attacks):
        if attack.kind is AttackKind.GOOSE_REPLAY:
            continue
        wanted = "sv" if attack.kind is AttackKind.SV_FDI else "goose"
        if streams.get(attack.stream_id) != wanted:
            throw(f"'{attack.stream_id}' is not a configured {wanted.upper()} stream", key_path=f"attacks[{index}].targetStream")


def parse(data: Dict[str, Any], seed: Optional[int] = None, base_dir: str = ".", source: Optional[str] = None) -> Scenario:
    resolved: Dict[str, Any] = {}
    root = _Section(data, "", resolved)
    name = root.get("name", None, str)
    if not name:
        throw("is required", key_path="name")

    scenario_seed = root.get_int("seed", 0, minimum=0)
    if seed is not None:
        scenario_seed = seed
        resolved["seed"] = seed

    bus = root.section("bus")
    latency = LatencyModel(
        fixed_ns=bus.get_int("fixedLatencyNs", LatencyModel().fixed_ns, minimum=0),
        jitter_ns=bus.get_int("jitterNs", LatencyModel().jitter_ns, minimum=0),
        seed=scenario_seed,
    )
    bus.finish()

    feeder = _read_feeder(root.section("feeder"))
    devices = root.section("devices")
    mu = _read_mu(devices.section("mu"), feeder)
    pc = _read_pc(devices.section("pc"), feeder, mu)
    breaker = _read_breaker(devices.section("breaker"), pc)
    devices.finish()
    nids_enabled, nids = _read_nids(root.section("nids"), latency)

    scenario = Scenario(
        name=name,
        description=root.get("description", "", str),
        seed=scenario_seed,
        duration_ns=root.get_int("durationNs", DEFAULT_DURATION_NS, minimum=1),
        epoch_seconds=root.get_int("epochSeconds", DEFAULT_EPOCH_SECONDS, minimum=0),
        realtime=root.get("realtime", False, bool),
        latency=latency,
        feeder=feeder,
        faults=_read_faults(root, feeder),
        mu=mu,
        pc=pc,
        breaker=breaker,
        nids_enabled=nids_enabled,
        nids=nids,
        attacks=_read_attacks(root, feeder, base_dir),
        expect=_read_expect(root.section("expect")),
        mitigation_deploy_ns=root.get_int("mitigationDeployNs", DEFAULT_MITIGATION_DEPLOY_NS, minimum=0),
        output=_read_output(root.section("output")),
        resolved=resolved,
        source=source,
    )
    root.finish()
    _check_references(scenario)
    debug_print(f"Loaded scenario {name} ({len(scenario.faults)} faults, {len(scenario.attacks)} attacks)")
    return scenario


def builtin_path(name: str) -> Optional[str]:
    file_name = hooks.builtin_scenarios.get(name)
    return os.path.join(FIXTURES_DIR, file_name) if file_name else None


def list_builtin() -> List[Dict[str, str]]:
    scenarios = []
    for name in hooks.builtin_scenarios:
        with open(builtin_path(name), "r", encoding="utf-8") as handle:
            data = json.load(handle)
        scenarios.append({"name": name, "description": data.get("description", "")})
    return scenarios


def load(path_or_name: str, seed: Optional[int] = None) -> Scenario:
    """
    Load a scenario from a JSON file, or a built-in scenario by name
    """
    path = path_or_name
    if not os.path.exists(path):
        path = builtin_path(path_or_name)
        if path is None:
            throw(f"No scenario file or built-in scenario named '{path_or_name}'", key_path="scenario")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ValidationError(f"not valid JSON ({e.msg} at line {e.lineno})", key_path=os.path.basename(path)) from e
    except OSError as e:
        raise TestbedError(f"Cannot read scenario {path}: {e}", title="Scenario") from e
    return parse(data, seed=seed, base_dir=os.path.dirname(os.path.abspath(path)), source=path)

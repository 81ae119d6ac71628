# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Process bus adversary

The attacker only knows what it has seen on the wire: every crafted frame is
built from a StreamProfile learned from observed SV / GOOSE traffic.

Attacks:
- SV false data injection: a parallel SV stream cloning the victim stream's
  addressing, synthetic samples with a chosen peak, smpCnt free-running from the
  last observed value + 1
- GOOSE replay: a previously captured frame re-published byte for byte
- GOOSE spoof: a crafted frame for a learned GOOSE stream, either protocol
  conformant (stNum + 1, sqNum 0, fresh t) or reusing the observed counters
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple, Union

from substation_testbed.config import (
    ATTACKER_INTER_PACKET_NS,
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    MIN_SV_INTER_PACKET_NS,
    NOMINAL_VOLTAGE_PEAK_V,
    SAMPLING_RATE,
    SMP_CNT_MODULO,
    SYSTEM_FREQUENCY_HZ,
)
from substation_testbed.exceptions import FrameDecodeError, ValidationError, throw
from substation_testbed.logger import debug_print, info_print
from substation_testbed.testbed.devices.merging_unit import CURRENT_SCALE, VOLTAGE_SCALE, to_wire
from substation_testbed.testbed.frame_codec.frame_codec import (
    FrameKind,
    GooseFrame,
    MacAddress,
    SvFrame,
    UtcTimestamp,
    VlanTag,
    classify_frame,
    decode_goose,
    decode_sv,
    encode_goose,
    encode_sv,
)
from substation_testbed.testbed.nids.nids import frame_digest
from substation_testbed.testbed.power_model.power_model import DEFAULT_PHASE_ANGLES, waveform
from substation_testbed.testbed.process_bus.process_bus import ProcessBus, SubscriptionFilter


class AttackKind(str, Enum):
    SV_FDI = "sv_fdi"
    GOOSE_REPLAY = "goose_replay"
    GOOSE_SPOOF = "goose_spoof"


@dataclass
class StreamProfile:
    kind: FrameKind
    stream_id: str
    dst: MacAddress
    src: MacAddress
    app_id: int
    conf_rev: int
    vlan: Optional[VlanTag] = None
    frames_seen: int = 0
    last_seen_at: Optional[int] = None
    # SV
    smp_synch: int = 0
    last_smp_cnt: Optional[int] = None
    # GOOSE
    gocb_ref: Optional[str] = None
    dat_set: Optional[str] = None
    time_allowed_to_live: int = 0
    st_num: Optional[int] = None
    sq_num: Optional[int] = None
    t: Optional[UtcTimestamp] = None
    all_data: Tuple[bool, ...] = ()
    simulation: bool = False
    nds_com: bool = False

    def as_dict(self) -> Dict:
        data = {
            "kind": self.kind.value,
            "streamId": self.stream_id,
            "dst": str(self.dst),
            "src": str(self.src),
            "appId": self.app_id,
            "framesSeen": self.frames_seen,
        }
        if self.kind is FrameKind.SV:
            data["lastSmpCnt"] = self.last_smp_cnt
        else:
            data.update({"gocbRef": self.gocb_ref, "stNum": self.st_num, "sqNum": self.sq_num, "allData": list(self.all_data)})
        return data


@dataclass(frozen=True)
class SvFdi:
    name: str
    target_stream: str
    injected_peak_a: float = 20_000.0
    inter_packet_ns: int = ATTACKER_INTER_PACKET_NS
    start_at_ns: int = 0
    duration_ns: int = 20_000_000
    voltage_peak_v: float = NOMINAL_VOLTAGE_PEAK_V
    frequency_hz: int = SYSTEM_FREQUENCY_HZ
    sampling_rate: int = SAMPLING_RATE
    kind = AttackKind.SV_FDI

    def validate(self, key_path: str = "attacks"):
        if self.inter_packet_ns < MIN_SV_INTER_PACKET_NS:
            throw(f"must be at least {MIN_SV_INTER_PACKET_NS} ns (nominal SV rate)", key_path=f"{key_path}.interPacketNs")
        if self.injected_peak_a < 0:
            throw("must not be negative", key_path=f"{key_path}.injectedPeakA")
        if self.duration_ns <= 0:
            throw("must be positive", key_path=f"{key_path}.durationNs")
        if self.start_at_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.startAtNs")

    @property
    def stream_id(self) -> str:
        return self.target_stream

    @property
    def inject_at_ns(self) -> int:
        return self.start_at_ns


@dataclass(frozen=True)
class GooseReplay:
    name: str
    captured_frame: bytes
    inject_at_ns: int = 0
    kind = AttackKind.GOOSE_REPLAY

    def validate(self, key_path: str = "attacks"):
        frame_to_replay(self.captured_frame, key_path=f"{key_path}.capturedFrame")
        if self.inject_at_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.injectAtNs")

    @property
    def stream_id(self) -> str:
        return decode_goose(self.captured_frame).go_id


@dataclass(frozen=True)
class GooseSpoof:
    name: str
    target_stream: str
    all_data: Tuple[bool, ...] = (True,)
    conformant: bool = True
    inject_at_ns: int = 0
    kind = AttackKind.GOOSE_SPOOF

    def validate(self, key_path: str = "attacks"):
        if not self.all_data:
            throw("must not be empty", key_path=f"{key_path}.allData")
        if self.inject_at_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.injectAtNs")

    @property
    def stream_id(self) -> str:
        return self.target_stream


AttackSpec = Union[SvFdi, GooseReplay, GooseSpoof]


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------

class StreamLearner:
    def __init__(self):
        self.profiles: Dict[str, StreamProfile] = {}
        self.skipped = 0

    def observe(self, frame_bytes: bytes, t: Optional[int] = None):
        kind = classify_frame(frame_bytes)
        if kind is FrameKind.OTHER:
            return
        try:
            frame = decode_sv(frame_bytes) if kind is FrameKind.SV else decode_goose(frame_bytes)
        except FrameDecodeError:
            self.skipped += 1
            return

        stream_id = frame.sv_id if kind is FrameKind.SV else frame.go_id
        profile = self.profiles.get(stream_id)
        if profile is None:
            profile = StreamProfile(kind=kind, stream_id=stream_id, dst=frame.dst, src=frame.src, app_id=frame.app_id, conf_rev=frame.conf_rev, vlan=frame.vlan)
            self.profiles[stream_id] = profile
        profile.frames_seen += 1
        profile.last_seen_at = t
        if isinstance(frame, SvFrame):
            profile.smp_synch = frame.smp_synch
            profile.last_smp_cnt = frame.smp_cnt
        else:
            profile.gocb_ref = frame.gocb_ref
            profile.dat_set = frame.dat_set
            profile.time_allowed_to_live = frame.time_allowed_to_live
            profile.st_num = frame.st_num
            profile.sq_num = frame.sq_num
            profile.t = frame.t
            profile.all_data = frame.all_data
            profile.simulation = frame.simulation
            profile.nds_com = frame.nds_com


@dataclass
class LearnResult:
    profiles: Dict[str, StreamProfile] = field(default_factory=dict)
    skipped: int = 0


def learn_streams(frames: Iterable[Union[bytes, Tuple[int, bytes]]]) -> LearnResult:
    """Profiles of every SV / GOOSE stream in a capture (bytes or (t, bytes) items)"""
    learner = StreamLearner()
    for item in frames:
        if isinstance(item, tuple):
            learner.observe(item[1], item[0])
        else:
            learner.observe(item)
    return LearnResult(learner.profiles, learner.skipped)


def require_profile(profiles: Dict[str, StreamProfile], stream_id: str, kind: FrameKind) -> StreamProfile:
    profile = profiles.get(stream_id)
    if profile is None:
        throw(f"no {kind.value} stream '{stream_id}' has been observed", key_path="attacks.targetStream")
    if profile.kind is not kind:
        throw(f"stream '{stream_id}' is {profile.kind.value}, not {kind.value}", key_path="attacks.targetStream")
    return profile


# ---------------------------------------------------------------------------
# Crafting
# ---------------------------------------------------------------------------

def fdi_frame(profile: StreamProfile, attack: SvFdi, index: int) -> bytes:
    """The index-th injected frame, continuing the observed smpCnt"""
    smp_cnt = (profile.last_smp_cnt + 1 + index) % SMP_CNT_MODULO
    currents = [float(waveform(attack.injected_peak_a, smp_cnt, attack.frequency_hz, attack.sampling_rate, angle)) for angle in DEFAULT_PHASE_ANGLES]
    voltages = [float(waveform(attack.voltage_peak_v, smp_cnt, attack.frequency_hz, attack.sampling_rate, angle)) for angle in DEFAULT_PHASE_ANGLES]
    samples = [(to_wire(value, CURRENT_SCALE), 0) for value in currents]
    samples.append((to_wire(sum(currents), CURRENT_SCALE), 0))
    samples.extend((to_wire(value, VOLTAGE_SCALE), 0) for value in voltages)
    samples.append((to_wire(sum(voltages), VOLTAGE_SCALE), 0))
    return encode_sv(SvFrame(
        dst=profile.dst, src=profile.src, app_id=profile.app_id, sv_id=profile.stream_id,
        smp_cnt=smp_cnt, conf_rev=profile.conf_rev, smp_synch=profile.smp_synch,
        samples=samples, vlan=profile.vlan,
    ))


def craft_sv_fdi(profile: StreamProfile, attack: SvFdi) -> List[Tuple[int, bytes]]:
    """All (publish time, frame) pairs of an FDI run, for offline use"""
    count = -(-attack.duration_ns // attack.inter_packet_ns)
    return [(attack.start_at_ns + i * attack.inter_packet_ns, fdi_frame(profile, attack, i)) for i in range(count)]


def frame_to_replay(frame_bytes: bytes, key_path: str = "capturedFrame") -> GooseFrame:
    if classify_frame(frame_bytes) is not FrameKind.GOOSE:
        throw("captured frame is not a GOOSE frame", key_path=key_path)
    try:
        return decode_goose(frame_bytes)
    except FrameDecodeError as e:
        raise ValidationError(f"captured frame does not decode: {e}", key_path=key_path) from e


def craft_goose_spoof(profile: StreamProfile, attack: GooseSpoof, t: UtcTimestamp) -> bytes:
    if attack.conformant:
        st_num, sq_num, stamp = profile.st_num + 1, 0, t
    else:
        st_num, sq_num, stamp = profile.st_num, profile.sq_num, profile.t
    return encode_goose(GooseFrame(
        dst=profile.dst, src=profile.src, app_id=profile.app_id, gocb_ref=profile.gocb_ref,
        time_allowed_to_live=profile.time_allowed_to_live, dat_set=profile.dat_set,
        go_id=profile.stream_id, t=stamp, st_num=st_num, sq_num=sq_num, all_data=attack.all_data,
        simulation=profile.simulation, conf_rev=profile.conf_rev, nds_com=profile.nds_com, vlan=profile.vlan,
    ))


# ---------------------------------------------------------------------------
# Bus device
# ---------------------------------------------------------------------------

class Attacker:
    def __init__(self, bus: ProcessBus, attacks: List[AttackSpec], epoch_seconds: int, device_id: str = "attacker"):
        self.bus = bus
        self.attacks = list(attacks)
        self.epoch_seconds = epoch_seconds
        self.device_id = device_id
        self.learner = StreamLearner()
        # attack name -> digests of the frames it injected
        self.injected: Dict[str, List[str]] = {attack.name: [] for attack in self.attacks}
        self._fdi_profiles: Dict[str, StreamProfile] = {}

    def attach(self):
        self.bus.register_timer_handler(self.device_id, self._on_timer)
        self.bus.subscribe(SubscriptionFilter.of({ETHERTYPE_SV, ETHERTYPE_GOOSE}), self._on_delivery, self.device_id)

    def start(self):
        for index, attack in enumerate(self.attacks):
            self.bus.set_timer(self.device_id, attack.inject_at_ns, ("start", index, 0))

    def _on_delivery(self, t: int, frame_bytes: bytes):
        self.learner.observe(frame_bytes, t)

    def _inject(self, attack: AttackSpec, frame_bytes: bytes):
        self.bus.publish(frame_bytes, self.device_id)
        self.injected[attack.name].append(frame_digest(frame_bytes))

    def _on_timer(self, t: int, tag):
        action, index, step = tag
        attack = self.attacks[index]
        if action == "start":
            self.bus.record("attack_start", self.device_id, attack=attack.name, attackKind=attack.kind.value, streamId=attack.stream_id)
            info_print(f"{self.device_id} starting {attack.kind.value} '{attack.name}' at {t} ns")
        if isinstance(attack, SvFdi):
            self.run_sv_fdi(attack, index, step)
        elif isinstance(attack, GooseReplay):
            self.run_goose_replay(attack)
        else:
            self.run_goose_spoof(attack)

    def run_sv_fdi(self, attack: SvFdi, index: int, step: int):
        if step == 0:
            profile = require_profile(self.learner.profiles, attack.target_stream, FrameKind.SV)
            # freeze the counters observed at attack start
            self._fdi_profiles[attack.name] = StreamProfile(**vars(profile))
        profile = self._fdi_profiles[attack.name]
        self._inject(attack, fdi_frame(profile, attack, step))
        next_at = attack.start_at_ns + (step + 1) * attack.inter_packet_ns
        if next_at < attack.start_at_ns + attack.duration_ns:
            self.bus.set_timer(self.device_id, next_at, ("step", index, step + 1))
        else:
            debug_print(f"{attack.name} finished after {step + 1} frames")

    def run_goose_replay(self, attack: GooseReplay):
        frame = frame_to_replay(attack.captured_frame)
        self._inject(attack, attack.captured_frame)
        self.bus.record("goose_buffered", self.device_id, goId=frame.go_id, stNum=frame.st_num, trip=frame.all_data[0], attack=attack.name)

    def run_goose_spoof(self, attack: GooseSpoof):
        profile = require_profile(self.learner.profiles, attack.target_stream, FrameKind.GOOSE)
        frame_bytes = craft_goose_spoof(profile, attack, UtcTimestamp.from_sim_time(self.epoch_seconds, self.bus.now))
        frame = decode_goose(frame_bytes)
        self._inject(attack, frame_bytes)
        self.bus.record("goose_buffered", self.device_id, goId=frame.go_id, stNum=frame.st_num, trip=frame.all_data[0], attack=attack.name)

# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

from dataclasses import dataclass
from typing import Optional

from substation_testbed.config import (
    DEFAULT_SV_DST,
    ETHERTYPE_GOOSE,
    MU_GOOSE_TO_TRIP_NS,
    SAMPLING_RATE,
    SMP_CNT_MODULO,
)
from substation_testbed.exceptions import FrameDecodeError, throw
from substation_testbed.testbed.devices.circuit_breaker import CircuitBreaker
from substation_testbed.testbed.frame_codec.frame_codec import MacAddress, SvFrame, VlanTag, decode_goose, encode_sv
from substation_testbed.testbed.power_model.power_model import Feeder
from substation_testbed.testbed.process_bus.process_bus import ProcessBus, SubscriptionFilter

I32_MIN = -(2**31)
I32_MAX = 2**31 - 1

# wire units: currents in mA, voltages in 10 mV
CURRENT_SCALE = 1000
VOLTAGE_SCALE = 100


@dataclass(frozen=True)
class MuConfig:
    device_id: str = "mu1"
    sv_id: str = "MU01"
    dst: MacAddress = MacAddress.parse(DEFAULT_SV_DST)
    src: MacAddress = MacAddress.parse("00:1A:2B:3C:4D:01")
    app_id: int = 0x4000
    conf_rev: int = 1
    smp_synch: int = 2
    sampling_rate: int = SAMPLING_RATE
    sv_processing_delay_ns: int = 0
    goose_to_trip_delay_ns: int = MU_GOOSE_TO_TRIP_NS
    subscribed_go_id: str = "PC1_TRIP"
    vlan: Optional[VlanTag] = None

    def validate(self, feeder_sampling_rate: int, key_path: str = "devices.mu"):
        if self.sampling_rate != feeder_sampling_rate:
            throw(f"must equal the feeder sampling rate {feeder_sampling_rate}", key_path=f"{key_path}.samplingRate")
        if not self.dst.is_multicast:
            throw("SV destination must be a multicast address", key_path=f"{key_path}.dst")
        if self.sv_processing_delay_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.svProcessingDelayNs")
        if self.goose_to_trip_delay_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.gooseToTripDelayNs")


def to_wire(value: float, scale: int) -> int:
    return max(I32_MIN, min(I32_MAX, int(round(value * scale))))


class MergingUnit:
    """
    Samples the feeder every 1/Fs, publishes one SV frame per sample and, in
    hardwired mode, drives the breaker trip contact from the subscribed trip GOOSE.
    """

    def __init__(self, bus: ProcessBus, feeder: Feeder, config: MuConfig, breaker: Optional[CircuitBreaker] = None):
        self.bus = bus
        self.feeder = feeder
        self.config = config
        self.device_id = config.device_id
        # None in breaker IED mode: the MU does not act on GOOSE
        self.breaker = breaker
        self.frames_published = 0
        self.ignored_frames = 0
        self.trip_asserted = False
        self._last_st_num = {}

    def attach(self):
        self.bus.register_timer_handler(self.device_id, self._on_timer)
        if self.breaker is not None:
            self.bus.subscribe(SubscriptionFilter.of({ETHERTYPE_GOOSE}), self.mu_on_goose, self.device_id)

    def start(self):
        self.bus.set_timer(self.device_id, self.feeder.config.sample_time_ns(0), ("sample", 0))

    def build_frame(self, n: int) -> SvFrame:
        currents, voltages = self.feeder.measure(n)
        samples = [(to_wire(i, CURRENT_SCALE), 0) for i in currents]
        samples.append((to_wire(sum(currents), CURRENT_SCALE), 0))
        samples.extend((to_wire(v, VOLTAGE_SCALE), 0) for v in voltages)
        samples.append((to_wire(sum(voltages), VOLTAGE_SCALE), 0))
        return SvFrame(
            dst=self.config.dst,
            src=self.config.src,
            app_id=self.config.app_id,
            sv_id=self.config.sv_id,
            smp_cnt=n % SMP_CNT_MODULO,
            conf_rev=self.config.conf_rev,
            smp_synch=self.config.smp_synch,
            samples=samples,
            vlan=self.config.vlan,
        )

    def mu_sampling_tick(self, t: int, n: int):
        frame_bytes = encode_sv(self.build_frame(n))
        if self.config.sv_processing_delay_ns:
            self.bus.set_timer(self.device_id, t + self.config.sv_processing_delay_ns, ("publish", frame_bytes))
        else:
            self._publish(frame_bytes)

        next_at = self.feeder.config.sample_time_ns(n + 1)
        if self.bus.horizon_ns is None or next_at <= self.bus.horizon_ns:
            self.bus.set_timer(self.device_id, next_at, ("sample", n + 1))

    def _publish(self, frame_bytes: bytes):
        self.bus.publish(frame_bytes, self.device_id)
        self.frames_published += 1

    def mu_on_goose(self, t: int, frame_bytes: bytes):
        try:
            frame = decode_goose(frame_bytes)
        except FrameDecodeError:
            self.ignored_frames += 1
            return
        if frame.go_id != self.config.subscribed_go_id:
            self.ignored_frames += 1
            return
        if self._last_st_num.get(frame.go_id) != frame.st_num:
            self._last_st_num[frame.go_id] = frame.st_num
            self.bus.record("goose_delivered", self.device_id, goId=frame.go_id, stNum=frame.st_num, sqNum=frame.sq_num, trip=frame.all_data[0])

        # The MU trusts every frame of the subscribed goId
        if frame.all_data[0] and not self.trip_asserted:
            self.trip_asserted = True
            self.bus.set_timer(self.device_id, t + self.config.goose_to_trip_delay_ns, ("trip", frame.st_num))

    def _on_timer(self, t: int, tag):
        action, value = tag
        if action == "sample":
            self.mu_sampling_tick(t, value)
        elif action == "publish":
            self._publish(value)
        elif action == "trip":
            self.bus.record("hardwired_trip", self.device_id, stNum=value)
            self.breaker.open(t, cause="hardwired_trip")

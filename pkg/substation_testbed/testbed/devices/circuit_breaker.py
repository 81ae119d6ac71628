# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from substation_testbed.config import BREAKER_IED_DELAY_NS, ETHERTYPE_GOOSE
from substation_testbed.exceptions import FrameDecodeError, throw
from substation_testbed.logger import debug_print, info_print
from substation_testbed.testbed.devices.goose_publisher import GoosePublisher, GooseStreamConfig
from substation_testbed.testbed.frame_codec.frame_codec import MacAddress, decode_goose
from substation_testbed.testbed.power_model.power_model import Feeder
from substation_testbed.testbed.process_bus.process_bus import ProcessBus, SubscriptionFilter


class BreakerMode(str, Enum):
    HARDWIRED_VIA_MU = "hardwired_via_mu"
    DIRECT_GOOSE_BREAKER_IED = "direct_goose_breaker_ied"


@dataclass(frozen=True)
class BreakerConfig:
    device_id: str = "cb1"
    mode: BreakerMode = BreakerMode.HARDWIRED_VIA_MU
    direct_goose_delay_ns: int = BREAKER_IED_DELAY_NS
    subscribed_go_id: str = "PC1_TRIP"
    status_stream: Optional[GooseStreamConfig] = None

    def validate(self, key_path: str = "devices.breaker"):
        if self.direct_goose_delay_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.directGooseDelayNs")
        if self.mode is BreakerMode.DIRECT_GOOSE_BREAKER_IED and self.status_stream is None:
            throw("breaker IED mode needs a status stream", key_path=f"{key_path}.status")
        if self.status_stream is not None:
            self.status_stream.validate(f"{key_path}.status")


def default_status_stream(go_id: str = "CB1_STATUS") -> GooseStreamConfig:
    return GooseStreamConfig(
        go_id=go_id,
        gocb_ref="CB1LD0/LLN0$GO$gcbStatus",
        dat_set="CB1LD0/LLN0$dsStatus",
        src=MacAddress.parse("00:1A:2B:3C:4D:03"),
        app_id=0x0003,
    )


class CircuitBreaker:
    """
    Feeder breaker. In hardwired mode it is operated by the merging unit's trip
    contact; in breaker IED mode it subscribes to the trip GOOSE itself and
    publishes its position (allData[0] = closed) as a status GOOSE.
    """

    def __init__(self, bus: ProcessBus, feeder: Feeder, config: BreakerConfig, epoch_seconds: int):
        self.bus = bus
        self.feeder = feeder
        self.config = config
        self.device_id = config.device_id
        self.ignored_frames = 0
        self.operations = 0
        self._pending_open = False
        self._last_st_num = {}
        self.status_publisher: Optional[GoosePublisher] = None
        if config.mode is BreakerMode.DIRECT_GOOSE_BREAKER_IED:
            self.status_publisher = GoosePublisher(bus, self.device_id, config.status_stream, epoch_seconds)

    @property
    def closed(self) -> bool:
        return self.feeder.breaker.closed

    def attach(self):
        self.bus.register_timer_handler(self.device_id, self._on_timer)
        if self.config.mode is BreakerMode.DIRECT_GOOSE_BREAKER_IED:
            self.bus.subscribe(SubscriptionFilter.of({ETHERTYPE_GOOSE}), self.breaker_ied_on_goose, self.device_id)

    def start(self):
        if self.status_publisher is not None:
            self.status_publisher.start([self.closed], self.bus.now)

    def open(self, t: int, cause: str) -> bool:
        """Open the breaker at t; a breaker that is already open stays untouched"""
        last_sample = max(self.feeder.config.sample_index_at(t) - 1, 0)
        feeder_rms = self.feeder.primary_rms(last_sample)
        if not self.feeder.operate_breaker(t, closed=False):
            debug_print(f"{self.device_id} already open, {cause} ignored")
            return False
        self.operations += 1
        self.bus.record("breaker_open", self.device_id, cause=cause, feederRmsA=round(feeder_rms, 3))
        info_print(f"{self.device_id} opened at {t} ns ({cause}), feeder current {feeder_rms:.1f} A RMS")
        if self.status_publisher is not None:
            self.status_publisher.change_state([False], t)
        return True

    def breaker_ied_on_goose(self, t: int, frame_bytes: bytes):
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
        if frame.all_data[0] and self.closed and not self._pending_open:
            self._pending_open = True
            self.bus.set_timer(self.device_id, t + self.config.direct_goose_delay_ns, "open")

    def _on_timer(self, t: int, tag: str):
        if tag == "open":
            self._pending_open = False
            self.open(t, cause="goose_trip")

# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Protection & Control IED

MMXU  one-cycle RMS per phase over the SV buffer
PTOC  instantaneous overcurrent: trips when any phase RMS exceeds the pickup
CSWI  latches the trip and hands a trip GOOSE to the publisher after the
      processing delay of the selected profile

The SV buffer is indexed by smpCnt; the newest frame for a given smpCnt wins.
The RMS window is the Fs/f smpCnts ending at the frame just received and must be
completely filled before PTOC may operate.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from substation_testbed.config import (
    ETHERTYPE_SV,
    PC_ORIGINAL_PROCESSING_NS,
    PC_PICKUP_RMS_A,
    SAMPLES_PER_CYCLE,
    SIMULATED_IED_EXTRA_NS,
    SMP_CNT_MODULO,
)
from substation_testbed.exceptions import FrameDecodeError, throw
from substation_testbed.logger import info_print
from substation_testbed.testbed.devices.goose_publisher import GoosePublisher, GooseStreamConfig
from substation_testbed.testbed.devices.merging_unit import CURRENT_SCALE
from substation_testbed.testbed.frame_codec.frame_codec import MacAddress, decode_sv
from substation_testbed.testbed.power_model.power_model import rms
from substation_testbed.testbed.process_bus.process_bus import ProcessBus, SubscriptionFilter


class PcProfile(str, Enum):
    ORIGINAL = "original"
    SIMULATED_IED = "simulated_ied"


PROFILE_PROCESSING_NS = {
    PcProfile.ORIGINAL: PC_ORIGINAL_PROCESSING_NS,
    PcProfile.SIMULATED_IED: PC_ORIGINAL_PROCESSING_NS + SIMULATED_IED_EXTRA_NS,
}


def default_trip_stream(go_id: str = "PC1_TRIP") -> GooseStreamConfig:
    return GooseStreamConfig(
        go_id=go_id,
        gocb_ref="PC1LD0/LLN0$GO$gcbTrip",
        dat_set="PC1LD0/LLN0$dsTrip",
        src=MacAddress.parse("00:1A:2B:3C:4D:02"),
        app_id=0x0001,
    )


@dataclass(frozen=True)
class PcConfig:
    device_id: str = "pc1"
    subscribed_sv_id: str = "MU01"
    trip_stream: GooseStreamConfig = field(default_factory=default_trip_stream)
    profile: PcProfile = PcProfile.ORIGINAL
    # None: taken from the profile
    processing_delay_ns: Optional[int] = None
    pickup_rms_a: float = PC_PICKUP_RMS_A
    window_samples: int = SAMPLES_PER_CYCLE

    @property
    def effective_processing_delay_ns(self) -> int:
        if self.processing_delay_ns is not None:
            return self.processing_delay_ns
        return PROFILE_PROCESSING_NS[self.profile]

    def validate(self, samples_per_cycle: int, key_path: str = "devices.pc"):
        if self.pickup_rms_a <= 0:
            throw("must be greater than 0", key_path=f"{key_path}.pickupRmsA")
        if self.window_samples != samples_per_cycle:
            throw(f"must equal one cycle ({samples_per_cycle} samples)", key_path=f"{key_path}.windowSamples")
        if self.processing_delay_ns is not None and self.processing_delay_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.processingDelayNs")
        self.trip_stream.validate(f"{key_path}.trip")


class ProtectionIed:
    def __init__(self, bus: ProcessBus, config: PcConfig, epoch_seconds: int):
        self.bus = bus
        self.config = config
        self.device_id = config.device_id
        self.publisher = GoosePublisher(bus, self.device_id, config.trip_stream, epoch_seconds)
        self.tripped = False
        self.ignored_frames = 0
        self.frames_received = 0
        self.last_rms = None

        # currents in A per smpCnt: Ia, Ib, Ic, In
        self._buffer = np.zeros((SMP_CNT_MODULO, 4), dtype=np.float64)
        self._present = np.zeros(SMP_CNT_MODULO, dtype=bool)

    def attach(self):
        self.bus.register_timer_handler(self.device_id, self._on_timer)
        self.bus.subscribe(SubscriptionFilter.of({ETHERTYPE_SV}), self.pc_on_sv, self.device_id)

    def start(self):
        self.publisher.start([False], self.bus.now)

    def window_indices(self, smp_cnt: int) -> np.ndarray:
        return (np.arange(smp_cnt - self.config.window_samples + 1, smp_cnt + 1)) % SMP_CNT_MODULO

    def mmxu(self, smp_cnt: int) -> Optional[np.ndarray]:
        """Per-phase RMS (A) of the window ending at smp_cnt, None while the window is not full"""
        indices = self.window_indices(smp_cnt)
        if not self._present[indices].all():
            return None
        window = self._buffer[indices]
        return np.array([rms(window[:, phase], self.config.window_samples) for phase in range(3)])

    def pc_on_sv(self, t: int, frame_bytes: bytes):
        try:
            frame = decode_sv(frame_bytes)
        except FrameDecodeError:
            self.ignored_frames += 1
            return
        if frame.sv_id != self.config.subscribed_sv_id:
            self.ignored_frames += 1
            return

        self.frames_received += 1
        smp_cnt = frame.smp_cnt
        self._buffer[smp_cnt] = [value / CURRENT_SCALE for value, _ in frame.samples[:4]]
        self._present[smp_cnt] = True

        phase_rms = self.mmxu(smp_cnt)
        if phase_rms is None:
            return
        self.last_rms = phase_rms
        if smp_cnt % self.config.window_samples == self.config.window_samples - 1:
            self.bus.record("mmxu", self.device_id, smpCnt=smp_cnt, rmsA=[round(float(value), 3) for value in phase_rms])

        if not self.tripped and float(phase_rms.max()) > self.config.pickup_rms_a:
            self.tripped = True
            self.bus.record("trip_decision", self.device_id, smpCnt=smp_cnt, rmsA=[round(float(value), 3) for value in phase_rms])
            info_print(f"{self.device_id} PTOC operated at {t} ns (RMS {phase_rms.max():.1f} A > {self.config.pickup_rms_a} A)")
            self.bus.set_timer(self.device_id, t + self.config.effective_processing_delay_ns, "buffer_trip")

    def _on_timer(self, t: int, tag: str):
        if tag == "buffer_trip":
            self.publisher.change_state([True], t)
            state = self.publisher.state
            self.bus.record("goose_buffered", self.device_id, goId=self.config.trip_stream.go_id, stNum=state.st_num, trip=True)

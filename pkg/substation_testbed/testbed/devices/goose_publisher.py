# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
GOOSE stream publisher

Sequence discipline per goId:
- a state change increments stNum by 1, resets sqNum to 0 and stamps a fresh t
- every retransmission repeats allData and t with sqNum + 1
- after a state change the retransmission schedule restarts from the fast intervals
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from substation_testbed.config import (
    DEFAULT_EPOCH_SECONDS,
    DEFAULT_GOOSE_DST,
    GOOSE_TIME_ALLOWED_TO_LIVE_MS,
    NS_PER_MS,
    RETRANSMISSION_INTERVALS_MS,
)
from substation_testbed.exceptions import throw
from substation_testbed.logger import debug_print
from substation_testbed.testbed.frame_codec.frame_codec import GooseFrame, MacAddress, UtcTimestamp, VlanTag, encode_goose


@dataclass(frozen=True)
class GooseStreamConfig:
    go_id: str
    gocb_ref: str
    dat_set: str
    src: MacAddress
    dst: MacAddress = MacAddress.parse(DEFAULT_GOOSE_DST)
    app_id: int = 0x0001
    conf_rev: int = 1
    time_allowed_to_live_ms: int = GOOSE_TIME_ALLOWED_TO_LIVE_MS
    retransmission_intervals_ms: Tuple[int, ...] = tuple(RETRANSMISSION_INTERVALS_MS)
    initial_st_num: int = 1
    vlan: Optional[VlanTag] = None

    def validate(self, key_path: str):
        if not self.retransmission_intervals_ms:
            throw("at least one interval is required", key_path=f"{key_path}.retransmissionIntervalsMs")
        if any(interval <= 0 for interval in self.retransmission_intervals_ms):
            throw("intervals must be strictly positive", key_path=f"{key_path}.retransmissionIntervalsMs")
        if self.initial_st_num < 1:
            throw("must be at least 1", key_path=f"{key_path}.initialStNum")


@dataclass
class StreamPublisherState:
    st_num: int
    sq_num: int = 0
    last_state_change_at: int = 0
    all_data: List[bool] = field(default_factory=lambda: [False])
    t: UtcTimestamp = UtcTimestamp(DEFAULT_EPOCH_SECONDS, 0)


class GoosePublisher:
    """
    Publishes one GOOSE stream for `device_id` on the bus.

    The publisher owns the timer handler `<device_id>/<goId>`; stale retransmission
    timers from an earlier state are dropped by their generation number.
    """

    def __init__(self, bus, device_id: str, config: GooseStreamConfig, epoch_seconds: int = DEFAULT_EPOCH_SECONDS):
        self.bus = bus
        self.device_id = device_id
        self.config = config
        self.epoch_seconds = epoch_seconds
        self.state: Optional[StreamPublisherState] = None
        self.frames_published = 0
        self._generation = 0
        self._retransmission_index = 0
        self.timer_id = f"{device_id}/{config.go_id}"
        bus.register_timer_handler(self.timer_id, self.goose_retransmit_tick)

    @property
    def started(self) -> bool:
        return self.state is not None

    def frame(self) -> GooseFrame:
        state = self.state
        return GooseFrame(
            dst=self.config.dst,
            src=self.config.src,
            app_id=self.config.app_id,
            gocb_ref=self.config.gocb_ref,
            time_allowed_to_live=self.config.time_allowed_to_live_ms,
            dat_set=self.config.dat_set,
            go_id=self.config.go_id,
            t=state.t,
            st_num=state.st_num,
            sq_num=state.sq_num,
            all_data=tuple(state.all_data),
            conf_rev=self.config.conf_rev,
            vlan=self.config.vlan,
        )

    def start(self, all_data: Sequence[bool], t: int):
        """Publish the initial state (stNum = initialStNum)"""
        self.state = StreamPublisherState(
            st_num=self.config.initial_st_num,
            last_state_change_at=t,
            all_data=list(all_data),
            t=UtcTimestamp.from_sim_time(self.epoch_seconds, t),
        )
        self._publish_new_state()

    def change_state(self, all_data: Sequence[bool], t: int, force: bool = False) -> bool:
        """
        Publish a new state. Returns False when allData is unchanged, unless
        `force` asks for a new stNum anyway (an event report repeating allData).
        A publisher that never started publishes its initial stNum instead.
        """
        if self.state is None:
            self.start(all_data, t)
            return True
        if not force and list(all_data) == self.state.all_data:
            return False
        self.state = StreamPublisherState(
            st_num=self.state.st_num + 1,
            last_state_change_at=t,
            all_data=list(all_data),
            t=UtcTimestamp.from_sim_time(self.epoch_seconds, t),
        )
        self._publish_new_state()
        return True

    def _publish_new_state(self):
        self._generation += 1
        self._retransmission_index = 0
        debug_print(f"{self.config.go_id} stNum={self.state.st_num} allData={self.state.all_data}")
        self._publish()
        self._schedule_next()

    def _publish(self):
        self.bus.publish(encode_goose(self.frame()), self.device_id)
        self.frames_published += 1

    def _schedule_next(self):
        intervals = self.config.retransmission_intervals_ms
        interval = intervals[min(self._retransmission_index, len(intervals) - 1)]
        self._retransmission_index += 1
        fire_at = self.bus.now + interval * NS_PER_MS
        if self.bus.horizon_ns is not None and fire_at > self.bus.horizon_ns:
            return
        self.bus.set_timer(self.timer_id, fire_at, self._generation)

    def goose_retransmit_tick(self, t: int, generation: int):
        if self.state is None or generation != self._generation:
            return
        self.state.sq_num += 1
        self._publish()
        self._schedule_next()

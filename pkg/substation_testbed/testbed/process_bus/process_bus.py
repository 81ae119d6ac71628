# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Virtual Process Bus

Deterministic discrete-event model of the substation LAN segment that carries
SV and GOOSE between the bay and process level devices.

Key Features:
1. Multicast delivery
   - subscribers register an ethertype / destination MAC filter
   - every matching frame is delivered once per subscriber after a drawn latency
2. Timers
   - devices schedule callbacks (sampling ticks, GOOSE retransmissions, delays)
   - timers and deliveries share one (time, seq) total order
3. Capture and event log
   - a passive tap records every frame at its delivery time (pcap / JSONL export)
   - devices append simulation events (trip, breaker, alert, ...) to the log

Implementation Notes:
- Time is integer nanoseconds. The loop is single threaded; all randomness comes
  from one numpy Generator seeded by the latency model, drawn in event order.
- Real-time pacing only sleeps between events, it never changes their order.
"""

import heapq
import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from substation_testbed.config import BUS_FIXED_LATENCY_NS, BUS_JITTER_NS, NS_PER_SECOND
from substation_testbed.exceptions import BusError, DeviceFault, TestbedError
from substation_testbed.logger import debug_print, log_error
from substation_testbed.testbed.frame_codec.frame_codec import MacAddress, frame_destination, frame_ethertype
from substation_testbed.testbed.process_bus.capture import write_capture_jsonl, write_pcap

FrameHandler = Callable[[int, bytes], None]
TimerHandler = Callable[[int, Any], None]

TAP_ID = "__tap__"

_DELIVERY = 0
_TIMER = 1


@dataclass(frozen=True)
class LatencyModel:
    fixed_ns: int = BUS_FIXED_LATENCY_NS
    jitter_ns: int = BUS_JITTER_NS
    seed: int = 0

    def __post_init__(self):
        if self.fixed_ns < 0 or self.jitter_ns < 0:
            raise BusError("latency fixed and jitter must be non-negative")


@dataclass(frozen=True)
class SubscriptionFilter:
    ethertypes: FrozenSet[int]
    destinations: Optional[FrozenSet[MacAddress]] = None

    @classmethod
    def of(cls, ethertypes: Iterable[int], destinations: Optional[Iterable[MacAddress]] = None) -> "SubscriptionFilter":
        return cls(frozenset(ethertypes), frozenset(destinations) if destinations is not None else None)

    def matches(self, frame_bytes: bytes) -> bool:
        if frame_ethertype(frame_bytes) not in self.ethertypes:
            return False
        if self.destinations is None:
            return True
        return frame_destination(frame_bytes) in self.destinations


@dataclass(frozen=True)
class BusEvent:
    deliver_at: int
    seq: int
    frame_bytes: bytes
    publisher: str
    publish_at: int = 0


@dataclass(frozen=True)
class CaptureRecord:
    publish_at: int
    deliver_at: int
    frame_bytes: bytes
    publisher: str


@dataclass
class BusStatistics:
    events_processed: int = 0
    frames_published: int = 0
    frames_delivered: int = 0
    timers_fired: int = 0
    final_time_ns: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "eventsProcessed": self.events_processed,
            "framesPublished": self.frames_published,
            "framesDelivered": self.frames_delivered,
            "timersFired": self.timers_fired,
            "finalTimeNs": self.final_time_ns,
        }


@dataclass
class _Subscription:
    subscription_id: int
    subscriber_id: str
    filter: SubscriptionFilter
    handler: FrameHandler


class ProcessBus:
    def __init__(self, latency: Optional[LatencyModel] = None, horizon_ns: Optional[int] = None, realtime: bool = False):
        self.latency = latency or LatencyModel()
        self.horizon_ns = horizon_ns
        self.realtime = realtime
        self.now = 0
        self.started = False
        self.capture: List[CaptureRecord] = []
        self.events: List[Dict[str, Any]] = []
        self.statistics = BusStatistics()

        self._rng = np.random.default_rng(self.latency.seed)
        self._queue: List[Tuple[int, int, int, str, Any]] = []
        self._seq = 0
        self._subscriptions: List[_Subscription] = []
        self._timer_handlers: Dict[str, TimerHandler] = {}
        self._wall_start: Optional[float] = None

    # ------------------------------------------------------------------
    # Wiring
    # ------------------------------------------------------------------

    def subscribe(self, filter: SubscriptionFilter, handler: FrameHandler, subscriber_id: str) -> int:
        if self.started:
            raise BusError(f"{subscriber_id} cannot subscribe after the bus has started")
        subscription = _Subscription(len(self._subscriptions) + 1, subscriber_id, filter, handler)
        self._subscriptions.append(subscription)
        debug_print(f"{subscriber_id} subscribed (id {subscription.subscription_id}) to {sorted(hex(e) for e in filter.ethertypes)}")
        return subscription.subscription_id

    def register_timer_handler(self, device_id: str, handler: TimerHandler):
        self._timer_handlers[device_id] = handler

    # ------------------------------------------------------------------
    # Scheduling
    # ------------------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _draw_latency(self) -> int:
        jitter = self.latency.jitter_ns
        offset = int(self._rng.integers(-jitter, jitter + 1)) if jitter else 0
        return max(0, self.latency.fixed_ns + offset)

    def publish(self, frame_bytes: bytes, publisher: str) -> int:
        """
        Put a frame on the wire at the current time. Returns the publication seq.
        """
        if self.horizon_ns is not None and self.now > self.horizon_ns:
            raise BusError(f"{publisher} published at {self.now} ns, after the scenario horizon {self.horizon_ns} ns")
        frame_bytes = bytes(frame_bytes)
        publication = self._next_seq()
        self.statistics.frames_published += 1

        tap_at = self.now + self._draw_latency()
        heapq.heappush(self._queue, (tap_at, publication, _DELIVERY, TAP_ID, BusEvent(tap_at, publication, frame_bytes, publisher, self.now)))
        for subscription in self._subscriptions:
            if not subscription.filter.matches(frame_bytes):
                continue
            deliver_at = self.now + self._draw_latency()
            event = BusEvent(deliver_at, self._next_seq(), frame_bytes, publisher, self.now)
            heapq.heappush(self._queue, (deliver_at, event.seq, _DELIVERY, subscription.subscriber_id, (event, subscription)))
        return publication

    def set_timer(self, device_id: str, fire_at: int, tag: Any = None):
        if fire_at < self.now:
            raise BusError(f"{device_id} set a timer at {fire_at} ns, before the current time {self.now} ns")
        if device_id not in self._timer_handlers:
            raise BusError(f"{device_id} has no timer handler registered")
        heapq.heappush(self._queue, (fire_at, self._next_seq(), _TIMER, device_id, tag))

    def record(self, kind: str, device_id: str, **fields):
        """Append a simulation event stamped with the current time"""
        entry = {"t": self.now, "kind": kind, "device": device_id}
        entry.update(fields)
        self.events.append(entry)

    # ------------------------------------------------------------------
    # Event loop
    # ------------------------------------------------------------------

    def _pace(self, target_ns: int):
        if self._wall_start is None:
            self._wall_start = time.perf_counter() - target_ns / NS_PER_SECOND
            return
        delay = self._wall_start + target_ns / NS_PER_SECOND - time.perf_counter()
        if delay > 0:
            time.sleep(delay)

    def run_until(self, until_ns: int) -> BusStatistics:
        self.started = True
        while self._queue and self._queue[0][0] <= until_ns:
            at, _seq, kind, owner, payload = heapq.heappop(self._queue)
            if self.realtime:
                self._pace(at)
            self.now = at
            self.statistics.events_processed += 1
            try:
                if kind == _TIMER:
                    self.statistics.timers_fired += 1
                    self._timer_handlers[owner](at, payload)
                elif owner == TAP_ID:
                    self.capture.append(CaptureRecord(payload.publish_at, at, payload.frame_bytes, payload.publisher))
                else:
                    event, subscription = payload
                    self.statistics.frames_delivered += 1
                    subscription.handler(at, event.frame_bytes)
            except TestbedError as e:
                if isinstance(e, DeviceFault):
                    raise
                log_error("Process Bus - Device Error", {"device": owner, "t": at, "error": str(e)})
                raise DeviceFault(str(e), device_id=owner) from e
            except Exception as e:
                log_error("Process Bus - Device Error", {"device": owner, "t": at, "error": repr(e)})
                raise DeviceFault(repr(e), device_id=owner) from e
        self.now = max(self.now, until_ns)
        self.statistics.final_time_ns = self.now
        return self.statistics

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    def export_capture(self, path: str, format: str = "pcap", epoch_seconds: int = 0):
        if format == "pcap":
            write_pcap(path, self.capture, epoch_seconds=epoch_seconds)
        elif format == "jsonl":
            write_capture_jsonl(path, self.capture)
        else:
            raise BusError(f"Unknown capture format '{format}' (expected pcap or jsonl)")

    def export_events(self, path: str):
        try:
            with open(path, "w", encoding="utf-8") as handle:
                for entry in self.events:
                    handle.write(json.dumps(entry, sort_keys=True) + "\n")
        except OSError as e:
            raise BusError(f"Cannot write event log {path}: {e}") from e

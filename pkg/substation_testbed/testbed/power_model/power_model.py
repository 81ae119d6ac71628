# Copyright (c) 2025, Hopnet Communications LLP and contributors
# For license information, please see license.txt

"""
Parametric Feeder Model

Per-phase current and voltage samples follow

    X[n] = X_peak * sin(2*pi*f*n/Fs + phi)

with X_peak switched between the normal load level, the fault level (faulted
phase, from the fault inception sample) and zero (breaker open).

Implementation Notes:
- Fault inception and breaker operation snap to the next sampling instant.
- Sampling instants are n * 1e9 // Fs nanoseconds so a one-second run has
  exactly Fs ticks without drift.
- Voltages are taken on the bus side and are not affected by the breaker.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from substation_testbed.config import (
    NOMINAL_VOLTAGE_PEAK_V,
    NORMAL_CURRENT_PEAK_A,
    NS_PER_SECOND,
    SAMPLING_RATE,
    SYSTEM_FREQUENCY_HZ,
)
from substation_testbed.exceptions import throw

PHASES = ("A", "B", "C")
DEFAULT_PHASE_ANGLES = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)


@dataclass(frozen=True)
class FeederConfig:
    frequency_hz: int = SYSTEM_FREQUENCY_HZ
    sampling_rate: int = SAMPLING_RATE
    normal_current_peak_a: float = NORMAL_CURRENT_PEAK_A
    nominal_voltage_peak_v: float = NOMINAL_VOLTAGE_PEAK_V
    phase_angles: Tuple[float, float, float] = DEFAULT_PHASE_ANGLES

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.sampling_rate <= 0:
            throw("sampling rate must be positive", key_path="feeder.samplingRate")
        if self.frequency_hz <= 0 or self.sampling_rate % self.frequency_hz:
            throw("sampling rate must be an integer multiple of the system frequency", key_path="feeder.samplingRate")
        if self.normal_current_peak_a < 0:
            throw("must not be negative", key_path="feeder.normalCurrentPeakA")
        if len(self.phase_angles) != 3:
            throw("exactly three phase angles are required", key_path="feeder.phaseAngles")

    @property
    def samples_per_cycle(self) -> int:
        return self.sampling_rate // self.frequency_hz

    def sample_time_ns(self, n: int) -> int:
        return n * NS_PER_SECOND // self.sampling_rate

    def sample_index_at(self, t_ns: int) -> int:
        """Smallest sample index whose sampling instant is at or after t_ns"""
        if t_ns <= 0:
            return 0
        n = -(-t_ns * self.sampling_rate // NS_PER_SECOND)
        while self.sample_time_ns(n) < t_ns:
            n += 1
        while n > 0 and self.sample_time_ns(n - 1) >= t_ns:
            n -= 1
        return n


@dataclass(frozen=True)
class FaultSpec:
    inception_ns: int
    fault_current_peak_a: Optional[float] = None
    phase: str = "A"
    type: str = "line_to_ground"

    def peak_for(self, config: FeederConfig) -> float:
        if self.fault_current_peak_a is None:
            return 10.0 * config.normal_current_peak_a
        return self.fault_current_peak_a

    def validate(self, config: FeederConfig, key_path: str = "faults"):
        if self.type != "line_to_ground":
            throw(f"unsupported fault type '{self.type}'", key_path=f"{key_path}.type")
        if self.phase != "A":
            throw("only phase A line-to-ground faults are modelled", key_path=f"{key_path}.phase")
        if self.inception_ns < 0:
            throw("must not be negative", key_path=f"{key_path}.inceptionNs")
        if self.peak_for(config) <= config.normal_current_peak_a:
            throw("fault peak must exceed the normal current peak", key_path=f"{key_path}.faultCurrentPeakA")


@dataclass
class BreakerState:
    closed: bool = True
    last_change_at: int = 0


def waveform(peak: float, n, frequency_hz: int, sampling_rate: int, phase_angle: float):
    """Eq. X[n] = X_peak sin(2 pi f n / Fs + phi) for a scalar or array of n"""
    return peak * np.sin(2.0 * np.pi * frequency_hz * np.asarray(n, dtype=np.float64) / sampling_rate + phase_angle)


def sample(config: FeederConfig, fault: Optional[FaultSpec], breaker: BreakerState, n: int, phase: int) -> Tuple[float, float]:
    """
    Instantaneous (current A, voltage V) of `phase` (0=A, 1=B, 2=C) at sample index n
    """
    angle = config.phase_angles[phase]
    voltage = float(waveform(config.nominal_voltage_peak_v, n, config.frequency_hz, config.sampling_rate, angle))

    if not breaker.closed and n >= config.sample_index_at(breaker.last_change_at):
        return 0.0, voltage

    peak = config.normal_current_peak_a
    if fault is not None and PHASES[phase] == fault.phase and n >= config.sample_index_at(fault.inception_ns):
        peak = fault.peak_for(config)
    current = float(waveform(peak, n, config.frequency_hz, config.sampling_rate, angle))
    return current, voltage


def rms(window: Sequence[float], samples_per_cycle: int = SAMPLING_RATE // SYSTEM_FREQUENCY_HZ) -> float:
    """One-cycle RMS: sqrt(mean(x^2)) over exactly Fs/f samples"""
    values = np.asarray(window, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] != samples_per_cycle:
        throw(f"RMS window must hold exactly {samples_per_cycle} samples, got {values.shape[0] if values.ndim else 0}", key_path="window")
    return float(np.sqrt(np.mean(np.square(values))))


@dataclass
class Feeder:
    """Per-scenario feeder state owned by the event loop"""

    config: FeederConfig = field(default_factory=FeederConfig)
    fault: Optional[FaultSpec] = None
    breaker: BreakerState = field(default_factory=BreakerState)

    def measure(self, n: int) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
        """(currents, voltages) of the three phases at sample n"""
        values = [sample(self.config, self.fault, self.breaker, n, phase) for phase in range(3)]
        return tuple(v[0] for v in values), tuple(v[1] for v in values)

    def fault_sample_index(self) -> Optional[int]:
        if self.fault is None:
            return None
        return self.config.sample_index_at(self.fault.inception_ns)

    def operate_breaker(self, t_ns: int, closed: bool) -> bool:
        """Change breaker position; returns False when it already was in that position"""
        if self.breaker.closed == closed:
            return False
        self.breaker = BreakerState(closed=closed, last_change_at=t_ns)
        return True

    def primary_rms(self, last_n: int, phase: int = 0) -> float:
        """RMS of the true feeder current over the cycle ending at sample last_n"""
        window_size = self.config.samples_per_cycle
        first = max(0, last_n - window_size + 1)
        window = [sample(self.config, self.fault, self.breaker, n, phase)[0] for n in range(first, first + window_size)]
        return rms(window, window_size)

"""Synthetic lead-vehicle driving cycles.

Four protocols: low- and high-speed speed steps, an oscillatory cycle and a
speed-dip cycle. A cycle is a list of (target speed, hold time) segments
joined by constant-acceleration ramps. Ramp lengths are rounded up to whole
samples, so every breakpoint sits on the sampling grid and the trapezoidal
distance of the samples equals the exact distance of the profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import DEFAULT_DT, Trajectory

CYCLE_KINDS = ("low_step", "high_step", "oscillatory", "dips")

DEFAULT_RAMP_ACCEL = 1.5
DEFAULT_DIP_DECEL = 3.0
STEP_HOLD_S = 60.0
OSCILLATION_HOLD_S = 30.0
DIP_HOLD_S = 45.0
DIP_TROUGH_S = 3.0


@dataclass(frozen=True)
class DrivingCycle:
    """Piecewise lead speed profile.

    ``segments`` is a sequence of (target speed in m/s, hold in s). Speed-ups
    use ``accel`` and slow-downs ``decel`` (both positive, m/s^2).
    """

    segments: tuple[tuple[float, float], ...]
    accel: float = DEFAULT_RAMP_ACCEL
    decel: float = DEFAULT_RAMP_ACCEL
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a driving cycle needs at least one segment")
        if not (self.accel > 0 and self.decel > 0):
            raise ValueError("ramp accelerations must be positive")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for speed, hold in self.segments:
            if speed < 0:
                raise ValueError(f"target speed {speed} is negative")
            if hold <= 0:
                raise ValueError(f"hold duration {hold} must be positive")

    def hold_samples(self, hold: float) -> int:
        return max(1, int(round(hold / self.dt)))

    def ramp_steps(self, v_from: float, v_to: float) -> int:
        if v_to == v_from:
            return 1
        rate = self.accel if v_to > v_from else self.decel
        return max(1, math.ceil(abs(v_to - v_from) / (rate * self.dt) - 1e-9))

    def breakpoints(self) -> list[tuple[int, float]]:
        """(sample index, speed) corners of the piecewise-linear profile."""
        points: list[tuple[int, float]] = []
        k = 0
        prev = None
        for speed, hold in self.segments:
            if prev is not None:
                k += self.ramp_steps(prev, speed)
            points.append((k, speed))
            k += self.hold_samples(hold) - 1
            points.append((k, speed))
            prev = speed
        return points

    def speeds(self) -> np.ndarray:
        bp = self.breakpoints()
        idx = np.array([p[0] for p in bp], dtype=float)
        val = np.array([p[1] for p in bp], dtype=float)
        return np.interp(np.arange(bp[-1][0] + 1, dtype=float), idx, val)

    def distance(self) -> float:
        """Distance covered by the continuous profile."""
        bp = self.breakpoints()
        return sum(0.5 * (va + vb) * (kb - ka) * self.dt
                   for (ka, va), (kb, vb) in zip(bp[:-1], bp[1:]))

    def to_trajectory(self) -> Trajectory:
        return Trajectory(dt=self.dt, lead_speed=self.speeds())


def _step_levels(low: float, high: float, n_steps: int) -> list[float]:
    levels = np.linspace(low, high, n_steps + 1).tolist()
    return levels + levels[-2::-1]


def cycle_definition(kind: str, dt: float = DEFAULT_DT, ramp_accel: float = DEFAULT_RAMP_ACCEL,
                     dip_decel: float = DEFAULT_DIP_DECEL) -> DrivingCycle:
    """Segment layout of one of the four test protocols."""
    if kind == "low_step":
        # 35 -> 55 mph in 5 mph increments and back
        segs = [(v, STEP_HOLD_S) for v in _step_levels(15.6, 24.6, 4)]
        return DrivingCycle(tuple(segs), ramp_accel, ramp_accel, dt)
    if kind == "high_step":
        # 60 -> 70 mph in 5 mph increments and back
        segs = [(v, STEP_HOLD_S) for v in _step_levels(26.8, 31.2, 2)]
        return DrivingCycle(tuple(segs), ramp_accel, ramp_accel, dt)
    if kind == "oscillatory":
        segs = [(24.6, OSCILLATION_HOLD_S)]
        for low in (21.9, 20.1):
            for _ in range(4):
                segs += [(low, OSCILLATION_HOLD_S), (24.6, OSCILLATION_HOLD_S)]
        return DrivingCycle(tuple(segs), ramp_accel, ramp_accel, dt)
    if kind == "dips":
        segs = [(24.6, DIP_HOLD_S)]
        for depth in (2.24, 4.47, 6.70):
            segs += [(24.6 - depth, DIP_TROUGH_S), (24.6, DIP_HOLD_S)]
        return DrivingCycle(tuple(segs), ramp_accel, dip_decel, dt)
    raise ValueError(f"unknown cycle kind {kind!r}; expected one of {CYCLE_KINDS}")


def gen_cycle(kind: str, dt: float = DEFAULT_DT, ramp_accel: float = DEFAULT_RAMP_ACCEL,
              dip_decel: float = DEFAULT_DIP_DECEL) -> Trajectory:
    """Lead-only trajectory for one of the four test protocols."""
    return cycle_definition(kind, dt, ramp_accel, dip_decel).to_trajectory()


def platoon_profile(dt: float = DEFAULT_DT, cruise: float = 22.4, low: float = 19.6,
                    lead_in_s: float = 60.0, low_hold_s: float = 60.0,
                    recovery_s: float = 300.0, accel: float = DEFAULT_RAMP_ACCEL) -> Trajectory:
    """Cruise, slow down to ``low``, hold, then return to cruise and hold."""
    segs = ((cruise, lead_in_s), (low, low_hold_s), (cruise, recovery_s))
    return DrivingCycle(segs, accel, accel, dt).to_trajectory()

"""Platoon validation: windowed errors and cumulative position error.

Vehicle k's position sits ``sum_{j<=k} (s_j + L)`` behind the platoon leader,
so its simulated-minus-observed position error is the running sum of the
spacing errors of vehicles 1..k. A steady spacing bias therefore grows
linearly along the platoon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import Trajectory

REPORT_COLUMNS = ("vehicle", "window_start_s", "window_end_s",
                  "speed_rmse_mps", "spacing_rmse_m", "cum_pos_err_norm")


@dataclass
class PlatoonErrors:
    speed: np.ndarray        # (vehicles, samples) simulated - observed
    spacing: np.ndarray      # (vehicles, samples)
    position: np.ndarray     # (vehicles, samples) cumulative position error


def platoon_errors(simulated: Sequence[Trajectory], reference: Sequence[Trajectory]) -> PlatoonErrors:
    if len(simulated) != len(reference):
        raise ValueError(f"{len(simulated)} simulated vehicles vs {len(reference)} references")
    if not simulated:
        raise ValueError("empty platoon")
    n = len(reference[0])
    for k, (sim, ref) in enumerate(zip(simulated, reference), start=1):
        if len(sim) != n or len(ref) != n:
            raise ValueError(f"vehicle {k}: series lengths differ ({len(sim)} vs {len(ref)}, expected {n})")
        if not ref.has_follower:
            raise ValueError(f"vehicle {k}: reference lacks follower speed or spacing")
    speed = np.array([s.follower_speed - r.follower_speed for s, r in zip(simulated, reference)])
    spacing = np.array([s.spacing - r.spacing for s, r in zip(simulated, reference)])
    # simulated position minus observed position
    position = -np.cumsum(spacing, axis=0)
    return PlatoonErrors(speed=speed, spacing=spacing, position=position)


def window_rows(errors: PlatoonErrors, dt: float, t0: float, window_s: float,
                norm: float) -> list[tuple]:
    """One row per (vehicle, window); the position column is |error| at the
    window's last sample divided by ``norm`` (0 when ``norm`` is 0)."""
    if window_s <= 0:
        raise ValueError("window length must be positive")
    n_vehicles, n = errors.speed.shape
    width = max(1, int(round(window_s / dt)))
    rows = []
    for k in range(n_vehicles):
        for a in range(0, n, width):
            b = min(a + width, n)
            v_rmse = float(np.sqrt(np.mean(errors.speed[k, a:b] ** 2)))
            s_rmse = float(np.sqrt(np.mean(errors.spacing[k, a:b] ** 2)))
            pos = abs(float(errors.position[k, b - 1]))
            rows.append((k + 1, t0 + a * dt, t0 + b * dt, v_rmse, s_rmse,
                         pos / norm if norm > 0 else 0.0))
    return rows


def validation_report(runs: dict[str, Sequence[Trajectory]], reference: Sequence[Trajectory],
                      window_s: float = 10.0) -> dict[str, list[tuple]]:
    """Windowed report per parameter set, sharing one position-error scale.

    ``runs`` maps a label (e.g. ``"s_star"``) to the simulated platoon. The
    cumulative position error is normalized by the largest absolute value
    seen across all runs, vehicles and times.
    """
    errs = {label: platoon_errors(sims, reference) for label, sims in runs.items()}
    norm = max(float(np.max(np.abs(e.position))) for e in errs.values())
    dt, t0 = reference[0].dt, reference[0].t0
    return {label: window_rows(e, dt, t0, window_s, norm) for label, e in errs.items()}

"""Spacing and speed RMSE objectives and the calibration/validation split."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .engine import Trajectory


@dataclass(frozen=True)
class ObjectivePair:
    s_e: float
    v_e: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.s_e, self.v_e)


INFEASIBLE = ObjectivePair(math.inf, math.inf)


def split_mask(length: int, discard_frac: float = 0.1,
               half: Literal["calibration", "validation"] = "calibration") -> range:
    """Sample indices retained for calibration or validation.

    Calibration keeps ``[ceil(discard_frac * length), length // 2)``, validation
    keeps ``[length // 2, length)``.
    """
    if not 0 <= discard_frac < 0.5:
        raise ValueError(f"discard_frac must lie in [0, 0.5), got {discard_frac}")
    mid = length // 2
    if half == "calibration":
        # exact decimal arithmetic so 0.1 * 70 is 7, not 7.000000000000001
        start = math.ceil(Fraction(str(discard_frac)) * length)
        mask = range(start, mid)
    elif half == "validation":
        mask = range(mid, length)
    else:
        raise ValueError(f"half must be 'calibration' or 'validation', got {half!r}")
    if len(mask) == 0:
        raise ValueError(f"{length} samples leave an empty {half} mask")
    return mask


def _as_index(mask, n: int) -> np.ndarray:
    if mask is None:
        return np.arange(n)
    if isinstance(mask, slice):
        return np.arange(n)[mask]
    idx = np.asarray(mask)
    if idx.dtype == bool:
        if idx.shape != (n,):
            raise ValueError("boolean mask must match the series length")
        return np.flatnonzero(idx)
    return idx.astype(np.int64)


def rmse_pair(simulated: Trajectory, reference: Trajectory, mask=None) -> ObjectivePair:
    """Spacing and speed RMSE between two trajectories over ``mask``."""
    if len(simulated) != len(reference):
        raise ValueError(f"length mismatch: {len(simulated)} vs {len(reference)}")
    if abs(simulated.dt - reference.dt) > 1e-9:
        raise ValueError(f"dt mismatch: {simulated.dt} vs {reference.dt}")
    for t, label in ((simulated, "simulated"), (reference, "reference")):
        if not t.has_follower:
            raise ValueError(f"{label} trajectory lacks follower speed or spacing")
    idx = _as_index(mask, len(reference))
    if idx.size == 0:
        raise ValueError("empty mask")
    ds = simulated.spacing[idx] - reference.spacing[idx]
    dv = simulated.follower_speed[idx] - reference.follower_speed[idx]
    return ObjectivePair(float(np.sqrt(np.mean(ds * ds))), float(np.sqrt(np.mean(dv * dv))))


def squared_error_sums(sim_spacing: np.ndarray, sim_speed: np.ndarray,
                       reference: Trajectory, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column sums of squared spacing and speed residuals.

    ``sim_spacing`` / ``sim_speed`` are (samples, batch) arrays as produced by
    :func:`cfcalib.engine.rollout_batch`.
    """
    ds = sim_spacing[idx] - reference.spacing[idx, None]
    dv = sim_speed[idx] - reference.follower_speed[idx, None]
    return np.sum(ds * ds, axis=0), np.sum(dv * dv, axis=0)

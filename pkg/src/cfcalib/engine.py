"""Fixed-step rollout of followers behind a prescribed lead trajectory.

Positions advance with the trapezoidal rule; delayed quantities come from a
ring buffer with linear interpolation between the two samples bracketing
``t - tau``. The core routine :func:`rollout_batch` runs a compiled loop over many
parameter vectors of one model (one output column per vector), which is what
the calibrator uses; :func:`rollout` and :func:`rollout_platoon` are the
single-vehicle and chained wrappers around it. :func:`step_follower` is a
plain-Python single step on top of :class:`HistoryBuffer`, kept as the
readable reference for the compiled loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from .models import (
    GippsParams,
    IdmParams,
    ModelParams,
    OvrvParams,
    equilibrium_spacing,
    gipps_kernel,
    idm_kernel,
    ovrv_kernel,
    params_class,
)

DEFAULT_DT = 0.1
VEHICLE_LENGTH = 4.8
# tau/dt within this distance of an integer is treated as that integer
_SNAP = 1e-9


class RolloutError(RuntimeError):
    """Raised when a rollout diverges or a vehicle state becomes invalid."""

    def __init__(self, message: str, step: int, vehicle: int | None = None):
        super().__init__(message)
        self.step = step
        self.vehicle = vehicle


@dataclass
class Trajectory:
    """Uniformly sampled lead speed with optional follower speed and spacing."""

    dt: float
    lead_speed: np.ndarray
    follower_speed: np.ndarray | None = None
    spacing: np.ndarray | None = None
    t0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        self.lead_speed = np.asarray(self.lead_speed, dtype=float)
        n = self.lead_speed.shape[0] if self.lead_speed.ndim == 1 else -1
        if n < 2:
            raise ValueError("a trajectory needs at least two samples in a 1-D lead series")
        for name in ("follower_speed", "spacing"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        for name in ("lead_speed", "follower_speed"):
            arr = getattr(self, name)
            if arr is not None and np.any(arr < 0):
                raise ValueError(f"{name} contains negative speeds")
        for name in ("lead_speed", "follower_speed", "spacing"):
            arr = getattr(self, name)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def __len__(self) -> int:
        return self.lead_speed.shape[0]

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def has_follower(self) -> bool:
        return self.follower_speed is not None and self.spacing is not None


@dataclass
class RolloutConfig:
    dt: float = DEFAULT_DT
    L: float = VEHICLE_LENGTH
    initial_spacing: float | None = None
    initial_speed: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.L > 0:
            raise ValueError(f"vehicle length must be positive, got {self.L}")


def delay_split(tau, dt):
    """Integer steps ``n`` and fraction ``beta`` with tau = (n + beta) * dt."""
    ratio = np.asarray(tau, dtype=float) / dt
    nearest = np.rint(ratio)
    snapped = np.abs(ratio - nearest) < _SNAP
    n = np.where(snapped, nearest, np.floor(ratio))
    beta = np.where(snapped, 0.0, ratio - n)
    return n.astype(np.int64), beta


class HistoryBuffer:
    """Ring of recent (spacing, lead_speed, follower_speed) samples.

    Holds one column per vehicle in the batch. Slots are pre-filled with the
    initial state so queries before ``t = tau`` return the initial condition.
    """

    SERIES = ("spacing", "lead_speed", "follower_speed")

    def __init__(self, depth: int, initial: np.ndarray):
        initial = np.asarray(initial, dtype=float)
        if initial.ndim == 1:
            initial = initial[:, None]
        if initial.shape[0] != 3:
            raise ValueError("initial state must have one row per series")
        if depth < 2:
            raise ValueError("history depth must be at least 2")
        self.depth = depth
        self.width = initial.shape[1]
        self._data = np.repeat(initial[None, :, :], depth, axis=0)
        self._head = 0
        self._cols = np.arange(self.width)

    @classmethod
    def for_delay(cls, tau_max: float, dt: float, initial) -> "HistoryBuffer":
        steps = int(math.ceil(tau_max / dt - _SNAP)) if tau_max > 0 else 0
        return cls(steps + 2, initial)

    @property
    def max_delay_steps(self) -> int:
        return self.depth - 2

    def push(self, spacing, lead_speed, follower_speed) -> None:
        self._head = (self._head + 1) % self.depth
        row = self._data[self._head]
        row[0] = spacing
        row[1] = lead_speed
        row[2] = follower_speed

    def lookup(self, lag, series: str) -> np.ndarray:
        """Stored sample ``lag`` steps back (0 = most recent)."""
        k = self.SERIES.index(series)
        lag = np.asarray(lag)
        if np.any(lag < 0) or np.any(lag >= self.depth):
            raise ValueError(f"lag outside buffer depth {self.depth}")
        return self._data[(self._head - lag) % self.depth, k, self._cols]

    def latest(self, series: str) -> np.ndarray:
        return self._data[self._head, self.SERIES.index(series)].copy()


def interp_delayed(buffer: HistoryBuffer, tau, dt: float, series: str) -> np.ndarray:
    """Value of ``series`` at ``t - tau``, interpolating between grid samples."""
    n, beta = delay_split(tau, dt)
    if np.any(n + 1 >= buffer.depth):
        raise ValueError(f"delay {np.max(tau)} s exceeds buffer depth")
    n = np.broadcast_to(n, (buffer.width,))
    beta = np.broadcast_to(beta, (buffer.width,))
    older = buffer.lookup(n + 1, series)
    newer = buffer.lookup(n, series)
    return np.where(beta == 0.0, newer, beta * older + (1.0 - beta) * newer)


def lead_positions(lead_speed: np.ndarray, dt: float, x0: float = 0.0) -> np.ndarray:
    """Trapezoidal positions from speeds, starting at ``x0``."""
    x = np.empty_like(lead_speed, dtype=float)
    x[0] = x0
    x[1:] = x0 + np.cumsum(0.5 * (lead_speed[:-1] + lead_speed[1:]) * dt)
    return x


@dataclass
class BatchRollout:
    """Result of :func:`rollout_batch`; arrays have shape (samples, batch)."""

    speed: np.ndarray
    spacing: np.ndarray
    position: np.ndarray
    failed_step: np.ndarray = field(repr=False)

    @property
    def feasible(self) -> np.ndarray:
        return self.failed_step < 0


_KIND_CODE = {"ovrv": 0, "gipps": 1, "idm": 2}


@njit(cache=True)
def _delay_split_scalar(tau, dt):
    ratio = tau / dt
    nearest = np.rint(ratio)
    if abs(ratio - nearest) < 1e-9:
        return int(nearest), 0.0
    n = math.floor(ratio)
    return int(n), ratio - n


@njit(cache=True, error_model="numpy")
def _advance_one(code, p, lead_speed, x_lead, dt, s0, v0, L, speed, spacing, position):
    """Roll out one follower in place; returns the first failing step or -1."""
    n_samples = lead_speed.shape[0]
    speed[0] = v0
    spacing[0] = s0
    position[0] = 0.0
    if code == 0:
        lag = p[2]
    elif code == 1:
        lag = max(p[1] - dt, 0.0)
    else:
        lag = 0.0
    n, beta = _delay_split_scalar(lag, dt)
    depth = n + 2
    ring_s = np.full(depth, s0)
    ring_vl = np.full(depth, lead_speed[0])
    ring_v = np.full(depth, v0)
    head = 0
    x = 0.0
    lead_offset = s0 + L
    failed = -1
    if code == 2 and not s0 > 0:
        failed = 0
    for i in range(n_samples - 1):
        if failed >= 0:
            speed[i + 1] = np.nan
            spacing[i + 1] = np.nan
            position[i + 1] = np.nan
            continue
        v = speed[i]
        if code != 2:
            newer = (head - n) % depth
            if beta == 0.0:
                s_d = ring_s[newer]
                vl_d = ring_vl[newer]
                v_d = ring_v[newer]
            else:
                older = (head - n - 1) % depth
                s_d = beta * ring_s[older] + (1.0 - beta) * ring_s[newer]
                vl_d = beta * ring_vl[older] + (1.0 - beta) * ring_vl[newer]
                v_d = beta * ring_v[older] + (1.0 - beta) * ring_v[newer]
        if code == 0:
            a = ovrv_kernel(s_d, v, vl_d, p[0], p[1], p[3], p[4])
            v_new = max(v + a * dt, 0.0)
        elif code == 2:
            a = idm_kernel(spacing[i], v, lead_speed[i], p[0], p[1], p[2], p[3], p[4], p[5])
            v_new = max(v + a * dt, 0.0)
        else:
            v_new = max(gipps_kernel(s_d, v_d, vl_d, v, dt,
                                     p[0], p[1], p[2], p[3], p[4], p[5], p[6]), 0.0)
        x = x + 0.5 * (v + v_new) * dt
        s_new = x_lead[i + 1] + lead_offset - x - L
        speed[i + 1] = v_new
        spacing[i + 1] = s_new
        position[i + 1] = x
        if not (math.isfinite(v_new) and math.isfinite(s_new)):
            failed = i + 1
        elif code == 2 and not s_new > 0:
            failed = i + 1
        head = (head + 1) % depth
        ring_s[head] = s_new
        ring_vl[head] = lead_speed[i + 1]
        ring_v[head] = v_new
    return failed


@njit(cache=True)
def _advance_many(code, params, lead_speed, x_lead, dt, s0, v0, L):
    n_samples = lead_speed.shape[0]
    m = params.shape[0]
    speed = np.empty((n_samples, m))
    spacing = np.empty((n_samples, m))
    position = np.empty((n_samples, m))
    failed = np.empty(m, dtype=np.int64)
    col_v = np.empty(n_samples)
    col_s = np.empty(n_samples)
    col_x = np.empty(n_samples)
    for j in range(m):
        failed[j] = _advance_one(code, params[j], lead_speed, x_lead, dt, s0[j], v0[j], L,
                                 col_v, col_s, col_x)
        speed[:, j] = col_v
        spacing[:, j] = col_s
        position[:, j] = col_x
    return speed, spacing, position, failed


def rollout_batch(
    kind: str,
    param_matrix,
    lead_speed: np.ndarray,
    dt: float,
    initial_spacing,
    initial_speed,
    L: float = VEHICLE_LENGTH,
) -> BatchRollout:
    """Advance one follower per parameter row behind a shared lead profile.

    Args:
        kind: ``"ovrv"``, ``"gipps"`` or ``"idm"``.
        param_matrix: (m, d) array, one parameter vector per row in the
            model's canonical order.
        lead_speed: (I,) lead speeds on the rollout grid.
        dt: time step, must match the lead sampling.
        initial_spacing, initial_speed: scalar or (m,) initial follower state.
        L: vehicle length used in the spacing bookkeeping.

    Rows whose state turns non-finite (or, for IDM, whose spacing stops
    being positive) are flagged in ``failed_step`` with the first offending
    sample index; their later samples are NaN.
    """
    cls = params_class(kind)
    params = np.ascontiguousarray(np.atleast_2d(np.asarray(param_matrix, dtype=float)))
    if params.shape[1] != len(cls.names()):
        raise ValueError(f"{kind} expects {len(cls.names())} parameters per row, "
                         f"got {params.shape[1]}")
    m = params.shape[0]
    lead_speed = np.ascontiguousarray(lead_speed, dtype=float)
    if lead_speed.ndim != 1 or lead_speed.shape[0] < 2:
        raise ValueError("lead profile needs at least two samples")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    s0 = np.broadcast_to(np.asarray(initial_spacing, dtype=float), (m,)).copy()
    v0 = np.broadcast_to(np.asarray(initial_speed, dtype=float), (m,)).copy()
    speed, spacing, position, failed = _advance_many(
        _KIND_CODE[kind], params, lead_speed, lead_positions(lead_speed, dt),
        float(dt), s0, v0, float(L),
    )
    return BatchRollout(speed=speed, spacing=spacing, position=position, failed_step=failed)


def _initial_state(lead: Trajectory, params: ModelParams, cfg: RolloutConfig) -> tuple[float, float]:
    v0 = cfg.initial_speed if cfg.initial_speed is not None else float(lead.lead_speed[0])
    if cfg.initial_spacing is not None:
        s0 = cfg.initial_spacing
    else:
        s0 = float(equilibrium_spacing(params, v0))
    return float(s0), float(v0)


def step_follower(
    state: dict,
    params: ModelParams,
    buffer: HistoryBuffer,
    cfg: RolloutConfig,
    lead_speed_next: float,
    lead_position_next: float,
) -> dict:
    """Advance a single follower by one step.

    ``state`` holds ``x``, ``v``, ``s`` and the current lead speed ``v_lead``;
    the buffer must already contain the current sample as its newest entry
    and receives the new one on return.
    """
    dt = cfg.dt
    v = float(state["v"])
    p = params
    if isinstance(p, OvrvParams):
        s_d = float(interp_delayed(buffer, p.tau, dt, "spacing")[0])
        vl_d = float(interp_delayed(buffer, p.tau, dt, "lead_speed")[0])
        a = ovrv_kernel(s_d, v, vl_d, p.t_h, p.eta, p.k1, p.k2)
        v_new = max(v + a * dt, 0.0)
    elif isinstance(p, IdmParams):
        a = idm_kernel(float(state["s"]), v, float(state["v_lead"]),
                       p.t_h, p.eta, p.V, p.A, p.B, p.delta)
        v_new = max(v + a * dt, 0.0)
    elif isinstance(p, GippsParams):
        lag = max(p.tau - dt, 0.0)
        s_d = float(interp_delayed(buffer, lag, dt, "spacing")[0])
        vl_d = float(interp_delayed(buffer, lag, dt, "lead_speed")[0])
        v_d = float(interp_delayed(buffer, lag, dt, "follower_speed")[0])
        v_new = max(gipps_kernel(s_d, v_d, vl_d, v, dt, p.eta, p.tau, p.theta,
                                 p.V, p.A, p.B, p.B_hat_L), 0.0)
    else:
        raise TypeError(f"unsupported parameter type {type(p).__name__}")
    x_new = state["x"] + 0.5 * (v + v_new) * dt
    s_new = lead_position_next - x_new - cfg.L
    if not (math.isfinite(v_new) and math.isfinite(s_new)):
        raise RolloutError("non-finite follower state", step=state.get("i", 0) + 1)
    if isinstance(p, IdmParams) and not s_new > 0:
        raise RolloutError("IDM spacing became non-positive", step=state.get("i", 0) + 1)
    buffer.push(s_new, lead_speed_next, v_new)
    return {"i": state.get("i", 0) + 1, "x": x_new, "v": v_new, "s": s_new,
            "v_lead": lead_speed_next}


def rollout(lead: Trajectory, params: ModelParams, cfg: RolloutConfig | None = None) -> Trajectory:
    """Simulate one follower behind ``lead``.

    Without explicit initial conditions in ``cfg`` the follower starts at
    the lead's initial speed and the model's equilibrium spacing for it.

    Raises:
        RolloutError: if the state blows up, carrying the failing step.
    """
    cfg = cfg or RolloutConfig(dt=lead.dt)
    if abs(lead.dt - cfg.dt) > 1e-9:
        raise ValueError(f"lead dt {lead.dt} does not match rollout dt {cfg.dt}")
    s0, v0 = _initial_state(lead, params, cfg)
    out = rollout_batch(params.kind, params.to_vector()[None, :], lead.lead_speed,
                        cfg.dt, s0, v0, cfg.L)
    if out.failed_step[0] >= 0:
        step = int(out.failed_step[0])
        raise RolloutError(f"{params.kind} rollout became infeasible at step {step}", step=step)
    return Trajectory(dt=lead.dt, t0=lead.t0, lead_speed=lead.lead_speed.copy(),
                      follower_speed=out.speed[:, 0].copy(), spacing=out.spacing[:, 0].copy())


def rollout_platoon(
    lead: Trajectory,
    per_vehicle_params: Sequence[ModelParams],
    cfgs: RolloutConfig | Sequence[RolloutConfig] | None = None,
) -> list[Trajectory]:
    """Chain followers: vehicle k follows the simulated vehicle k-1.

    Returns one trajectory per follower whose ``lead_speed`` is its own
    predecessor's speed.
    """
    if not per_vehicle_params:
        return []
    if cfgs is None or isinstance(cfgs, RolloutConfig):
        base = cfgs or RolloutConfig(dt=lead.dt)
        cfgs = [replace(base) for _ in per_vehicle_params]
    if len(cfgs) != len(per_vehicle_params):
        raise ValueError("need one rollout config per vehicle")
    out: list[Trajectory] = []
    current = lead
    for k, (params, cfg) in enumerate(zip(per_vehicle_params, cfgs), start=1):
        try:
            sim = rollout(current, params, cfg)
        except RolloutError as exc:
            raise RolloutError(f"vehicle {k}: {exc}", step=exc.step, vehicle=k) from exc
        out.append(sim)
        current = Trajectory(dt=sim.dt, t0=sim.t0, lead_speed=sim.follower_speed)
    return out

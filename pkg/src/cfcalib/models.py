"""Car-following laws: OVRV, Gipps and IDM.

Every evaluator is a pure function of its inputs. The ``*_kernel`` functions
are compiled scalar routines shared by the engine's inner loop and by the
public ``ovrv_accel`` / ``idm_accel`` / ``gipps_next_speed`` wrappers, which
take a :class:`FollowerObservation` and a parameter dataclass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import ClassVar, Literal, Union

import numpy as np
from numba import njit

ModelKind = Literal["ovrv", "gipps", "idm"]
MODEL_KINDS: tuple[str, ...] = ("ovrv", "gipps", "idm")


class _Params:
    """Shared helpers for the parameter dataclasses.

    Field order is the canonical vector order used by the calibrator and
    by parameter files.
    """

    kind: ClassVar[str]
    units: ClassVar[dict[str, str]]
    bounds: ClassVar[dict[str, tuple[float, float]]]

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))  # type: ignore[arg-type]

    @classmethod
    def lower(cls) -> np.ndarray:
        return np.array([cls.bounds[n][0] for n in cls.names()], dtype=float)

    @classmethod
    def upper(cls) -> np.ndarray:
        return np.array([cls.bounds[n][1] for n in cls.names()], dtype=float)

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(cls.names()),):
            raise ValueError(
                f"{cls.kind} expects {len(cls.names())} parameters, got shape {vec.shape}"
            )
        return cls(*(float(x) for x in vec))

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=float)

    def as_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in self.names()}

    def within_bounds(self) -> bool:
        v = self.to_vector()
        return bool(np.all(v >= self.lower()) and np.all(v <= self.upper()))


@dataclass(frozen=True)
class OvrvParams(_Params):
    t_h: float
    eta: float
    tau: float
    k1: float
    k2: float

    kind: ClassVar[str] = "ovrv"
    units: ClassVar[dict[str, str]] = {
        "t_h": "s", "eta": "m", "tau": "s", "k1": "1/s^2", "k2": "1/s",
    }
    bounds: ClassVar[dict[str, tuple[float, float]]] = {
        "t_h": (0.0, 2.5), "eta": (0.0, 17.0), "tau": (0.0, 2.5),
        "k1": (0.0, 0.3), "k2": (0.0, 0.6),
    }


@dataclass(frozen=True)
class GippsParams(_Params):
    eta: float
    tau: float
    theta: float
    V: float
    A: float
    B: float
    B_hat_L: float

    kind: ClassVar[str] = "gipps"
    units: ClassVar[dict[str, str]] = {
        "eta": "m", "tau": "s", "theta": "s", "V": "m/s",
        "A": "m/s^2", "B": "m/s^2", "B_hat_L": "m/s^2",
    }
    bounds: ClassVar[dict[str, tuple[float, float]]] = {
        "eta": (0.0, 17.0), "tau": (0.1, 2.0), "theta": (0.0, 2.0),
        "V": (25.0, 40.0), "A": (0.0, 5.0), "B": (2.0, 9.0), "B_hat_L": (2.0, 9.0),
    }


@dataclass(frozen=True)
class IdmParams(_Params):
    t_h: float
    eta: float
    V: float
    A: float
    B: float
    delta: float

    kind: ClassVar[str] = "idm"
    units: ClassVar[dict[str, str]] = {
        "t_h": "s", "eta": "m", "V": "m/s", "A": "m/s^2", "B": "m/s^2", "delta": "-",
    }
    bounds: ClassVar[dict[str, tuple[float, float]]] = {
        "t_h": (0.0, 2.5), "eta": (0.0, 17.0), "V": (25.0, 40.0),
        "A": (0.0, 5.0), "B": (2.0, 9.0), "delta": (0.2, 20.0),
    }


ModelParams = Union[OvrvParams, GippsParams, IdmParams]

PARAM_CLASSES: dict[str, type] = {
    "ovrv": OvrvParams,
    "gipps": GippsParams,
    "idm": IdmParams,
}


def params_class(kind: str) -> type:
    try:
        return PARAM_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}") from None


@dataclass(frozen=True)
class FollowerObservation:
    """Follower state as seen by a car-following law at time t.

    Delayed fields are filled by the engine through history interpolation.
    ``v_self_prev`` (follower speed at t - tau) and ``v_self_last_step``
    (follower speed at t - dt) are only read by Gipps.
    """

    s: float
    v: float
    v_lead: float
    s_delayed: float | None = None
    v_lead_delayed: float | None = None
    v_self_prev: float | None = None
    v_self_last_step: float | None = None


# --- kernels (scalar, compiled) ----------------------------------------------
# error_model="numpy": division by zero yields inf/nan instead of raising, so
# degenerate candidates surface as non-finite rollouts.


@njit(cache=True, error_model="numpy")
def ovrv_kernel(s_delayed, v, v_lead_delayed, t_h, eta, k1, k2):
    return k1 * (s_delayed - eta - t_h * v) + k2 * (v_lead_delayed - v)


@njit(cache=True, error_model="numpy")
def idm_kernel(s, v, v_lead, t_h, eta, V, A, B, delta):
    s_star = eta + v * t_h + v * (v - v_lead) / (2.0 * math.sqrt(A * B))
    return A * (1.0 - (v / V) ** delta - (s_star / s) ** 2)


@njit(cache=True, error_model="numpy")
def gipps_kernel(s_delayed, v_delayed, v_lead_delayed, v_last, dt,
                 eta, tau, theta, V, A, B, B_hat_L):
    """Next speed under Gipps, before the non-negativity clamp.

    A negative radicand in the constrained branch counts as an unreachable
    speed, so the bounded-braking term takes over. The result never drops
    more than ``B * dt`` below ``v_last``.
    """
    v_free = v_delayed + 2.5 * A * tau * (1.0 - v_delayed / V) * math.sqrt(0.025 + v_delayed / V)
    margin = tau / 2.0 + theta
    radicand = B * B * margin * margin + B * (
        2.0 * (s_delayed - eta) - tau * v_delayed + v_lead_delayed * v_lead_delayed / B_hat_L
    )
    brake_floor = v_last - B * dt
    if radicand >= 0.0:
        root = math.sqrt(radicand) - B * margin
    else:
        root = -math.inf
    v_constrained = max(root, brake_floor)
    return max(min(v_free, v_constrained), brake_floor)


# --- public evaluators --------------------------------------------------------


def _floats(*xs):
    # one compiled signature per kernel: everything as float64
    return tuple(float(x) for x in xs)


def ovrv_accel(obs: FollowerObservation, p: OvrvParams) -> float:
    """Commanded acceleration under OVRV with delayed spacing and lead speed."""
    s_d = obs.s if obs.s_delayed is None else obs.s_delayed
    vl_d = obs.v_lead if obs.v_lead_delayed is None else obs.v_lead_delayed
    return ovrv_kernel(*_floats(s_d, obs.v, vl_d, p.t_h, p.eta, p.k1, p.k2))


def idm_accel(obs: FollowerObservation, p: IdmParams) -> float:
    """Commanded acceleration under IDM (no delay).

    Raises:
        ValueError: if the spacing is not positive.
    """
    if not obs.s > 0:
        raise ValueError(f"IDM needs positive spacing, got {obs.s}")
    return idm_kernel(*_floats(obs.s, obs.v, obs.v_lead, p.t_h, p.eta, p.V, p.A, p.B, p.delta))


def gipps_next_speed(obs: FollowerObservation, p: GippsParams, dt: float) -> float:
    s_d = obs.s if obs.s_delayed is None else obs.s_delayed
    vl_d = obs.v_lead if obs.v_lead_delayed is None else obs.v_lead_delayed
    v_d = obs.v if obs.v_self_prev is None else obs.v_self_prev
    v_last = obs.v if obs.v_self_last_step is None else obs.v_self_last_step
    v = gipps_kernel(*_floats(s_d, v_d, vl_d, v_last, dt,
                              p.eta, p.tau, p.theta, p.V, p.A, p.B, p.B_hat_L))
    return max(0.0, v)


def equilibrium_spacing(p: ModelParams, v: float) -> float:
    """Bumper-to-bumper spacing at which a follower at constant speed ``v``
    behind a leader at the same speed stays put."""
    if isinstance(p, OvrvParams):
        return p.eta + p.t_h * v
    if isinstance(p, IdmParams):
        ratio = 1.0 - (v / p.V) ** p.delta
        if ratio <= 0:
            raise ValueError(f"IDM has no finite equilibrium at v={v} >= V={p.V}")
        return (p.eta + v * p.t_h) / math.sqrt(ratio)
    if isinstance(p, GippsParams):
        # constrained-branch fixed point: v_c(s, v) == v
        return p.eta + v * (p.tau + p.theta) + 0.5 * v * v * (1.0 / p.B - 1.0 / p.B_hat_L)
    raise TypeError(f"unsupported parameter type {type(p).__name__}")

"""Published calibrated parameters for ACC vehicles A-G.

One row per (vehicle, following setting), each holding the smallest-spacing-
error solution for OVRV, Gipps and IDM. The IDM desired speeds exceed the
[25, 40] m/s search range used for calibration; they are kept verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

from .models import GippsParams, IdmParams, ModelParams, OvrvParams

VEHICLES = tuple("ABCDEFG")
SETTINGS = ("min", "max")

# vehicle, setting,
#   OVRV: t_h, eta, tau, k1, k2
#   Gipps: eta, tau, theta, V, A, B, B_hat_L
#   IDM: t_h, eta, V, A, B, delta
_TABLE = [
    ("A", "min", (1.0, 9.4, 0.58, 0.05, 0.26), (0.3, 1.8, 0.0, 37.5, 0.5, 2.6, 2.4), (1.0, 8.0, 43.6, 0.9, 9.0, 13.5)),
    ("A", "max", (2.1, 10.5, 0.59, 0.02, 0.15), (2.0, 2.0, 0.6, 37.0, 0.4, 7.9, 7.0), (2.2, 6.3, 44.1, 0.6, 5.2, 15.5)),
    ("B", "min", (0.9, 10.9, 0.51, 0.04, 0.16), (0.4, 1.9, 0.0, 35.5, 0.6, 3.0, 2.6), (1.0, 8.0, 42.8, 0.8, 9.0, 16.2)),
    ("B", "max", (2.0, 15.6, 0.59, 0.03, 0.09), (1.9, 1.9, 1.3, 37.2, 0.3, 4.1, 3.3), (2.3, 7.9, 42.4, 0.7, 8.9, 17.5)),
    ("C", "min", (0.8, 15.8, 0.36, 0.04, 0.2), (1.5, 1.9, 0.0, 37.6, 0.4, 2.3, 2.1), (1.1, 7.8, 43.7, 0.6, 8.6, 17.1)),
    ("C", "max", (2.0, 16.8, 0.24, 0.02, 0.12), (4.4, 1.3, 1.9, 39.7, 0.2, 7.0, 5.1), (2.3, 8.0, 43.6, 0.6, 6.5, 17.1)),
    ("D", "min", (0.8, 14.2, 0.46, 0.05, 0.19), (0.9, 1.9, 0.1, 36.2, 0.4, 3.4, 2.9), (1.0, 8.0, 43.4, 0.6, 9.0, 14.8)),
    ("D", "max", (1.9, 15.9, 0.49, 0.02, 0.12), (4.6, 2.0, 1.0, 36.7, 0.4, 4.4, 3.7), (2.2, 8.0, 44.7, 0.7, 8.7, 17.3)),
    ("E", "min", (1.3, 4.5, 0.60, 0.06, 0.16), (0.5, 1.7, 0.1, 35.7, 0.5, 2.3, 2.1), (1.3, 4.2, 42.6, 0.9, 9.0, 18.9)),
    ("E", "max", (2.0, 9.2, 0.60, 0.06, 0.11), (4.0, 2.0, 0.5, 36.3, 0.5, 8.8, 7.6), (2.0, 8.0, 44.8, 1.3, 9.0, 19.6)),
    ("F", "min", (0.8, 12.2, 0.54, 0.06, 0.17), (0.7, 1.8, 0.1, 36.7, 0.5, 4.9, 4.1), (1.0, 8.0, 44.7, 0.8, 9.0, 19.7)),
    ("F", "max", (1.9, 6.1, 0.60, 0.04, 0.13), (1.0, 1.9, 0.4, 37.6, 0.4, 7.9, 7.1), (1.9, 7.1, 41.9, 0.8, 9.0, 13.6)),
    ("G", "min", (0.6, 16.9, 0.58, 0.06, 0.21), (0.4, 2.0, 0.1, 37.9, 0.6, 3.2, 2.7), (1.0, 8.0, 44.9, 0.8, 9.0, 19.8)),
    ("G", "max", (2.1, 2.6, 0.59, 0.04, 0.12), (0.5, 2.0, 0.2, 37.8, 0.4, 8.0, 8.3), (2.0, 4.1, 44.0, 0.9, 9.0, 11.1)),
]


@dataclass(frozen=True)
class VehicleFixture:
    vehicle: str
    setting: str
    ovrv: OvrvParams
    gipps: GippsParams
    idm: IdmParams

    def params(self, model: str) -> ModelParams:
        try:
            return {"ovrv": self.ovrv, "gipps": self.gipps, "idm": self.idm}[model]
        except KeyError:
            raise KeyError(f"unknown model {model!r}") from None


FIXTURES: dict[tuple[str, str], VehicleFixture] = {
    (veh, setting): VehicleFixture(veh, setting, OvrvParams(*o), GippsParams(*g), IdmParams(*i))
    for veh, setting, o, g, i in _TABLE
}


def fixture_params(vehicle: str, setting: str, model: str) -> ModelParams:
    """Published parameters for ``vehicle`` (A-G), ``setting`` (min/max)."""
    key = (vehicle.upper(), setting.lower())
    if key not in FIXTURES:
        raise KeyError(f"no fixture for vehicle {vehicle!r} setting {setting!r}")
    return FIXTURES[key].params(model.lower())


def parse_fixture_key(key: str) -> tuple[str, str]:
    """``"A:min"`` or ``"A/min"`` -> ("A", "min")."""
    for sep in (":", "/"):
        if sep in key:
            veh, setting = key.split(sep, 1)
            return veh.strip().upper(), setting.strip().lower()
    raise ValueError(f"fixture key {key!r} must look like 'A:min'")

"""Multi-objective calibration of car-following models for ACC vehicles."""

__version__ = "0.1.0"

from .calibration import DEConfig, ParetoSet, calibrate
from .cycles import gen_cycle
from .engine import RolloutConfig, RolloutError, Trajectory, rollout, rollout_platoon
from .fixtures import fixture_params
from .metrics import ObjectivePair, rmse_pair, split_mask
from .models import GippsParams, IdmParams, OvrvParams

__all__ = [
    "DEConfig", "ParetoSet", "calibrate", "gen_cycle", "RolloutConfig", "RolloutError",
    "Trajectory", "rollout", "rollout_platoon", "fixture_params", "ObjectivePair",
    "rmse_pair", "split_mask", "GippsParams", "IdmParams", "OvrvParams",
]

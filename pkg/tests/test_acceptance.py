"""Acceptance suite: one group of tests per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from cfcalib.calibration import DEConfig, calibrate, nondominated_rank
from cfcalib.cli import main as cli_main
from cfcalib.cycles import gen_cycle, platoon_profile
from cfcalib.engine import HistoryBuffer, RolloutConfig, Trajectory, interp_delayed, rollout, rollout_platoon
from cfcalib.fixtures import FIXTURES, fixture_params
from cfcalib.metrics import split_mask
from cfcalib.models import (
    FollowerObservation,
    GippsParams,
    equilibrium_spacing,
    gipps_next_speed,
    idm_accel,
    ovrv_accel,
)
from oracles import brute_force_rank, direct_lookup_ovrv
from test_fixtures import parsed_rows

acceptance = pytest.mark.acceptance

A_MIN = {m: fixture_params("A", "min", m) for m in ("ovrv", "gipps", "idm")}
CAL = DEConfig(pop=40, iters=200, seed=1)
NOISE_SIGMA = 0.2


def non_dominated(obj):
    for a, b in itertools.permutations(range(len(obj)), 2):
        if np.all(obj[a] <= obj[b]) and np.any(obj[a] < obj[b]):
            return False
    return True


@pytest.fixture(scope="session")
def synthetic():
    lead = gen_cycle("low_step")
    sim = rollout(lead, A_MIN["ovrv"])
    return Trajectory(dt=lead.dt, lead_speed=lead.lead_speed,
                      follower_speed=sim.follower_speed, spacing=sim.spacing)


@pytest.fixture(scope="session")
def self_calibration(synthetic):
    minima = []

    def record(gen, pop, obj):
        minima.append(obj.min(axis=0))

    started = time.perf_counter()
    pareto = calibrate("ovrv", [synthetic], CAL, on_generation=record)
    return pareto, np.array(minima), time.perf_counter() - started


# --- 1 -----------------------------------------------------------------------


@acceptance("AC1 fixture integrity")
def test_ac1_fixture_rows_exact():
    rows = list(parsed_rows())
    assert len(rows) == 14 == len(FIXTURES)
    for vehicle, setting, values in rows:
        got = [x for m in ("ovrv", "gipps", "idm")
               for x in fixture_params(vehicle, setting, m).to_vector()]
        assert got == values, (vehicle, setting)


# --- 2 -----------------------------------------------------------------------


@acceptance("AC2 self-calibration recovery")
def test_ac2_self_calibration(self_calibration):
    pareto, _, seconds = self_calibration
    best = pareto.params_of(pareto.s_star)
    truth = A_MIN["ovrv"]
    print(f"s_e={pareto.s_star.objectives.s_e:.5f} t_h={best.t_h:.4f} eta={best.eta:.4f} "
          f"runtime={seconds:.1f}s")
    assert pareto.s_star.objectives.s_e < 0.05
    assert abs(best.t_h - truth.t_h) <= 0.05 * truth.t_h
    assert abs(best.eta - truth.eta) <= 0.05 * truth.eta
    assert seconds < 300


# --- 3 -----------------------------------------------------------------------


@acceptance("AC3 flat-Pareto directional property")
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ac3_flat_front_with_speed_noise(synthetic, seed):
    rng = np.random.default_rng(100 + seed)
    noisy = Trajectory(dt=synthetic.dt, lead_speed=synthetic.lead_speed,
                       follower_speed=synthetic.follower_speed + rng.normal(0, NOISE_SIGMA, len(synthetic)),
                       spacing=synthetic.spacing)
    cfg = DEConfig(pop=CAL.pop, iters=CAL.iters, seed=seed)
    pareto = calibrate("ovrv", [noisy], cfg)
    s, v = pareto.s_star.objectives, pareto.v_star.objectives
    print(f"seed {seed}: s*=({s.s_e:.4f}, {s.v_e:.4f}) v*=({v.s_e:.4f}, {v.v_e:.4f})")
    assert s.v_e <= 2 * v.v_e
    assert v.s_e >= 2 * s.s_e


# --- 4 -----------------------------------------------------------------------


@acceptance("AC4 ranking oracle equivalence")
def test_ac4_rank_matches_brute_force():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(1, 201))
        if trial % 2:
            pts = rng.integers(0, 15, size=(n, 2)).astype(float)  # many ties
        else:
            pts = rng.random((n, 2))
        pts = [tuple(p) for p in pts.tolist()]
        assert nondominated_rank(pts) == brute_force_rank(pts), trial


# --- 5 -----------------------------------------------------------------------


@acceptance("AC5 dominance and elitism invariants")
def test_ac5_best_objectives_never_worsen(self_calibration):
    pareto, minima, _ = self_calibration
    assert len(minima) == CAL.iters + 1
    assert np.all(np.diff(minima[:, 0]) <= 0)
    assert np.all(np.diff(minima[:, 1]) <= 0)
    assert non_dominated(pareto.objectives())


@acceptance("AC5 dominance and elitism invariants")
@pytest.mark.parametrize("model", ["gipps", "idm"])
def test_ac5_other_models(synthetic, model):
    minima = []
    pareto = calibrate(model, [synthetic], DEConfig(pop=16, iters=30, seed=7),
                       on_generation=lambda g, p, o: minima.append(o.min(axis=0)))
    minima = np.array(minima)
    assert np.all(np.diff(minima, axis=0) <= 0)
    assert non_dominated(pareto.objectives())


# --- 6 -----------------------------------------------------------------------


@acceptance("AC6 model physics")
def test_ac6_ovrv_equilibrium():
    p = A_MIN["ovrv"]
    for v in np.linspace(0, 40, 81):
        s = p.eta + p.t_h * v
        o = FollowerObservation(s=s, v=v, v_lead=v, s_delayed=s, v_lead_delayed=v)
        assert abs(ovrv_accel(o, p)) <= 1e-12


@acceptance("AC6 model physics")
def test_ac6_gipps_brake_bound_random_steps():
    rng = np.random.default_rng(6)
    lo, hi = GippsParams.lower(), GippsParams.upper()
    dt = 0.1
    for _ in range(10_000):
        p = GippsParams.from_vector(lo + rng.random(len(lo)) * (hi - lo))
        s = rng.uniform(-10, 200)
        v_prev, v_last, vl = rng.uniform(0, 45, 3)
        o = FollowerObservation(s=s, v=v_last, v_lead=vl, s_delayed=s, v_lead_delayed=vl,
                                v_self_prev=v_prev, v_self_last_step=v_last)
        v_new = gipps_next_speed(o, p, dt)
        assert v_last - v_new <= p.B * dt + 1e-12


@acceptance("AC6 model physics")
def test_ac6_gipps_free_flow_fixed_point():
    for fx in FIXTURES.values():
        p = fx.gipps
        o = FollowerObservation(s=1e9, v=p.V, v_lead=p.V, s_delayed=1e9, v_lead_delayed=p.V,
                                v_self_prev=p.V, v_self_last_step=p.V)
        assert abs(gipps_next_speed(o, p, 0.1) - p.V) <= 1e-12


@acceptance("AC6 model physics")
def test_ac6_idm_standstill():
    for fx in FIXTURES.values():
        p = fx.idm
        assert abs(idm_accel(FollowerObservation(s=p.eta, v=0.0, v_lead=0.0), p)) <= 1e-12


# --- 7 -----------------------------------------------------------------------


@acceptance("AC7 delay interpolation")
@pytest.mark.parametrize("tau", [0.0, 0.1, 0.5, 1.0, 2.5])
def test_ac7_integer_delay_bit_exact(tau):
    import dataclasses
    lead = gen_cycle("dips")
    p = dataclasses.replace(A_MIN["ovrv"], tau=tau)
    v0 = lead.lead_speed[0]
    s0 = equilibrium_spacing(p, v0)
    sim = rollout(lead, p, RolloutConfig(initial_spacing=s0, initial_speed=v0))
    v_ref, s_ref = direct_lookup_ovrv(lead.lead_speed, p, lead.dt, s0, v0)
    assert np.array_equal(sim.follower_speed, v_ref)
    assert np.array_equal(sim.spacing, s_ref)


@acceptance("AC7 delay interpolation")
def test_ac7_half_step_midpoint():
    rng = np.random.default_rng(7)
    values = rng.uniform(0, 50, 30)
    buf = HistoryBuffer(40, np.array([values[0], 0.0, 0.0]))
    for x in values[1:]:
        buf.push(x, 0.0, 0.0)
    # tau = 1.5 steps: halfway between the samples one and two steps back
    got = interp_delayed(buf, 0.15, 0.1, "spacing")[0]
    assert abs(got - 0.5 * (values[-2] + values[-3])) <= 1e-12


@acceptance("AC7 delay interpolation")
def test_ac7_half_step_rollout():
    import dataclasses
    lead = gen_cycle("dips")
    p = dataclasses.replace(A_MIN["ovrv"], tau=0.15)
    v0 = lead.lead_speed[0]
    s0 = equilibrium_spacing(p, v0)
    sim = rollout(lead, p, RolloutConfig(initial_spacing=s0, initial_speed=v0))
    v_ref, s_ref = direct_lookup_ovrv(lead.lead_speed, p, lead.dt, s0, v0)
    assert np.max(np.abs(sim.follower_speed - v_ref)) <= 1e-12
    assert np.max(np.abs(sim.spacing - s_ref)) <= 1e-12


# --- 8 -----------------------------------------------------------------------


@acceptance("AC8 platoon amplification and recovery")
def test_ac8_platoon():
    lead = platoon_profile()
    sims = rollout_platoon(lead, [A_MIN["ovrv"]] * 7)
    minima = [float(s.follower_speed.min()) for s in sims]
    print("speed minima:", " ".join(f"{m:.3f}" for m in minima))
    assert lead.lead_speed.min() > minima[0]
    assert all(b < a for a, b in zip(minima, minima[1:]))
    assert all(abs(s.follower_speed[-1] - 22.4) < 0.05 for s in sims)


# --- 9 -----------------------------------------------------------------------


@acceptance("AC9 determinism")
def test_ac9_byte_identical_pareto(tmp_path, synthetic):
    from cfcalib.io import write_trajectory
    data = tmp_path / "synthetic.csv"
    write_trajectory(synthetic, data)
    outputs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        assert cli_main(["calibrate", "--model", "ovrv", "--data", str(data), "--pop", "20",
                         "--iters", "40", "--seed", "42", "--out-dir", str(out)]) == 0
        outputs.append((out / "pareto.txt").read_bytes())
    assert outputs[0] == outputs[1]


# --- 10 ----------------------------------------------------------------------


@acceptance("AC10 split semantics")
@pytest.mark.parametrize("n,cal,val", [
    (7, (1, 3), (3, 7)),
    (10, (1, 5), (5, 10)),
    (100, (10, 50), (50, 100)),
    (101, (11, 50), (50, 101)),
])
def test_ac10_split_mask(n, cal, val):
    c = split_mask(n, 0.1, "calibration")
    v = split_mask(n, 0.1, "validation")
    assert (c.start, c.stop) == cal
    assert (v.start, v.stop) == val

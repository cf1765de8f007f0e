import numpy as np
import pytest

from cfcalib.calibration import DEConfig, calibrate
from cfcalib.engine import Trajectory, rollout
from cfcalib.fixtures import fixture_params
from cfcalib.io import (
    DocumentError,
    HeaderError,
    InconsistentStepError,
    NonMonotoneTimeError,
    TrajectoryFileError,
    read_params,
    read_pareto,
    read_trajectory,
    write_params,
    write_pareto,
    write_trajectory,
)


@pytest.fixture
def traj():
    lead = Trajectory(dt=0.1, lead_speed=20 + np.sin(np.arange(50) / 7.0))
    return rollout(lead, fixture_params("B", "max", "ovrv"))


def test_round_trip(tmp_path, traj):
    path = tmp_path / "t.csv"
    write_trajectory(traj, path)
    back = read_trajectory(path)
    assert back.dt == traj.dt and len(back) == len(traj)
    for name in ("lead_speed", "follower_speed", "spacing"):
        np.testing.assert_allclose(getattr(back, name), getattr(traj, name), rtol=1e-6)


def test_lead_only_round_trip(tmp_path):
    lead = Trajectory(dt=0.2, lead_speed=np.linspace(10, 12, 9), t0=5.0)
    path = tmp_path / "lead.csv"
    write_trajectory(lead, path)
    back = read_trajectory(path)
    assert not back.has_follower and back.t0 == 5.0 and back.dt == 0.2


def test_shuffled_rows_rejected(tmp_path, traj):
    path = tmp_path / "t.csv"
    write_trajectory(traj, path)
    lines = path.read_text().splitlines()
    lines[3], lines[7] = lines[7], lines[3]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(NonMonotoneTimeError):
        read_trajectory(path)


def test_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("t,v\n0,1\n0.1,1\n")
    with pytest.raises(HeaderError):
        read_trajectory(path)


def test_inconsistent_step(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("time_s,lead_speed_mps\n0,1\n0.1,1\n0.25,1\n")
    with pytest.raises(InconsistentStepError):
        read_trajectory(path)


def test_partial_column(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("time_s,lead_speed_mps,follower_speed_mps,spacing_m\n0,1,1,5\n0.1,1,,5\n")
    with pytest.raises(TrajectoryFileError):
        read_trajectory(path)


def test_params_round_trip(tmp_path):
    p = fixture_params("C", "max", "gipps")
    write_params(tmp_path / "p.txt", p, {"note": "x"})
    back, meta = read_params(tmp_path / "p.txt")
    assert back == p and meta["note"] == "x" and meta["model"] == "gipps"


def test_params_missing_value(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("document = parameters\nmodel = ovrv\n\nname,value,unit\nt_h,1.0,s\n")
    with pytest.raises(DocumentError):
        read_params(path)


def test_pareto_round_trip(tmp_path, traj):
    pareto = calibrate("ovrv", [traj], DEConfig(pop=6, iters=2, seed=4))
    write_pareto(tmp_path / "pareto.txt", pareto)
    meta, columns, data = read_pareto(tmp_path / "pareto.txt")
    assert columns == ["s_e_m", "v_e_mps", *pareto.names]
    np.testing.assert_array_equal(data[:, :2], pareto.objectives())
    assert np.all(np.diff(data[:, 0]) >= 0)
    assert int(meta["size"]) == len(pareto.candidates)

"""Multi-objective differential evolution over (spacing RMSE, speed RMSE).

Each generation builds one DE/rand1 trial per parent, evaluates all trials,
then keeps N of the 2N parents+trials by non-dominated rank, truncating the
boundary rank by crowding distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import VEHICLE_LENGTH, RolloutConfig, Trajectory, rollout_batch
from .metrics import ObjectivePair, split_mask, squared_error_sums
from .models import params_class

log = logging.getLogger(__name__)


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    kind: str
    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if len(self.names) != len(self.lower) or len(self.names) != len(self.upper):
            raise ValueError("bounds must have one entry per parameter")
        if not np.all(self.lower < self.upper):
            raise ValueError("every lower bound must be below its upper bound")

    @classmethod
    def for_model(cls, kind: str) -> "SearchSpace":
        pc = params_class(kind)
        return cls(kind, pc.names(), pc.lower(), pc.upper())

    @property
    def dim(self) -> int:
        return len(self.names)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * (self.upper - self.lower)


@dataclass(frozen=True)
class DEConfig:
    pop: int = 100
    iters: int = 1000
    F: float = 0.8
    CR: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.pop < 4:
            raise ValueError(f"population must be at least 4, got {self.pop}")
        if self.iters < 0:
            raise ValueError(f"iteration count must be non-negative, got {self.iters}")
        if not 0 < self.F <= 2:
            raise ValueError(f"F must lie in (0, 2], got {self.F}")
        if not 0 <= self.CR <= 1:
            raise ValueError(f"CR must lie in [0, 1], got {self.CR}")


@dataclass
class Candidate:
    params: np.ndarray
    objectives: ObjectivePair
    rank: int = 0
    crowding: float = 0.0


@dataclass
class ParetoSet:
    kind: str
    names: tuple[str, ...]
    candidates: list[Candidate]
    config: DEConfig
    history: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.candidates.sort(key=lambda c: (c.objectives.s_e, c.objectives.v_e))

    @property
    def s_star(self) -> Candidate:
        return min(self.candidates, key=lambda c: (c.objectives.s_e, c.objectives.v_e))

    @property
    def v_star(self) -> Candidate:
        return min(self.candidates, key=lambda c: (c.objectives.v_e, c.objectives.s_e))

    def objectives(self) -> np.ndarray:
        return np.array([c.objectives.as_tuple() for c in self.candidates])

    def params_of(self, candidate: Candidate):
        return params_class(self.kind).from_vector(candidate.params)


# --- DE/rand1 -----------------------------------------------------------------


def de_rand1_trial(parent, donor_a, donor_b, F: float, CR: float,
                   rng: np.random.Generator, lower=None, upper=None) -> np.ndarray:
    """Trial vector from ``parent + F * (donor_a - donor_b)``.

    Binomial crossover takes each coordinate from the mutant with probability
    ``CR``; one random coordinate always comes from the mutant. Coordinates
    are clipped to ``[lower, upper]`` when bounds are given.
    """
    parent = np.asarray(parent, dtype=float)
    mutant = parent + F * (np.asarray(donor_a, dtype=float) - np.asarray(donor_b, dtype=float))
    take = rng.random(parent.shape[0]) < CR
    take[rng.integers(parent.shape[0])] = True
    trial = np.where(take, mutant, parent)
    if lower is not None or upper is not None:
        trial = np.clip(trial, lower, upper)
    return trial


def de_rand1_propose(parent_index: int, population: np.ndarray, F: float, CR: float,
                     rng: np.random.Generator, space: SearchSpace | None = None) -> np.ndarray:
    """Draw two distinct donors (other than the parent) and build a trial."""
    n = population.shape[0]
    if n < 3:
        raise ValueError("DE/rand1 needs at least 3 population members")
    i1, i2 = rng.choice(n - 1, size=2, replace=False)
    i1 += i1 >= parent_index
    i2 += i2 >= parent_index
    lower = space.lower if space is not None else None
    upper = space.upper if space is not None else None
    return de_rand1_trial(population[parent_index], population[i1], population[i2],
                          F, CR, rng, lower, upper)


# --- ranking and selection ----------------------------------------------------


def _objective_array(objectives) -> np.ndarray:
    rows = [o.as_tuple() if isinstance(o, ObjectivePair) else o for o in objectives]
    obj = np.asarray(rows, dtype=float)
    if obj.ndim != 2:
        raise ValueError("objectives must be a sequence of equal-length tuples")
    return np.where(np.isnan(obj), np.inf, obj)


def dominance_matrix(obj: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when candidate i dominates candidate j."""
    a = obj[:, None, :]
    b = obj[None, :, :]
    return np.all(a <= b, axis=2) & np.any(a < b, axis=2)


def nondominated_rank(objectives) -> list[int]:
    """Non-dominated sorting; rank 1 is the non-dominated set."""
    obj = _objective_array(objectives)
    n = obj.shape[0]
    if n == 0:
        raise ValueError("cannot rank an empty set")
    dom = dominance_matrix(obj)
    remaining = dom.sum(axis=0)
    rank = np.zeros(n, dtype=np.int64)
    front = np.flatnonzero(remaining == 0)
    r = 1
    while front.size:
        rank[front] = r
        remaining = remaining - dom[front].sum(axis=0)
        front = np.flatnonzero((remaining == 0) & (rank == 0))
        r += 1
    return rank.tolist()


def crowding_distance(objectives) -> np.ndarray:
    """Crowding distance within one front; extremes per objective get +inf."""
    obj = _objective_array(objectives)
    n, m = obj.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(obj[:, k], kind="stable")
        col = obj[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if not math.isfinite(span) or span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return np.where(np.isnan(dist), 0.0, dist)


def select_indices(objectives, ranks: Sequence[int], n_keep: int) -> np.ndarray:
    """Indices of the survivors: whole fronts by rank, then the boundary front
    by descending crowding distance (ties to the lower index)."""
    obj = _objective_array(objectives)
    ranks = np.asarray(ranks)
    if n_keep >= len(ranks):
        return np.arange(len(ranks))
    chosen: list[int] = []
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        room = n_keep - len(chosen)
        if members.size <= room:
            chosen.extend(members.tolist())
        else:
            crowd = crowding_distance(obj[members])
            order = sorted(range(members.size), key=lambda i: (-crowd[i], members[i]))
            chosen.extend(members[order[:room]].tolist())
        if len(chosen) == n_keep:
            break
    return np.sort(np.asarray(chosen, dtype=np.int64))


def crowding_select(candidates: Sequence[Candidate], n_keep: int) -> list[Candidate]:
    """Pick ``n_keep`` candidates by rank then crowding distance.

    Ranks are (re)computed from the candidates' objectives and written back,
    together with their crowding distance within their own front.
    """
    cands = list(candidates)
    if not cands:
        return []
    obj = _objective_array([c.objectives for c in cands])
    ranks = np.asarray(nondominated_rank(obj))
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        crowd = crowding_distance(obj[members])
        for i, d in zip(members, crowd):
            cands[i].rank = int(r)
            cands[i].crowding = float(d)
    keep = select_indices(obj, ranks, n_keep)
    return [cands[i] for i in keep]


# --- evaluation and the main loop ---------------------------------------------


def evaluate_population(kind: str, population: np.ndarray, data: Sequence[Trajectory],
                        masks: Sequence[np.ndarray], dt: float,
                        L: float = VEHICLE_LENGTH) -> np.ndarray:
    """(m, 2) array of (s_e, v_e) over the concatenated masked samples.

    Each trajectory is simulated from its own first measured sample;
    candidates whose rollout fails on any trajectory score (+inf, +inf).
    """
    m = population.shape[0]
    sum_s = np.zeros(m)
    sum_v = np.zeros(m)
    ok = np.ones(m, dtype=bool)
    count = 0
    for traj, idx in zip(data, masks):
        out = rollout_batch(kind, population, traj.lead_speed, dt,
                            traj.spacing[0], traj.follower_speed[0], L)
        with np.errstate(all="ignore"):
            ds, dv = squared_error_sums(out.spacing, out.speed, traj, idx)
        sum_s += ds
        sum_v += dv
        count += idx.size
        ok &= out.feasible
    with np.errstate(all="ignore"):
        obj = np.column_stack([np.sqrt(sum_s / count), np.sqrt(sum_v / count)])
    obj[~ok] = np.inf
    obj[~np.all(np.isfinite(obj), axis=1)] = np.inf
    return obj


def calibrate(
    kind: str,
    data: Sequence[Trajectory],
    cfg: DEConfig | None = None,
    rollout_cfg: RolloutConfig | None = None,
    discard_frac: float = 0.1,
    on_generation: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> ParetoSet:
    """Calibrate ``kind`` against measured trajectories.

    Objectives use the calibration half of every trajectory (after the
    initial discard), pooled into one RMSE per objective. ``on_generation``
    is called with (generation, population, objectives) after
    initialization (generation 0) and after every selection step.
    """
    cfg = cfg or DEConfig()
    if not data:
        raise ValueError("no calibration data")
    dt = data[0].dt
    rollout_cfg = rollout_cfg or RolloutConfig(dt=dt)
    for traj in data:
        if not traj.has_follower:
            raise ValueError("calibration data needs follower speed and spacing")
        if abs(traj.dt - rollout_cfg.dt) > 1e-9:
            raise ValueError(f"data dt {traj.dt} does not match rollout dt {rollout_cfg.dt}")
    masks = [np.asarray(split_mask(len(t), discard_frac, "calibration")) for t in data]

    space = SearchSpace.for_model(kind)
    rng = np.random.default_rng(cfg.seed)

    def evaluate(pop: np.ndarray) -> np.ndarray:
        return evaluate_population(kind, pop, data, masks, rollout_cfg.dt, rollout_cfg.L)

    pop = space.sample(rng, cfg.pop)
    obj = evaluate(pop)
    if not np.isfinite(obj).any():
        raise CalibrationError(
            "every initial candidate produced an infeasible rollout; check the data and bounds"
        )
    history = [(float(obj[:, 0].min()), float(obj[:, 1].min()))]
    if on_generation:
        on_generation(0, pop, obj)

    for gen in range(1, cfg.iters + 1):
        trials = np.array([de_rand1_propose(j, pop, cfg.F, cfg.CR, rng, space)
                           for j in range(cfg.pop)])
        both = np.vstack([pop, trials])
        both_obj = np.vstack([obj, evaluate(trials)])
        keep = select_indices(both_obj, nondominated_rank(both_obj), cfg.pop)
        pop, obj = both[keep], both_obj[keep]
        history.append((float(obj[:, 0].min()), float(obj[:, 1].min())))
        if on_generation:
            on_generation(gen, pop, obj)
        if gen % 50 == 0:
            log.info("generation %d: best s_e=%.4f best v_e=%.4f", gen, *history[-1])

    ranks = np.asarray(nondominated_rank(obj))
    front = np.flatnonzero(ranks == 1)
    crowd = crowding_distance(obj[front])
    candidates = [
        Candidate(params=pop[i].copy(), objectives=ObjectivePair(float(obj[i, 0]), float(obj[i, 1])),
                  rank=1, crowding=float(d))
        for i, d in zip(front, crowd)
    ]
    return ParetoSet(kind=kind, names=space.names, candidates=candidates, config=cfg,
                     history=history)

"""Command-line front end.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import secrets
import sys
import time
from pathlib import Path

from . import __version__
from .calibration import CalibrationError, DEConfig, calibrate
from .cycles import CYCLE_KINDS, DEFAULT_DIP_DECEL, DEFAULT_RAMP_ACCEL, gen_cycle
from .engine import VEHICLE_LENGTH, RolloutConfig, RolloutError, rollout_platoon
from .fixtures import FIXTURES, SETTINGS, VEHICLES, fixture_params, parse_fixture_key
from .io import (
    DocumentError,
    TrajectoryFileError,
    read_params,
    read_trajectory,
    write_manifest,
    write_params,
    write_pareto,
    write_trajectory,
)
from .models import MODEL_KINDS, params_class
from .validation import REPORT_COLUMNS, validation_report

log = logging.getLogger("cfcalib")


class UsageError(Exception):
    pass


def _positive(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text}")
        return value
    return parse


def _manifest(args, command: str, started: float, **extra) -> dict:
    return {
        "command": command,
        "argv": list(args._argv),
        "tool_version": __version__,
        "wall_clock_s": round(time.perf_counter() - started, 3),
        **extra,
    }


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


# --- generate -------------------------------------------------------------------


def cmd_generate(args) -> int:
    started = time.perf_counter()
    traj = gen_cycle(args.kind, args.dt, args.ramp_accel, args.dip_decel)
    out = Path(args.out)
    write_trajectory(traj, out)
    write_manifest(_sidecar(out), _manifest(
        args, "generate", started,
        config={"kind": args.kind, "dt": args.dt, "ramp_accel": args.ramp_accel,
                "dip_decel": args.dip_decel},
        outputs=[str(out)], samples=len(traj),
    ))
    log.info("wrote %s (%d samples)", out, len(traj))
    return 0


# --- simulate -------------------------------------------------------------------


def _load_params(model: str, params_path: str | None, fixture: str | None):
    if (params_path is None) == (fixture is None):
        raise UsageError("give exactly one of --params or --fixture")
    if fixture is not None:
        veh, setting = parse_fixture_key(fixture)
        try:
            return fixture_params(veh, setting, model)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
    params, meta = read_params(params_path)
    if params.kind != model:
        raise UsageError(f"{params_path} holds {params.kind} parameters, not {model}")
    return params


def _vehicle_paths(out: Path, n: int) -> list[Path]:
    if n == 1:
        return [out]
    return [out.with_name(f"{out.stem}_veh{k}{out.suffix}") for k in range(1, n + 1)]


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    if args.platoon < 1:
        raise UsageError("--platoon must be at least 1")
    params = _load_params(args.model, args.params, args.fixture)
    lead = read_trajectory(args.lead)
    if args.dt is not None and abs(args.dt - lead.dt) > 1e-9:
        raise UsageError(f"--dt {args.dt} does not match the lead file step {lead.dt}")
    first = RolloutConfig(dt=lead.dt, L=args.vehicle_length,
                          initial_spacing=args.init_spacing, initial_speed=args.init_speed)
    cfgs = [first] + [RolloutConfig(dt=lead.dt, L=args.vehicle_length)
                      for _ in range(args.platoon - 1)]
    sims = rollout_platoon(lead, [params] * args.platoon, cfgs)
    out_paths = _vehicle_paths(Path(args.out), args.platoon)
    for sim, path in zip(sims, out_paths):
        write_trajectory(sim, path)
    write_manifest(_sidecar(Path(args.out)), _manifest(
        args, "simulate", started,
        inputs={"lead": args.lead, "params": args.params, "fixture": args.fixture},
        config={"model": args.model, "params": params.as_dict(), "dt": lead.dt,
                "vehicle_length": args.vehicle_length, "init_spacing": args.init_spacing,
                "init_speed": args.init_speed, "platoon": args.platoon},
        outputs=[str(p) for p in out_paths],
    ))
    return 0


# --- calibrate ------------------------------------------------------------------


def cmd_calibrate(args) -> int:
    started = time.perf_counter()
    seed = args.seed
    if seed is None:
        seed = secrets.randbelow(2**31)
        print(f"seed: {seed}")
    try:
        de = DEConfig(pop=args.pop, iters=args.iters, F=args.F, CR=args.CR, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = [read_trajectory(p) for p in args.data]
    for path, traj in zip(args.data, data):
        if not traj.has_follower:
            raise UsageError(f"{path} has no follower speed/spacing; cannot calibrate against it")
    dt = data[0].dt
    if any(abs(t.dt - dt) > 1e-9 for t in data):
        raise UsageError("all calibration files must share one time step")
    rcfg = RolloutConfig(dt=dt, L=args.vehicle_length)
    pareto = calibrate(args.model, data, de, rcfg, discard_frac=args.discard)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "tool_version": __version__, "seed": seed, "pop": de.pop, "iters": de.iters,
        "F": de.F, "CR": de.CR, "dt": dt, "vehicle_length": args.vehicle_length,
        "discard_frac": args.discard, "data": list(args.data),
    }
    write_pareto(out_dir / "pareto.txt", pareto, meta)
    for label, cand in (("s_star", pareto.s_star), ("v_star", pareto.v_star)):
        write_params(out_dir / f"{label}.txt", pareto.params_of(cand),
                     {"solution": label, "s_e_m": cand.objectives.s_e,
                      "v_e_mps": cand.objectives.v_e, **meta})
    write_manifest(out_dir / "manifest.json", _manifest(
        args, "calibrate", started,
        inputs={"data": list(args.data)},
        config={"model": args.model, "de": {"pop": de.pop, "iters": de.iters, "F": de.F,
                                            "CR": de.CR},
                "rollout": {"dt": dt, "vehicle_length": args.vehicle_length},
                "discard_frac": args.discard},
        seed=seed,
        outputs=[str(out_dir / n) for n in ("pareto.txt", "s_star.txt", "v_star.txt")],
    ))
    s, v = pareto.s_star.objectives, pareto.v_star.objectives
    log.info("front of %d: s* (s_e=%.4f, v_e=%.4f) v* (s_e=%.4f, v_e=%.4f)",
             len(pareto.candidates), s.s_e, s.v_e, v.s_e, v.v_e)
    return 0


# --- validate -------------------------------------------------------------------


def cmd_validate(args) -> int:
    started = time.perf_counter()
    sets = {}
    for label, path in (("s_star", args.s_star), ("v_star", args.v_star)):
        sets[label] = _load_params(args.model, path, None)
    lead = read_trajectory(args.lead)
    refs = [read_trajectory(p) for p in args.reference]
    for path, ref in zip(args.reference, refs):
        if not ref.has_follower:
            raise UsageError(f"{path} has no follower speed/spacing")
        if len(ref) != len(lead):
            raise UsageError(f"{path} has {len(ref)} samples, lead file has {len(lead)}")
        if abs(ref.dt - lead.dt) > 1e-9:
            raise UsageError(f"{path} time step differs from the lead file")
    cfgs = [RolloutConfig(dt=lead.dt, L=args.vehicle_length,
                          initial_spacing=float(r.spacing[0]),
                          initial_speed=float(r.follower_speed[0])) for r in refs]
    runs = {label: rollout_platoon(lead, [p] * len(refs), cfgs) for label, p in sets.items()}
    report = validation_report(runs, refs, args.window)
    out = Path(args.out)
    paths = []
    for label, rows in report.items():
        path = out.with_name(f"{out.stem}_{label}{out.suffix or '.csv'}")
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for veh, a, b, vr, sr, pe in rows:
                w.writerow([veh, format(a, ".10g"), format(b, ".10g"),
                            repr(vr), repr(sr), repr(pe)])
        paths.append(path)
    write_manifest(_sidecar(out), _manifest(
        args, "validate", started,
        inputs={"lead": args.lead, "reference": list(args.reference),
                "s_star": args.s_star, "v_star": args.v_star},
        config={"model": args.model, "window_s": args.window,
                "vehicle_length": args.vehicle_length,
                "params": {k: p.as_dict() for k, p in sets.items()}},
        outputs=[str(p) for p in paths],
    ))
    return 0


# --- fixtures -------------------------------------------------------------------


def cmd_fixtures(args) -> int:
    vehicles = [args.vehicle.upper()] if args.vehicle else list(VEHICLES)
    settings = [args.setting] if args.setting else list(SETTINGS)
    models = [args.model] if args.model else list(MODEL_KINDS)
    if args.out:
        if len(vehicles) * len(settings) * len(models) != 1:
            raise UsageError("--out needs --vehicle, --setting and --model")
        p = fixture_params(vehicles[0], settings[0], models[0])
        write_params(args.out, p, {"source": "fixture", "vehicle": vehicles[0],
                                   "setting": settings[0], "tool_version": __version__})
        return 0
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["vehicle", "setting", "model", "parameter", "value", "unit"])
    for veh in vehicles:
        for setting in settings:
            if (veh, setting) not in FIXTURES:
                raise UsageError(f"no fixture for {veh}/{setting}")
            for model in models:
                p = fixture_params(veh, setting, model)
                for name in p.names():
                    w.writerow([veh, setting, model, name, repr(getattr(p, name)), p.units[name]])
    return 0


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfcalib", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic lead driving cycle")
    g.add_argument("--kind", required=True, choices=CYCLE_KINDS)
    g.add_argument("--dt", type=_positive("--dt"), default=0.1)
    g.add_argument("--ramp-accel", type=_positive("--ramp-accel"), default=DEFAULT_RAMP_ACCEL)
    g.add_argument("--dip-decel", type=_positive("--dip-decel"), default=DEFAULT_DIP_DECEL)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="simulate followers behind a lead trajectory")
    s.add_argument("--model", required=True, choices=MODEL_KINDS)
    s.add_argument("--params", help="parameter file")
    s.add_argument("--fixture", help="published parameter set, e.g. A:min")
    s.add_argument("--lead", required=True)
    s.add_argument("--dt", type=_positive("--dt"))
    s.add_argument("--init-spacing", type=float)
    s.add_argument("--init-speed", type=float)
    s.add_argument("--platoon", type=int, default=1)
    s.add_argument("--vehicle-length", type=_positive("--vehicle-length"), default=VEHICLE_LENGTH)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="multi-objective calibration against trajectory files")
    c.add_argument("--model", required=True, choices=MODEL_KINDS)
    c.add_argument("--data", required=True, nargs="+")
    c.add_argument("--pop", type=int, default=100)
    c.add_argument("--iters", type=int, default=1000)
    c.add_argument("--F", type=float, default=0.8)
    c.add_argument("--CR", type=float, default=0.9)
    c.add_argument("--seed", type=int)
    c.add_argument("--discard", type=float, default=0.1)
    c.add_argument("--vehicle-length", type=_positive("--vehicle-length"), default=VEHICLE_LENGTH)
    c.add_argument("--out-dir", required=True)
    c.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("validate", help="platoon error report for s* and v* parameter sets")
    v.add_argument("--model", required=True, choices=MODEL_KINDS)
    v.add_argument("--s-star", required=True)
    v.add_argument("--v-star", required=True)
    v.add_argument("--lead", required=True)
    v.add_argument("--reference", required=True, nargs="+",
                   help="observed trajectories of vehicles 1..n, in platoon order")
    v.add_argument("--window", type=_positive("--window"), default=10.0)
    v.add_argument("--vehicle-length", type=_positive("--vehicle-length"), default=VEHICLE_LENGTH)
    v.add_argument("--out", required=True,
                   help="report path; one file per parameter set is written with a _s_star/_v_star suffix")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("fixtures", help="dump published parameter sets")
    f.add_argument("--vehicle", choices=list(VEHICLES) + [x.lower() for x in VEHICLES])
    f.add_argument("--setting", choices=SETTINGS)
    f.add_argument("--model", choices=MODEL_KINDS)
    f.add_argument("--out", help="write a single parameter file instead of the CSV dump")
    f.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, TrajectoryFileError, DocumentError, RolloutError, CalibrationError,
            ValueError) as exc:
        print(f"cfcalib {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

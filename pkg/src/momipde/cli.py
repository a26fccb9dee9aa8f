"""Batch driver: run the full design search, verify single candidate
points, or simulate a closed loop from saved gains, emitting
machine-readable artifacts with stable formats and exit codes (0
success, 2 config error, 3 empty archive)."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .hmode import HmodeConfig, knee_score, run
from .lmi import EPS_FEAS_DEFAULT, is_strictly_feasible
from .problems import (BiboPlant, GainSet, RobustFuzzyPlant, bibo_plant,
                       build_example1, build_example2, example1_momip,
                       example2_momip, load_plant, lorenz_fuzzy_plant,
                       recover_gains)
from .sim import (Diverged, SimConfig, l2_gain_ratio, simulate_bibo,
                  simulate_lorenz, write_trajectory_csv)

PROBLEMS = ("example1", "example1-augmented", "example2")


class ConfigError(Exception):
    """Anything wrong with flags, the config file, or their combination."""


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path!r} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _problem_name(args, config):
    name = getattr(args, "problem", None) or config.get("problem")
    if name is None:
        raise ConfigError("no problem selected (flag --problem or config key 'problem')")
    if name not in PROBLEMS:
        raise ConfigError(f"unknown problem {name!r} (expected one of {', '.join(PROBLEMS)})")
    return name


def _custom_plant(config, name):
    path = config.get("plant")
    if path is None:
        return None
    try:
        plant = load_plant(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot load plant {path!r}: {e}") from e
    wants_fuzzy = name.startswith("example1")
    if wants_fuzzy and not isinstance(plant, RobustFuzzyPlant):
        raise ConfigError(f"{name} needs a robust_fuzzy plant, got {type(plant).__name__}")
    if not wants_fuzzy and not isinstance(plant, BiboPlant):
        raise ConfigError(f"{name} needs a bibo plant, got {type(plant).__name__}")
    return plant


def _bounds(config):
    raw = config.get("bounds")
    if raw is None:
        return None
    try:
        return (np.asarray(raw["lo"], dtype=np.float64),
                np.asarray(raw["hi"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bounds must be {{'lo': [...], 'hi': [...]}}: {e}") from e


def _resolve_momip(name, config):
    plant = _custom_plant(config, name)
    bounds = _bounds(config)
    try:
        if name == "example2":
            return example2_momip(plant=plant, bounds=bounds)
        return example1_momip(plant=plant, augmented=(name == "example1-augmented"),
                              bounds=bounds)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _build_system(name, config, alpha):
    plant = _custom_plant(config, name)
    if name == "example2":
        return build_example2(plant or bibo_plant(), alpha)
    return build_example1(plant or lorenz_fuzzy_plant(), alpha,
                          augmented=(name == "example1-augmented"))


def _hmode_config(args, config):
    fields = dict(config.get("hmode", {}))
    if getattr(args, "seed", None) is not None:
        fields["seed"] = args.seed
    try:
        return HmodeConfig(**fields)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad hmode settings: {e}") from e


def _sim_config(args, config):
    fields = dict(config.get("sim", {}))
    if getattr(args, "dt", None) is not None:
        fields["dt"] = args.dt
    if getattr(args, "horizon", None) is not None:
        fields["t_end"] = args.horizon
    if getattr(args, "sim_seed", None) is not None:
        fields["seed"] = args.sim_seed
    if getattr(args, "perturbed", False):
        fields["perturbed"] = True
    if getattr(args, "x0", None) is not None:
        fields["x0"] = _parse_floats(args.x0, "--x0")
    try:
        return SimConfig(**fields)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad sim settings: {e}") from e


def _out_dir(args, config):
    out = getattr(args, "out", None) or config.get("out") or os.environ.get("MOMIPDE_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_floats(text, label):
    try:
        vals = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"{label} expects a comma-separated float list: {e}") from e
    if not vals:
        raise ConfigError(f"{label} is empty")
    return np.asarray(vals, dtype=np.float64)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _gains_lists(layout, x_star):
    return [g.tolist() for g in recover_gains(layout, x_star).gains]


def _cmd_design(args) -> int:
    if args.config is None:
        raise ConfigError("design requires --config")
    config = _load_config(args.config)
    name = _problem_name(args, config)
    problem = _resolve_momip(name, config)
    cfg = _hmode_config(args, config)
    out = _out_dir(args, config)

    start = time.perf_counter()
    result = run(problem, cfg)
    wall = time.perf_counter() - start

    meta = {
        "problem": name,
        "seed": cfg.seed,
        "evaluations": result.evaluations_count,
        "generations": result.generations_run,
        "wall_time_s": wall,
        "backend": BACKEND,
        "archive_size": len(result.archive),
        "version": __version__,
    }
    _write_json(os.path.join(out, "run_meta.json"), meta)
    if len(result.archive) == 0:
        print("no feasible design found: archive is empty", file=sys.stderr)
        return 3

    entries = sorted(result.archive.entries, key=lambda e: e.f[0])
    n_obj, m = entries[0].f.shape[0], entries[0].alpha.shape[0]
    header = ",".join([f"f{i + 1}" for i in range(n_obj)] + [f"alpha{j + 1}" for j in range(m)])
    with open(os.path.join(out, "apf.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for e in entries:
            vals = [repr(float(v)) for v in e.f] + [repr(float(v)) for v in e.alpha]
            fh.write(",".join(vals) + "\n")

    gains = {}
    for row, e in enumerate(entries):
        system = _build_system(name, config, e.alpha)
        gains[str(row)] = _gains_lists(system.layout, e.x_star)
    _write_json(os.path.join(out, "gains.json"), gains)

    knee = result.knee
    fs = np.stack([e.f for e in entries])
    score = knee_score(knee.f, fs.min(axis=0), fs.max(axis=0))
    knee_row = next(row for row, e in enumerate(entries) if e.order == knee.order)
    _write_json(os.path.join(out, "knee.json"), {
        "f": [float(v) for v in knee.f],
        "alpha": [float(v) for v in knee.alpha],
        "score": float(score),
        "row": knee_row,
    })

    print(f"archive size {len(entries)}, knee f={[float(v) for v in knee.f]} "
          f"alpha={[float(v) for v in knee.alpha]} (row {knee_row})")
    print(f"wrote apf.csv, knee.json, gains.json, run_meta.json to {out}")
    return 0


def _cmd_verify(args) -> int:
    config = _load_config(args.config)
    name = _problem_name(args, config)
    if not args.alpha:
        raise ConfigError("verify requires at least one --alpha")
    m = 2 if name == "example2" else 3
    eps = float(config.get("hmode", {}).get("eps_feas", EPS_FEAS_DEFAULT))
    out = _out_dir(args, config)

    report = []
    for text in args.alpha:
        alpha = _parse_floats(text, "--alpha")
        if alpha.shape[0] != m:
            raise ConfigError(f"{name} takes {m} alpha components, got {alpha.shape[0]}")
        row = {"alpha": [float(v) for v in alpha]}
        try:
            system = _build_system(name, config, alpha)
        except ValueError as e:
            row.update(feasible=False, lambda_star=None, status=None, gains=None,
                       reason=str(e))
            report.append(row)
            print(f"alpha={row['alpha']} invalid: {e}")
            continue
        ok, res = is_strictly_feasible(system, eps)
        row.update(feasible=bool(ok), lambda_star=float(res.lambda_star),
                   status=res.status.value,
                   gains=_gains_lists(system.layout, res.x_star) if ok else None)
        report.append(row)
        print(f"alpha={row['alpha']} lambda_star={res.lambda_star!r} feasible={bool(ok)}")
        if ok:
            for gi, g in enumerate(row["gains"]):
                print(f"  K{gi + 1} = {g}")
    _write_json(os.path.join(out, "verify.json"), {"problem": name, "results": report})
    return 0


def _load_gains(args) -> list:
    if args.gains is None:
        raise ConfigError("simulate requires --gains (or --uncontrolled)")
    try:
        with open(args.gains, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read gains {args.gains!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"gains {args.gains!r} is not valid JSON: {e}") from e
    if isinstance(data, dict):
        key = str(args.row if args.row is not None else 0)
        if key not in data:
            raise ConfigError(f"gains file has no row {key!r}")
        data = data[key]
    if not isinstance(data, list) or not data:
        raise ConfigError("gains must be a nonempty list of matrices")
    try:
        return [np.asarray(g, dtype=np.float64) for g in data]
    except ValueError as e:
        raise ConfigError(f"gains are not numeric matrices: {e}") from e


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    name = _problem_name(args, config)
    cfg = _sim_config(args, config)
    out = _out_dir(args, config)

    try:
        if name == "example2":
            if args.uncontrolled:
                raise ConfigError("--uncontrolled applies to the example1 loop only")
            mats = _load_gains(args)
            plant = _custom_plant(config, name)
            result = simulate_bibo(mats[0], cfg, plant=plant)
        elif args.uncontrolled:
            result = simulate_lorenz(None, controlled=False, cfg=cfg)
        else:
            mats = _load_gains(args)
            try:
                gains = GainSet(gains=tuple(mats))
            except ValueError as e:
                raise ConfigError(str(e)) from e
            result = simulate_lorenz(gains, controlled=True, cfg=cfg)
    except Diverged as e:
        print(f"simulation diverged: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        raise ConfigError(str(e)) from e

    write_trajectory_csv(os.path.join(out, "traj.csv"), result)
    metrics = {
        "max_u_norm": result.max_u_norm,
        "max_y_norm": result.max_y_norm,
        "l2_ratio": result.l2_ratio,
    }
    _write_json(os.path.join(out, "metrics.json"), metrics)
    print(f"max_u_norm={result.max_u_norm!r} max_y_norm={result.max_y_norm!r} "
          f"l2_ratio={result.l2_ratio!r}")
    print(f"wrote traj.csv, metrics.json to {out}")
    return 0


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="momipde",
        description="Multiobjective matrix-inequality design: search, verify, simulate.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory (default: config, "
                                      "then MOMIPDE_OUT, then the current directory)")
    common.add_argument("--problem", choices=PROBLEMS,
                        help="problem selector (overrides the config)")

    p_design = sub.add_parser("design", parents=[common],
                              help="run the full search and write the front artifacts")
    p_design.add_argument("--seed", type=int, help="search seed (overrides the config)")

    p_verify = sub.add_parser("verify", parents=[common],
                              help="check feasibility of explicit candidate points")
    p_verify.add_argument("--alpha", action="append", default=[],
                          help="comma-separated candidate, repeatable")

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="integrate a closed loop from saved gains")
    p_sim.add_argument("--gains", help="gains JSON (design output or a bare matrix list)")
    p_sim.add_argument("--row", type=int, help="row of the gains file to use (default 0)")
    p_sim.add_argument("--uncontrolled", action="store_true",
                       help="run the example1 loop with u=0 (no gains needed)")
    p_sim.add_argument("--perturbed", action="store_true",
                       help="use the drifted plant parameters")
    p_sim.add_argument("--dt", type=float, help="integration step (s)")
    p_sim.add_argument("--horizon", type=float, help="simulation horizon (s)")
    p_sim.add_argument("--sim-seed", type=int, help="disturbance seed")
    p_sim.add_argument("--x0", help="comma-separated initial state")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        if args.command == "design":
            return _cmd_design(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_simulate(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

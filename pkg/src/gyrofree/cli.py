"""Command-line entry point: ``gyrofree simulate | check | replay``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, backend_name
from .checks import run_checks
from .plot import write_plot_svg
from .sensors import read_measurement_log, write_measurement_log
from .sim import (
    config_from_dict,
    read_states_csv,
    replay,
    run,
    tomllib,
    write_states_csv,
    write_trace_csv,
)

RUN_META = "run.json"
LOG_NAME = "measurements.csv"
STATES_NAME = "states.csv"


class CliError(Exception):
    """Failure that should be reported as a one-line message."""


def _load_toml(path: Path) -> dict:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"{path}: invalid TOML: {exc}") from None


def _resolve_paths(data: dict, base_dir: Path) -> dict:
    """Make relative paths absolute so the dict can be stored next to the outputs."""
    data = dict(data)
    traj = data.get("trajectory")
    if isinstance(traj, dict) and traj.get("kind") == "custom_table" and "path" in traj:
        p = Path(traj["path"])
        data["trajectory"] = {**traj, "path": str(p if p.is_absolute() else (base_dir / p).resolve())}
    if "out_dir" in data:
        p = Path(data["out_dir"])
        data["out_dir"] = str(p if p.is_absolute() else (base_dir / p).resolve())
    return data


def _build_config(data: dict, seed: int | None):
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        return data, config_from_dict(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(f"invalid config: {exc}") from None


def _summary(trace) -> str:
    last = trace[-1]
    return (
        f"t={last.t:g} att_err_rad={last.att_err_rad:.3e} omega_err={last.omega_err:.3e} "
        f"lyapunov={last.lyapunov:.3e}"
    )


def cmd_simulate(args) -> int:
    path = Path(args.config)
    data = _resolve_paths(_load_toml(path), path.parent.resolve())
    data, cfg = _build_config(data, args.seed)
    if args.out is not None:
        out = Path(args.out)
    elif cfg.output_path is not None:
        out = Path(cfg.output_path)
    else:
        out = Path("out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None

    t0 = time.perf_counter()
    result = run(cfg)
    elapsed = time.perf_counter() - t0

    trace_csv = write_trace_csv(result.trace, out / "trace.csv")
    trace_svg = write_plot_svg(result.trace, out / "trace.svg")
    write_measurement_log(out / LOG_NAME, result.sample_t, result.acc, result.mag)
    write_states_csv(result, out / STATES_NAME)
    meta = {"config": data, "version": __version__}
    (out / RUN_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    print(f"simulated {cfg.n_steps} steps in {elapsed:.2f} s ({backend_name()} backend)")
    print(_summary(result.trace))
    print(f"wrote {trace_csv} and {trace_svg}")
    return 0


def cmd_check(args) -> int:
    results = run_checks(n=args.samples, seed=args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  max_err={r.max_error:.3e}  tol={r.tol:.0e}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_replay(args) -> int:
    log = Path(args.log)
    if args.config is not None:
        cfg_path = Path(args.config)
        data = _resolve_paths(_load_toml(cfg_path), cfg_path.parent.resolve())
    else:
        meta_path = log.parent / RUN_META
        if not meta_path.exists():
            raise CliError(f"no --config given and no {RUN_META} next to {log}")
        try:
            data = json.loads(meta_path.read_text())["config"]
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(f"cannot read {meta_path}: {exc}") from None
    data, cfg = _build_config(data, args.seed)

    try:
        t, acc, mag = read_measurement_log(log)
    except FileNotFoundError:
        raise CliError(f"measurement log not found: {log}") from None
    truth_path = Path(args.truth) if args.truth else log.parent / STATES_NAME
    truth = None
    if truth_path.exists():
        _, R, omega, _, _ = read_states_csv(truth_path)
        truth = (R, omega)
    elif args.truth:
        raise CliError(f"truth file not found: {truth_path}")

    try:
        res = replay(cfg, t, acc, mag, truth=truth)
    except ValueError as exc:
        raise CliError(f"replay failed: {exc}") from None

    out = Path(args.out) if args.out else log.parent
    out.mkdir(parents=True, exist_ok=True)
    print(f"replayed {len(t) - 1} steps from {log}")
    if res.trace is not None:
        path = write_trace_csv(res.trace, out / "replay_trace.csv")
        print(_summary(res.trace))
        print(f"wrote {path}")
    else:
        R_hat, w_hat = res.R_hat[-1], res.omega_hat[-1]
        print("no ground truth available; final estimate:")
        print("R_hat =", np.array2string(R_hat, precision=6).replace("\n", ""))
        print("Omega_hat =", np.array2string(w_hat, precision=6))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyrofree",
        description="Equivariant attitude observer driven by an accelerometer array and a magnetometer.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop simulation and write CSV and SVG output")
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--seed", type=int, help="override the seed in the config")
    p.add_argument("--out", help="output directory (default: out_dir from the config, else ./out)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run the built-in invariant quick-suite")
    p.add_argument("--samples", type=int, default=200, help="random samples per check")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="re-run the observer on a recorded measurement log")
    p.add_argument("--log", required=True, help="measurement log CSV")
    p.add_argument("--config", help=f"TOML config (default: {RUN_META} next to the log)")
    p.add_argument("--seed", type=int, help="override the seed")
    p.add_argument("--truth", help=f"ground-truth states CSV (default: {STATES_NAME} next to the log)")
    p.add_argument("--out", help="output directory (default: the log's directory)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gyrofree {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"gyrofree {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

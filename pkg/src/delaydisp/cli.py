"""Command-line entry point.

Exit codes: 0 healthy (or steady), 2 diverged, 3 configuration error,
4 I/O error, 1 failed verification.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import fit_decay, stability_report
from .discretization import SpatialGrid, build_operators
from .errors import ConfigurationError
from .integrator import Thresholds
from .scenarios import (
    RunConfig,
    emit,
    load_config,
    preset_members,
    default_decay_window,
    read_norms_csv,
    run,
    run_sweep,
    preset,
)

log = logging.getLogger("delaydisp")

EXIT_OK, EXIT_VERIFY, EXIT_DIVERGED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4


def _summary(label, result) -> str:
    decay = f" slope={result.decay.slope:.6g} r2={result.decay.r_squared:.6f}" if result.decay else ""
    return f"{label}: {result.status.state} final ||u||={result.norm_series.l2_u[-1]:.6g}{decay}"


def _thresholds(args) -> Thresholds:
    if args.blowup is None:
        return Thresholds()
    if not args.blowup > 0:
        raise ConfigurationError(f"--blowup must be positive, got {args.blowup}")
    return Thresholds(blowup=args.blowup)


def _cmd_run(args) -> int:
    if args.config:
        members = [(Path(args.config).stem, load_config(args.config))]
    else:
        members = preset_members(args.preset)
    out = Path(args.out)
    code = EXIT_OK
    for label, cfg in members:
        result = run(cfg, thresholds=_thresholds(args))
        target = out if len(members) == 1 else out / label
        emit(result, target)
        print(_summary(label, result))
        if result.status.state == "diverged":
            code = EXIT_DIVERGED
    return code


def _cmd_sweep(args) -> int:
    base = load_config(args.config) if args.config else preset(args.preset)
    values = [v for v in args.values.split(",") if v.strip()]
    try:
        values = [float(v) for v in values]
    except ValueError as exc:
        raise ConfigurationError(f"sweep values must be numbers: {exc}") from exc
    results = run_sweep(base, args.axis, values, max_workers=args.workers, thresholds=_thresholds(args))
    code = EXIT_OK
    for v, result in zip(values, results):
        label = f"{args.axis}={v:g}"
        emit(result, Path(args.out) / label)
        print(_summary(label, result))
        if result.status.state == "diverged":
            code = EXIT_DIVERGED
    return code


def _cmd_report(args) -> int:
    src = Path(args.input)
    with open(src / "meta.json") as fh:
        meta = json.load(fh)
    cfg = RunConfig.from_dict(meta["config"])
    series = read_norms_csv(src / "norms.csv")
    params = cfg.params.replace(tau=meta.get("metadata", {}).get("tau_used", cfg.params.tau))
    ops = build_operators(SpatialGrid(cfg.n, cfg.params.ell))
    report = stability_report(params, cfg.profile, cfg.history, ops, ds=cfg.dt)
    window = default_decay_window(cfg.T_end, float(series.t[-1]))
    if args.window_start is not None:
        window = (args.window_start, window[1])
    out = {"stability": report.as_dict()}
    if series.t[-1] > window[0]:
        out["decay"] = fit_decay(series.t, series.l2_u, window).as_dict()
        out["decay_h2"] = fit_decay(series.t, series.h2_u, window).as_dict()
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_all

    rows = run_all()
    width = max(len(r[0]) for r in rows)
    for name, value, ok in rows:
        print(f"{name:<{width}}  {value:>12}  {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all(r[2] for r in rows) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaydisp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a preset or a config file")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--blowup", type=float, default=None, help="max|u| treated as divergence (default 1e6)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="vary one parameter over a list of values")
    src = p_sweep.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config")
    p_sweep.add_argument("--axis", required=True, choices=("tau", "nu", "mu"))
    p_sweep.add_argument("--values", required=True, help="comma separated")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--blowup", type=float, default=None, help="max|u| treated as divergence (default 1e6)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_rep = sub.add_parser("report", help="recompute stability constants and decay fits from a run directory")
    p_rep.add_argument("--in", dest="input", required=True)
    p_rep.add_argument("--window-start", type=float, default=None,
                       help="start of the decay-fit window (default: same rule as run)")
    p_rep.set_defaults(func=_cmd_report)

    p_ver = sub.add_parser("verify", help="run the numerical oracles and print a pass/fail table")
    p_ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

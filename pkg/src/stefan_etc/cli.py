"""Command-line interface.

Subcommands: run (event-triggered scenario), baseline (continuous
comparator), sweep (parameter grid), audit (re-check stored CSVs),
bench (numba vs numpy lanes). audit exits nonzero when an enabled check
fails.
"""

from __future__ import annotations

import argparse
import sys

from . import config as config_mod
from .bench import compare_backends
from .errors import ConfigError, SolverError
from .harness import audit_run, run_baseline_continuous, run_scenario, sweep


def parse_grid(spec: str) -> dict[str, list]:
    """Parse "key=v1,v2;key2=w1" into typed value lists (N is integer)."""
    grid: dict[str, list] = {}
    if not spec.strip():
        return grid
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"grid entry {part!r} is not key=v1,v2,...")
        key, values = part.split("=", 1)
        key = key.strip()
        cast = int if key == "N" else float
        try:
            grid[key] = [cast(v.strip()) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"grid entry {part!r}: {exc}") from exc
        if not grid[key]:
            raise ConfigError(f"grid entry {part!r} lists no values")
    return grid


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="scenario config file")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--record-target", type=int, default=15000,
                     help="approximate number of trace rows to record")
    sub.add_argument("--backend", choices=("auto", "numba", "numpy"),
                     default=None, help="kernel lane override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stefan-etc",
        description="Event-triggered safe boundary control of a one-phase "
                    "melting plant: simulation, audits, sweeps.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run the event-triggered scenario")
    _add_common(p_run)

    p_base = subs.add_parser("baseline",
                             help="run the continuous-feedback comparator")
    _add_common(p_base)

    p_sweep = subs.add_parser("sweep", help="run a parameter grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True,
                         help="e.g. 'delta2=0.3,0.7;N=100,200'")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--record-target", type=int, default=15000)

    p_audit = subs.add_parser("audit", help="re-check a stored run")
    p_audit.add_argument("--trace", required=True, help="run directory")
    p_audit.add_argument("--energy-tol", type=float, default=1e-3,
                         help="relative energy-balance tolerance")
    for check in ("safe", "dwell", "energy", "decay"):
        p_audit.add_argument(f"--no-{check}", action="store_true",
                             help=f"disable the {check} check")

    p_bench = subs.add_parser("bench", help="compare kernel lanes")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--t-final", type=float, default=None,
                         help="override the horizon for timing")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            summary = run_scenario(args.config, args.out,
                                   record_target=args.record_target,
                                   backend=args.backend)
            _print_summary(summary)
            return 0
        if args.command == "baseline":
            summary = run_baseline_continuous(args.config, args.out,
                                              record_target=args.record_target,
                                              backend=args.backend)
            _print_summary(summary)
            return 0
        if args.command == "sweep":
            rows = sweep(args.config, parse_grid(args.grid), args.out,
                         jobs=args.jobs, record_target=args.record_target)
            failed = [r for r in rows if r.get("error")]
            print(f"sweep: {len(rows)} cells, {len(failed)} failed")
            for row in failed:
                print(f"  {row}")
            return 0
        if args.command == "audit":
            enabled = tuple(check for check in ("safe", "dwell", "energy", "decay")
                            if not getattr(args, f"no_{check}"))
            result = audit_run(args.trace, energy_tol_rel=args.energy_tol,
                               enabled=enabled)
            print(result)
            return 0 if result.passed else 1
        if args.command == "bench":
            cfg = config_mod.load(args.config)
            print(compare_backends(cfg, t_final=args.t_final).table())
            return 0
    except (ConfigError, SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


def _print_summary(summary) -> None:
    for key, value in summary.as_dict().items():
        print(f"{key} = {value}")


if __name__ == "__main__":
    sys.exit(main())

"""``composopt`` command line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict

from .. import __version__
from ..core import ParameterError, TrajectoryError
from ..certify import audit_pagm_rows, audit_scgm_rows, sampled_model_checks, validate_constants
from . import traces
from .config import ConfigError, config_from_mapping, load_config
from .registry import get_entry, maps_of, make_problem, registry_problems
from .runner import format_scaling_table, loglog_slopes, run_experiment, scaling_study

EXIT_AUDIT_FAIL = 1
EXIT_USAGE = 2


def _build_parser():
    ap = argparse.ArgumentParser(prog="composopt", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run trajectories, write CSV traces and an audit summary")
    run.add_argument("--config")
    run.add_argument("--algorithm", choices=("scgm", "pagm"))
    run.add_argument("--problem")
    for name in ("delta", "epsilon", "mu", "t", "H_max", "C", "C1"):
        run.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    for name in ("K", "d", "m", "seed", "trajectories"):
        run.add_argument(f"--{name}", dest=name, type=int)
    run.add_argument("--start", choices=("default", "origin", "random"))
    run.add_argument("--verify", action="store_true", default=None)
    run.add_argument("--out")

    audit = sub.add_parser("audit", help="re-audit a CSV trace using its JSON sidecar")
    audit.add_argument("--trace", required=True)

    sc = sub.add_parser("scaling", help="iteration counts against epsilon (log-log table)")
    sc.add_argument("--config", required=True)

    sub.add_parser("list-problems", help="list registry problems")

    val = sub.add_parser("validate", help="sample-check the declared constants of a problem")
    val.add_argument("--problem", required=True)
    val.add_argument("--samples", type=int, default=1000)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--d", type=int)
    val.add_argument("--m", type=int)
    return ap


_RUN_KEYS = ("algorithm", "problem", "delta", "epsilon", "mu", "t", "H_max", "C", "C1",
             "K", "d", "m", "seed", "trajectories", "start", "verify", "out")


def _cmd_run(args):
    cli = {k: getattr(args, k) for k in _RUN_KEYS if getattr(args, k) is not None}
    if args.config:
        cfg = load_config(args.config)
        if cli:
            data = {k: v for k, v in asdict(cfg).items() if v is not None}
            data.update(cli)
            cfg = config_from_mapping(data)
    else:
        cfg = config_from_mapping(cli)
    report = run_experiment(cfg)
    for t in report.trajectories:
        status = "PASS" if t["audit"]["passed"] else "FAIL"
        print(f"seed {t['seed']}: K={t['K']} tau={t['tau']} audit {status}  {t['trace']}")
        for c in t["audit"]["checks"]:
            if not c["passed"]:
                print(f"  FAIL {c['name']}: worst margin {c['worst_margin']:.3e}")
    print(f"summary: {report.summary_path}")
    return report.exit_code


def _cmd_audit(args):
    rows, meta = traces.read_trace(args.trace)
    if meta is None:
        print(f"missing sidecar {traces.sidecar_path(args.trace)}", file=sys.stderr)
        return EXIT_USAGE
    if meta["algorithm"] == "scgm":
        rep = audit_scgm_rows(rows, meta)
    else:
        rep = audit_pagm_rows(rows, meta)
        inst = make_problem(meta["problem"], meta.get("d"), meta.get("m"), meta.get("problem_seed", 0))
        rep.checks.extend(sampled_model_checks(inst.problem, meta["params"]["mu"], seed=meta["seed"]))
    print("\n".join(rep.lines()))
    return 0 if rep.passed else EXIT_AUDIT_FAIL


def _cmd_scaling(args):
    cfg = load_config(args.config)
    rows = scaling_study(cfg)
    print(format_scaling_table(rows))
    slopes = loglog_slopes(rows)
    print("# theoretical log-log slopes: " + ", ".join(f"{s:.6f}" for s in slopes))
    bad = [r for r in rows if not 0 < r.first_hit <= r.K_theory]
    return EXIT_AUDIT_FAIL if bad else 0


def _cmd_list(args):
    for e in registry_problems():
        print(f"{e.name:<16} {e.algorithm:<5} d={e.default_d} m={e.default_m}  {e.description}")
    return 0


def _cmd_validate(args):
    get_entry(args.problem)
    inst = make_problem(args.problem, args.d, args.m)
    ok = True
    for g in maps_of(inst.problem):
        r = validate_constants(g, args.samples, args.seed)
        ok &= r.passed
        print(f"{g.name}:")
        for k in ("L_g", "beta", "C_g"):
            print(f"  {k:<5} declared {r.declared[k]:.6g} observed {r.observed[k]:.6g} "
                  f"margin {r.margins[k]:.3e}")
        print(f"  jacobian finite-difference error {r.jacobian_fd_error:.3e}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else EXIT_AUDIT_FAIL


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {
        "run": _cmd_run,
        "audit": _cmd_audit,
        "scaling": _cmd_scaling,
        "list-problems": _cmd_list,
        "validate": _cmd_validate,
    }[args.command]
    try:
        return handler(args)
    except TrajectoryError as exc:
        print(f"trajectory aborted: {exc}", file=sys.stderr)
        return EXIT_AUDIT_FAIL
    except (ConfigError, ParameterError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

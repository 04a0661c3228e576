"""Command-line interface.

Subcommands:
    background  integrate the radial background and dump a 9-column CSV
    linear      manufactured-solution verification of the spectral solver
    solve       full nonlinear solve; writes field CSVs plus a report
    verify      recompute residuals for a solved state directory
    sweep       bisection sweeps (largest convergent sigma, or smallest |E0|)

Exit codes: 0 success, 1 validation failure, 2 solver failure, 64 usage.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import reports
from .background import (
    critical_entrance_field,
    integrate_background,
    positivity_weight,
    validate_inlet,
)
from .config import load_config
from .core import Grid
from .errors import ConfigError, NonConvergenceError, NozzleEPError
from .iteration import solve_problem
from .residuals import full_system_residual, supersonic_margin, vorticity_identity_residual
from .spectral import manufactured_verification
from .state import FlowState

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _fmt(x):
    return reports.format_value(x)


def _print_kv(data, stream=sys.stdout):
    for key, val in data.items():
        stream.write(f"{key} = {_fmt(val)}\n")


def cmd_background(cfg, args):
    gas, geo, inlet = cfg.gas(), cfg.geometry(), cfg.inlet()
    checks = validate_inlet(gas, inlet, geo)
    bg = integrate_background(gas, inlet, geo, cfg.Nr)
    h, mu_R = positivity_weight(bg, geo)
    if args.out:
        reports.write_background_csv(args.out, bg, h)
    summary = dict(checks.as_dict())
    summary["mass_flux_drift"] = bg.mass_flux_drift()
    summary["bernoulli_defect"] = bg.bernoulli_defect()
    summary["Msq_monotone"] = bool(np.all(np.diff(bg.Msq) > 0))
    summary["mu_R"] = mu_R
    _print_kv(summary)
    return EXIT_OK if checks.all_ok else EXIT_VALIDATION


def cmd_linear(cfg, args):
    if not args.manufactured:
        raise _UsageError("linear requires --manufactured")
    rows = manufactured_verification(
        cfg.gas(), cfg.inlet(), cfg.geometry(), m=cfg.m
    )
    sys.stdout.write("Nr,m,h1_error,observed_order,energy_ratio\n")
    for row in rows:
        order = "" if row["order"] is None else _fmt(row["order"])
        sys.stdout.write(
            f"{row['Nr']},{cfg.m},{_fmt(row['h1_error'])},{order},"
            f"{_fmt(row['energy_ratio'])}\n"
        )
    orders = [r["order"] for r in rows if r["order"] is not None]
    return EXIT_OK if orders and min(orders) >= 1.8 else EXIT_SOLVER


def cmd_solve(cfg, args):
    gas, geo, inlet = cfg.gas(), cfg.geometry(), cfg.inlet()
    grid, basis = cfg.grid(), cfg.basis()
    bg = integrate_background(gas, inlet, geo, grid.Nr)
    bd = cfg.boundary_data(bg, grid)
    flow, report = solve_problem(
        gas, geo, inlet, bd, grid, basis, cfg.solver_options(), bg=bg
    )
    data = report.as_dict()
    if args.out:
        reports.write_state_dir(args.out, flow, data)
    _print_kv(data)
    return EXIT_OK


def cmd_verify(cfg, args):
    gas, geo = cfg.gas(), cfg.geometry()
    r_nodes, theta_nodes, fields = reports.read_state_dir(args.state_dir)
    grid = Grid(r_nodes=r_nodes, theta_nodes=theta_nodes)
    flow = FlowState(grid=grid, **fields).with_density(gas)
    res = full_system_residual(flow, gas, geo)
    out = {f"residual_{k}": v for k, v in res.items()}
    out["vorticity_residual"] = vorticity_identity_residual(flow, gas, geo)
    out["kappa"] = supersonic_margin(flow, gas)
    report_path = os.path.join(args.state_dir, "report.txt")
    if os.path.exists(report_path):
        recorded = reports.read_report(report_path)
        worst = 0.0
        for key, val in out.items():
            if key in recorded:
                ref = float(recorded[key])
                worst = max(worst, abs(val - ref) / max(1.0, abs(ref)))
        out["max_report_mismatch"] = worst
    _print_kv(out)
    return EXIT_OK


def _converges(cfg, factor):
    scaled = cfg.amplitudes_scaled(factor)
    gas, geo, inlet = scaled.gas(), scaled.geometry(), scaled.inlet()
    grid, basis = scaled.grid(), scaled.basis()
    try:
        bg = integrate_background(gas, inlet, geo, grid.Nr)
        bd = scaled.boundary_data(bg, grid)
        solve_problem(gas, geo, inlet, bd, grid, basis, scaled.solver_options(), bg=bg)
        return True
    except NozzleEPError:
        return False


def cmd_sweep(cfg, args):
    if args.param == "E0":
        crit = critical_entrance_field(
            cfg.gas(), cfg.inlet(), cfg.geometry(), Nr=cfg.Nr
        )
        _print_kv({"critical_E0_magnitude": crit})
        return EXIT_OK

    # sigma sweep: geometric ladder (optionally concurrent), then bisection
    threads = max(1, int(os.environ.get("NOZZLE_EP_THREADS", "1")))
    ladder = [2.0**k for k in range(args.ladder_lo, args.ladder_hi + 1)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(lambda f: _converges(cfg, f), ladder))
    else:
        flags = [_converges(cfg, f) for f in ladder]
    if not any(flags):
        _print_kv({"largest_convergent_factor": 0.0})
        return EXIT_SOLVER
    if all(flags):
        _print_kv({"largest_convergent_factor": ladder[-1], "saturated": True})
        return EXIT_OK
    last_ok = max(i for i, ok in enumerate(flags) if ok)
    lo, hi = ladder[last_ok], ladder[min(last_ok + 1, len(ladder) - 1)]
    for _ in range(args.bisections):
        mid = 0.5 * (lo + hi)
        if _converges(cfg, mid):
            lo = mid
        else:
            hi = mid
    _print_kv({"largest_convergent_factor": lo})
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="nozzle-ep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("background", help="integrate the radial background")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="CSV output path")

    p = sub.add_parser("linear", help="manufactured-solution verification")
    p.add_argument("--config", required=True)
    p.add_argument("--manufactured", action="store_true")

    p = sub.add_parser("solve", help="full nonlinear solve")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("verify", help="recompute residuals for a state directory")
    p.add_argument("state_dir")
    p.add_argument("--config", required=True)

    p = sub.add_parser("sweep", help="bisection sweeps")
    p.add_argument("--config", required=True)
    p.add_argument("--param", choices=("sigma", "E0"), default="sigma")
    p.add_argument("--ladder-lo", type=int, default=-2)
    p.add_argument("--ladder-hi", type=int, default=6)
    p.add_argument("--bisections", type=int, default=8)

    return parser


COMMANDS = {
    "background": cmd_background,
    "linear": cmd_linear,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"nozzle-ep: {exc}\n")
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except _UsageError as exc:
        sys.stderr.write(f"nozzle-ep: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        sys.stderr.write(f"nozzle-ep: validation error: {exc}\n")
        return EXIT_VALIDATION
    except NonConvergenceError as exc:
        sys.stderr.write(f"nozzle-ep: solver failure: {exc}\n")
        return EXIT_SOLVER
    except NozzleEPError as exc:
        sys.stderr.write(f"nozzle-ep: error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

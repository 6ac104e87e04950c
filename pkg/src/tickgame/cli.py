"""Command-line interface: solve, sweep, verify.

Every command takes --config <path> and --out <dir> and writes its results
as CSV/JSON files with a stable byte format: 17 significant digits, '.'
decimal separator, LF line endings, header row.  Exit status contract:
0 all good / all checks pass, 2 solver non-convergence, 3 invariant or
check failure, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .equilibrium import (
    crossing_size,
    solve_equilibrium,
    stopping_region,
    tick_sweep,
)
from .errors import (
    ConvergenceError,
    InvalidParamsError,
    InvariantViolationError,
    SimulationTruncationError,
)
from .geometric import _quote_callables, fundamental_solutions, particular_solution
from .periodic import discrete_derivative
from .verify import run_verification

__all__ = ["main", "cmd_solve", "cmd_sweep", "cmd_verify"]

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INVARIANT = 3
EXIT_CONFIG = 4


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    newline="\n")


def _measured_w(params, eq) -> dict:
    out = {
        "w_v_ask": eq.diagnostics["w_ask"],
        "w_v_bid": eq.diagnostics["w_bid"],
    }
    c_fn, g_ask, g_bid, splits = _quote_callables(
        params, eq.quote_ask, eq.quote_bid
    )
    pair = fundamental_solutions(params, c_fn, splits=splits)
    grid = np.linspace(0.0, 1.0, 4 * params.grid_n + 1)
    for side, g_fn in (("ask", g_ask), ("bid", g_bid)):
        part = particular_solution(params, pair, g_fn, splits=splits)
        out[f"w_f_{side}"] = float(np.max(np.abs(part.deriv(grid) - 1.0)))
    return out


def _equilibrium_rows(params, eq):
    n = params.grid_n
    x = np.arange(n) / n
    qa = eq.quote_ask.eval(x)
    qb = eq.quote_bid.eval(x)
    stop = np.zeros(n, dtype=bool)
    stop[eq.stopping_nodes] = True
    for j in range(n):
        yield (
            x[j], eq.v_ask.samples[j], eq.v_bid.samples[j],
            int(qa[j]), int(qb[j]), bool(stop[j]),
        )


def cmd_solve(config_path, out_dir) -> int:
    cfg = parse_config(config_path)
    params = cfg.model_params()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    diagnostics = {"config": cfg.echo(), "reward_form": params.reward_form,
                   "reward_form_note":
                       "locked default g_dt; arbitrated by the montecarlo "
                       "suite (see verify.json from the verify command)"}
    try:
        eq = solve_equilibrium(params, update=cfg["equilibrium.update"])
    except ConvergenceError as exc:
        diagnostics["error"] = str(exc)
        diagnostics["residual_history"] = list(exc.history)
        _write_json(out / "diagnostics.json", diagnostics)
        return EXIT_NO_CONVERGENCE
    except InvariantViolationError as exc:
        diagnostics["error"] = str(exc)
        diagnostics["violated_property"] = exc.prop
        diagnostics["violated_node"] = exc.node
        _write_json(out / "diagnostics.json", diagnostics)
        return EXIT_INVARIANT

    _write_csv(
        out / "equilibrium.csv",
        ["x", "v_ask", "v_bid", "quote_ask", "quote_bid", "stopping"],
        _equilibrium_rows(params, eq),
    )
    _write_csv(
        out / "quotes.csv",
        ["side", "level", "breakpoint"],
        [("ask", eq.quote_ask.level, eq.quote_ask.breakpoint),
         ("bid", eq.quote_bid.level, eq.quote_bid.breakpoint)],
    )
    diagnostics.update(
        outer_iters=eq.outer_iters,
        residual=eq.residual,
        residual_history=eq.diagnostics["residual_history"],
        inner_sweeps=eq.diagnostics["inner_sweeps"],
        damped=eq.diagnostics["damped"],
        update=eq.diagnostics["update"],
        crossing_size=crossing_size(eq),
        stopping_nodes=[int(j) for j in eq.stopping_nodes],
        stopping_region=[[int(a), int(b)] for a, b in stopping_region(eq)],
        invariants_passed=True,
        measured_w=_measured_w(params, eq),
        min_value_slope=float(
            min(np.min(discrete_derivative(eq.v_ask)),
                np.min(discrete_derivative(eq.v_bid)))
        ),
    )
    _write_json(out / "diagnostics.json", diagnostics)
    return EXIT_OK


def cmd_sweep(config_path, out_dir) -> int:
    cfg = parse_config(config_path)
    params = cfg.model_params()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = tick_sweep(params, cfg["sweep.ticks"])
    rows = [
        (result.tick_sizes[i],
         result.inefficiency[i] if result.converged[i] else float("nan"),
         bool(result.converged[i]))
        for i in range(len(result.tick_sizes))
    ]
    _write_csv(out / "inefficiency.csv", ["tick_size", "inefficiency", "converged"],
               rows)
    return EXIT_OK if bool(np.all(result.converged)) else EXIT_NO_CONVERGENCE


def cmd_verify(config_path, out_dir) -> int:
    cfg = parse_config(config_path)
    params = cfg.model_params()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_verification(
        params,
        cfg_fa=cfg.sim_config(n_paths=cfg["verify.fa_paths"]),
        cfg_payoff=cfg.sim_config(n_paths=cfg["verify.payoff_paths"]),
        checks=cfg["verify.checks"],
        probes=cfg["verify.probes"],
    )
    report["config"] = cfg.echo()
    _write_json(out / "verify.json", report)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tickgame",
        description="Equilibrium solver for the tick-constrained "
                    "buyer-seller quoting and stopping game.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve the equilibrium and export value/quote curves"),
        ("sweep", "inefficiency as a function of tick size"),
        ("verify", "cross-check the solver against the analytic and "
                   "Monte-Carlo oracles"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to key=value config")
        p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}
    try:
        return handler[args.command](args.config, args.out)
    except (ConfigError, InvalidParamsError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, SimulationTruncationError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

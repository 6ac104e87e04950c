"""Cross-oracle verification: the value-iteration solver, the analytic
concave-majorant route, and the game simulator check each other.

Each check returns a plain dict (values, tolerance, pass flag) so the CLI
can serialize reports directly.  The reward-form arbitration solves the
model under both readings of the Bellman reward term and accepts the one
whose values the simulator reproduces; the stopping-free comparison is the
discriminating half (the readings differ at leading order there), the
equilibrium comparison the consistency half.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .dp import solve_stopping
from .equilibrium import Equilibrium, solve_equilibrium
from .errors import ConvergenceError, InvariantViolationError
from .geometric import (
    _quote_callables,
    fundamental_solutions,
    particular_solution,
    value_via_majorant,
)
from .model import ModelParams
from .montecarlo import SimConfig, estimate_fa, simulate_payoffs
from .periodic import ShiftGridFn, identity_grid, sup_diff

__all__ = [
    "check_dp_vs_geometric",
    "check_mc_fa",
    "check_mc_payoff",
    "check_reward_form",
    "run_verification",
]

DP_GEO_TOL = 0.05
MC_SIGMA_BAND = 3.0


def check_dp_vs_geometric(params: ModelParams, eq: Equilibrium) -> dict:
    """Sup-norm agreement of the two deterministic routes at the equilibrium."""
    diffs = {}
    for side in ("ask", "bid"):
        barrier = eq.v_bid if side == "ask" else eq.v_ask
        v_geo = value_via_majorant(params, side, eq.quote_ask, eq.quote_bid, barrier)
        v_dp = eq.v_ask if side == "ask" else eq.v_bid
        diffs[side] = sup_diff(v_geo, v_dp)
    worst = max(diffs.values())
    return {
        "name": "dp_vs_geometric",
        "sup_diff_ask": diffs["ask"],
        "sup_diff_bid": diffs["bid"],
        "tolerance": DP_GEO_TOL,
        "passed": bool(worst <= DP_GEO_TOL),
    }


def check_mc_fa(params: ModelParams, eq: Equilibrium, cfg: SimConfig,
                probes=(0.1, 0.3, 0.5, 0.7, 0.9)) -> dict:
    """Analytic stopping-free value against the unbiased killed-path estimate."""
    c_fn, g_ask, _, splits = _quote_callables(params, eq.quote_ask, eq.quote_bid)
    pair = fundamental_solutions(params, c_fn, splits=splits)
    fa = particular_solution(params, pair, g_ask, splits=splits)
    rows = []
    ok = True
    for i, x0 in enumerate(probes):
        est = estimate_fa(
            params, eq.quote_ask, eq.quote_bid,
            replace(cfg, x0=float(x0), seed=cfg.seed + i),
        )
        z = (fa.value(x0) - est.mean) / est.std_error
        rows.append(
            {"x0": float(x0), "analytic": fa.value(x0), "mc_mean": est.mean,
             "mc_se": est.std_error, "z": z}
        )
        ok = ok and abs(z) <= MC_SIGMA_BAND
    return {
        "name": "mc_fa",
        "probes": rows,
        "tolerance_sigma": MC_SIGMA_BAND,
        "passed": bool(ok),
    }


def check_mc_payoff(params: ModelParams, eq: Equilibrium, cfg: SimConfig,
                    probes=(0.25, 0.5, 0.75)) -> dict:
    """Equilibrium values against the raw-game simulation at probe starts."""
    rows = []
    ok = True
    for i, x0 in enumerate(probes):
        est_a, est_b = simulate_payoffs(
            params, eq.quote_ask, eq.quote_bid, eq.v_ask, eq.v_bid,
            replace(cfg, x0=float(x0), seed=cfg.seed + i),
        )
        za = (est_a.mean - eq.v_ask.eval(x0)) / est_a.std_error
        zb = (est_b.mean - eq.v_bid.eval(x0)) / est_b.std_error
        rows.append(
            {"x0": float(x0),
             "v_ask": eq.v_ask.eval(x0), "mc_ask": est_a.mean,
             "se_ask": est_a.std_error, "z_ask": za,
             "v_bid": eq.v_bid.eval(x0), "mc_bid": est_b.mean,
             "se_bid": est_b.std_error, "z_bid": zb}
        )
        ok = ok and abs(za) <= MC_SIGMA_BAND and abs(zb) <= MC_SIGMA_BAND
    return {
        "name": "mc_payoff",
        "probes": rows,
        "tolerance_sigma": MC_SIGMA_BAND,
        "passed": bool(ok),
    }


def _reward_form_trial(params: ModelParams, cfg_free: SimConfig,
                       cfg_eq: SimConfig, probes) -> dict:
    """Both halves of the arbitration for one reward-form reading."""
    try:
        eq = solve_equilibrium(params)
    except (ConvergenceError, InvariantViolationError) as exc:
        return {"converged": False, "reason": str(exc), "passed": False}
    # the stopping-free value relaxes over a much longer horizon than the
    # obstructed one, so its chain error is larger; a doubled grid keeps the
    # discretization bias well inside the noise band
    params_fine = replace(params, grid_n=2 * params.grid_n, max_inner_iters=0)
    low = ShiftGridFn(
        identity_grid(params_fine.grid_n).samples - 10.0, "shift"
    )
    v_free, _ = solve_stopping(
        params_fine, "ask", eq.quote_ask, eq.quote_bid, barrier=low
    )
    rows = []
    ok = True
    for i, x0 in enumerate(probes):
        est = estimate_fa(
            params, eq.quote_ask, eq.quote_bid,
            replace(cfg_free, x0=float(x0), seed=cfg_free.seed + i),
        )
        z = (v_free.eval(x0) - est.mean) / est.std_error
        rows.append({"x0": float(x0), "dp_free": v_free.eval(x0),
                     "mc_mean": est.mean, "mc_se": est.std_error, "z": z})
        ok = ok and abs(z) <= MC_SIGMA_BAND
    x0 = cfg_eq.x0
    est_a, _ = simulate_payoffs(
        params, eq.quote_ask, eq.quote_bid, eq.v_ask, eq.v_bid, cfg_eq
    )
    z_eq = (est_a.mean - eq.v_ask.eval(x0)) / est_a.std_error
    ok = ok and abs(z_eq) <= MC_SIGMA_BAND
    return {
        "converged": True,
        "stopping_free": rows,
        "equilibrium_z": z_eq,
        "passed": bool(ok),
    }


def check_reward_form(params: ModelParams, cfg: SimConfig,
                      probes=(0.25, 0.5, 0.75),
                      cfg_free: SimConfig | None = None) -> dict:
    """Arbitrate the two readings of the Bellman reward term.

    A reading passes when the simulator reproduces both its stopping-free
    value (where the readings separate by far more than the noise band) and
    its equilibrium value.  The check passes when exactly one reading does,
    and reports it as the verdict.
    """
    trials = {}
    for form in ("g_dt", "g_over_c"):
        trials[form] = _reward_form_trial(
            replace(params, reward_form=form, max_inner_iters=0),
            cfg_free if cfg_free is not None else cfg, cfg, probes,
        )
    winners = [f for f, t in trials.items() if t["passed"]]
    return {
        "name": "reward_form",
        "trials": trials,
        "verdict": winners[0] if len(winners) == 1 else None,
        "passed": bool(len(winners) == 1),
    }


def run_verification(params: ModelParams, cfg_fa: SimConfig,
                     cfg_payoff: SimConfig, checks, probes) -> dict:
    """Run the requested checks against a fresh equilibrium solve."""
    report = {"checks": [], "passed": True}
    needs_eq = any(c in checks for c in ("dp_vs_geometric", "mc_fa", "mc_payoff"))
    eq = solve_equilibrium(params) if needs_eq else None
    for name in checks:
        if name == "dp_vs_geometric":
            res = check_dp_vs_geometric(params, eq)
        elif name == "mc_fa":
            res = check_mc_fa(params, eq, cfg_fa)
        elif name == "mc_payoff":
            res = check_mc_payoff(params, eq, cfg_payoff, probes=probes)
        elif name == "reward_form":
            res = check_reward_form(params, cfg_payoff, probes=probes,
                                    cfg_free=cfg_fa)
        else:
            raise ValueError(f"unknown check {name!r}")
        report["checks"].append(res)
        report["passed"] = report["passed"] and res["passed"]
    return report

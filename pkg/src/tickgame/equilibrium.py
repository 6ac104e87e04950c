"""Outer fixed-point iteration coupling the two agents, plus equilibrium
diagnostics: stopping region, crossing size, and the tick-size sweep.

One outer round (Gauss-Seidel order, matching the way the scheme is usually
run): solve the seller's stopping problem against the buyer's value, refresh
the ask quote, solve the buyer against the fresh seller value, refresh the
bid quote.  Iterate until the joint sup-norm change of the value functions
drops below the outer tolerance.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dp import feedback_ask, feedback_bid, solve_stopping
from .errors import ConvergenceError, InvariantViolationError
from .model import ModelParams, uniform_noise
from .periodic import (
    QuoteFn,
    ShiftGridFn,
    discrete_derivative,
    identity_grid,
    snap_ceil,
    snap_floor,
    sup_diff,
)

__all__ = [
    "Equilibrium",
    "SweepResult",
    "solve_equilibrium",
    "crossing_size",
    "stopping_region",
    "tick_sweep",
    "validate_equilibrium",
    "worker_count",
]

# Nodes where the two value functions agree within this are stopping nodes.
STOP_NODE_TOL = 1e-6
# Consecutive non-improving outer rounds before damping kicks in.
_STALL_LIMIT = 10


def worker_count() -> int:
    """Worker cap from TICKGAME_THREADS (>=1); defaults to the CPU count."""
    raw = os.environ.get("TICKGAME_THREADS", "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class Equilibrium:
    """Converged solver output bundle."""

    v_ask: ShiftGridFn
    v_bid: ShiftGridFn
    quote_ask: QuoteFn
    quote_bid: QuoteFn
    stopping_nodes: np.ndarray
    outer_iters: int
    residual: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    """Inefficiency (in original price units) per tick size."""

    tick_sizes: np.ndarray
    inefficiency: np.ndarray
    converged: np.ndarray


def _initial_state(params: ModelParams):
    n = params.grid_n
    ident = identity_grid(n)
    quote_ask = QuoteFn(level=0, breakpoint=1.0 / n)  # ceil(x) pattern
    quote_bid = QuoteFn(level=0, breakpoint=1.0)      # floor(x) pattern
    return ident, ident, quote_ask, quote_bid


def _outer_step(params: ModelParams, state, update: str):
    """One full coupling round; returns the new state and inner sweep count."""
    v_ask, v_bid, p_a, p_b = state
    sweeps = 0
    if update == "gauss_seidel":
        v_ask_new, it_a = solve_stopping(
            params, "ask", p_a, p_b, barrier=v_bid, v_init=v_ask
        )
        p_a_new = feedback_ask(params, v_ask_new)
        v_bid_new, it_b = solve_stopping(
            params, "bid", p_a_new, p_b, barrier=v_ask_new, v_init=v_bid
        )
        p_b_new = feedback_bid(params, v_bid_new)
    elif update == "jacobi":
        v_ask_new, it_a = solve_stopping(
            params, "ask", p_a, p_b, barrier=v_bid, v_init=v_ask
        )
        v_bid_new, it_b = solve_stopping(
            params, "bid", p_a, p_b, barrier=v_ask, v_init=v_bid
        )
        p_a_new = feedback_ask(params, v_ask_new)
        p_b_new = feedback_bid(params, v_bid_new)
    else:
        raise ValueError("update must be 'gauss_seidel' or 'jacobi'")
    sweeps += it_a + it_b
    return (v_ask_new, v_bid_new, p_a_new, p_b_new), sweeps


def solve_equilibrium(params: ModelParams, update: str = "gauss_seidel",
                      validate: bool = True) -> Equilibrium:
    """Run the alternating scheme to a joint fixed point.

    Raises:
        ConvergenceError: outer cap reached; the residual history is attached.
        InvariantViolationError: the converged bundle violates a structural
            equilibrium property (the bundle rides along on the exception).
    """
    n = params.grid_n
    state = _initial_state(params)
    history = []
    best = np.inf
    stall = 0
    damped = False
    total_sweeps = 0
    residual = np.inf
    for outer in range(1, params.max_outer_iters + 1):
        new_state, sweeps = _outer_step(params, state, update)
        total_sweeps += sweeps
        v_ask_new, v_bid_new, p_a_new, p_b_new = new_state
        residual = max(
            sup_diff(v_ask_new, state[0]), sup_diff(v_bid_new, state[1])
        )
        quotes_moved = (p_a_new != state[2]) or (p_b_new != state[3])
        history.append(residual)
        if damped:
            v_ask_new = v_ask_new.with_samples(
                0.5 * (v_ask_new.samples + state[0].samples)
            )
            v_bid_new = v_bid_new.with_samples(
                0.5 * (v_bid_new.samples + state[1].samples)
            )
        state = (v_ask_new, v_bid_new, p_a_new, p_b_new)
        if residual <= params.tol_outer and not quotes_moved:
            break
        if residual < best - 1e-15:
            best = residual
            stall = 0
        else:
            stall += 1
            if stall >= _STALL_LIMIT and not damped:
                damped = True
                stall = 0
    else:
        raise ConvergenceError(
            f"outer iteration did not converge in {params.max_outer_iters} rounds "
            f"(residual {residual:.3e})",
            residual=residual,
            history=history,
        )

    v_ask, v_bid, p_a, p_b = state
    stopping = np.nonzero(v_bid.samples - v_ask.samples <= STOP_NODE_TOL)[0]
    eq = Equilibrium(
        v_ask=v_ask,
        v_bid=v_bid,
        quote_ask=p_a,
        quote_bid=p_b,
        stopping_nodes=stopping,
        outer_iters=outer,
        residual=residual,
        diagnostics={
            "residual_history": history,
            "damped": damped,
            "inner_sweeps": total_sweeps,
            "w_ask": float(np.max(np.abs(discrete_derivative(v_ask) - 1.0))),
            "w_bid": float(np.max(np.abs(discrete_derivative(v_bid) - 1.0))),
            "update": update,
        },
    )
    if validate:
        validate_equilibrium(params, eq)
    return eq


def crossing_size(eq: Equilibrium) -> float:
    """Largest value crossing max(v_bid - v_ask), clamped at zero."""
    return float(max(0.0, np.max(eq.v_bid.samples - eq.v_ask.samples)))


def stopping_region(eq: Equilibrium, tol: float = STOP_NODE_TOL):
    """Maximal runs of nodes where the game stops: v_ask = floor(v_bid) within tol.

    v_ask >= floor(v_bid) holds identically wherever no integer sits strictly
    inside the value gap, so the stopping set is where equality is attained.
    Returns a list of (start, end) inclusive node-index pairs; a run crossing
    the period seam wraps (start > end).  The region is 1-periodic by
    construction.
    """
    va = eq.v_ask.samples
    vb = eq.v_bid.samples
    mask = np.abs(va - snap_floor(vb)) <= tol
    if not mask.any():
        return []
    if mask.all():
        return [(0, len(mask) - 1)]
    idx = np.nonzero(mask)[0]
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = [idx[0]] + [idx[b + 1] for b in breaks]
    ends = [idx[b] for b in breaks] + [idx[-1]]
    runs = list(zip(starts, ends))
    # merge across the seam
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == len(mask) - 1:
        first = runs.pop(0)
        last = runs.pop()
        runs.insert(0, (last[0], first[1]))
    return runs


def _rescaled_params(params: ModelParams, tick: float) -> ModelParams:
    """Re-express the model in units of the given tick size.

    All tick-denominated quantities scale by 1/tick (noise halfwidth and
    volatility); rates (lam, c_l) and the dimensionless impact alpha do not.
    """
    if params.noise.kind != "uniform":
        raise InvariantViolationError(
            "tick sweep rescaling is only wired for the uniform noise family"
        )
    return replace(
        params,
        sigma=params.sigma / tick,
        noise=uniform_noise(params.noise.halfwidth / tick),
        max_inner_iters=0,
    )


def tick_sweep(params: ModelParams, ticks) -> SweepResult:
    """Solve the rescaled model per tick size; report inefficiency in price units.

    Entries run independently (thread pool capped by TICKGAME_THREADS); a
    failed entry is flagged instead of aborting the sweep.
    """
    ticks = np.sort(np.asarray(list(ticks), dtype=float))
    if np.any(ticks <= 0):
        raise ValueError("tick sizes must be positive")

    def run_one(tick):
        try:
            eq = solve_equilibrium(_rescaled_params(params, tick))
            return tick * crossing_size(eq), True
        except (ConvergenceError, InvariantViolationError):
            return np.nan, False

    workers = min(len(ticks), worker_count())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, ticks))
    else:
        results = [run_one(t) for t in ticks]
    ineff = np.array([r[0] for r in results])
    ok = np.array([r[1] for r in results])
    return SweepResult(tick_sizes=ticks, inefficiency=ineff, converged=ok)


def validate_equilibrium(params: ModelParams, eq: Equilibrium) -> None:
    """Check every structural property of a converged bundle.

    Raises InvariantViolationError naming the property and the first
    offending node.
    """
    n = params.grid_n
    x = np.arange(n) / n
    va = eq.v_ask.samples
    vb = eq.v_bid.samples

    def fail(prop, node, msg):
        raise InvariantViolationError(
            f"equilibrium invariant '{prop}' failed at node {node}: {msg}",
            prop=prop,
            node=int(node),
        )

    band = params.quote_band + 1.0 / n
    for name, v in (("v_ask", va), ("v_bid", vb)):
        d = discrete_derivative(eq.v_ask if name == "v_ask" else eq.v_bid)
        j = int(np.argmin(d))
        if d[j] <= 0:
            fail(f"{name}_strictly_increasing", j, f"derivative {d[j]:.3e}")
        dev = np.abs(v - x)
        j = int(np.argmax(dev))
        if dev[j] > band:
            fail(f"{name}_close_to_x", j, f"|v-x|={dev[j]:.3f} > {band:.3f}")

    gap = va - vb
    j = int(np.argmax(gap))
    if gap[j] > STOP_NODE_TOL:
        fail("values_cross", j, f"v_ask exceeds v_bid by {gap[j]:.3e}")

    for j in eq.stopping_nodes:
        common = 0.5 * (va[j] + vb[j])
        if abs(common - round(common)) > STOP_NODE_TOL:
            fail("stopping_value_integer", j, f"common value {common!r}")

    # no integer strictly inside (v_ask, v_bid) away from stopping nodes
    lowest_above = snap_ceil(va)
    strictly_inside = (lowest_above - va > STOP_NODE_TOL) & (
        vb - lowest_above > STOP_NODE_TOL
    )
    if strictly_inside.any():
        j = int(np.nonzero(strictly_inside)[0][0])
        fail("no_interior_integer", j, f"integer {lowest_above[j]} in gap")

    qa = eq.quote_ask.eval(x)
    qb = eq.quote_bid.eval(x)
    j = int(np.argmin(qa - qb))
    if qa[j] < qb[j]:
        fail("quote_ask_above_bid", j, f"{qa[j]} < {qb[j]}")
    j = int(np.argmin(qa - va))
    if qa[j] < va[j] - STOP_NODE_TOL:
        fail("ask_quote_above_value", j, f"{qa[j]} < {va[j]}")
    j = int(np.argmax(qb - vb))
    if qb[j] > vb[j] + STOP_NODE_TOL:
        fail("bid_quote_below_value", j, f"{qb[j]} > {vb[j]}")

"""Markov-chain value iteration for each agent's stopping problem, plus the
integer feedback-quote operators.

The diffusion is approximated by a symmetric random walk with spatial step
h = 1/N and time step dt = h^2/sigma^2.  One Bellman sweep applies

    V(x) <- max[ stop(x), (V(x-h) + V(x+h)) / (2 (1 + c(x) dt)) + r(x) ]

(min and the ceiling reward on the bid side), where ``stop`` is the rounded
barrier and ``r`` the per-step reward increment.  Two readings of the reward
increment are supported: "g_dt" uses g*dt/(1+c*dt), which matches the
continuous-time objective of discounting at rate c while collecting g per
unit time; "g_over_c" uses g*c*dt/(1+c*dt).  The Monte-Carlo oracle
arbitrates between them; "g_dt" is the locked default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidParamsError, NonMonotoneQuoteError
from .model import (
    ModelParams,
    admissible_ask_set,
    admissible_bid_set,
    intensity,
    reward_ask,
    reward_bid,
)
from .periodic import QuoteFn, ShiftGridFn, snap_ceil, snap_floor

__all__ = [
    "ChainParams",
    "bellman_ask",
    "bellman_bid",
    "solve_stopping",
    "feedback_ask",
    "feedback_bid",
]

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco if not (args and callable(args[0])) else args[0]


@dataclass(frozen=True)
class ChainParams:
    """Discretization steps of the approximating random walk."""

    h: float
    dt: float

    @staticmethod
    def from_model(params: ModelParams) -> "ChainParams":
        h = 1.0 / params.grid_n
        dt = h * h / params.sigma**2
        if dt * params.c_u >= 1.0:
            raise InvalidParamsError(
                "time step too coarse: need dt * 2*lam < 1 for a valid discount"
            )
        return ChainParams(h=h, dt=dt)


def _node_coefficients(params: ModelParams, p_a: QuoteFn, p_b: QuoteFn):
    """Per-node averaging weight and reward increment for one sweep."""
    n = params.grid_n
    chain = ChainParams.from_model(params)
    x = np.arange(n) / n
    pa = p_a.eval(x)
    pb = p_b.eval(x)
    c = intensity(params, pa, pb, x)
    g = np.stack(
        [reward_ask(params, pa, pb, x), reward_bid(params, pa, pb, x)]
    )
    denom = 1.0 + c * chain.dt
    wavg = 0.5 / denom
    if params.reward_form == "g_dt":
        radd = g * chain.dt / denom
    else:  # literal "g_over_c" reading
        radd = g * c * chain.dt / denom
    return wavg, radd[0], radd[1], c


def _check_quote_admissible(params: ModelParams, p_a: QuoteFn, p_b: QuoteFn):
    n = params.grid_n
    x = np.arange(n) / n
    thresh = params.c_l / (2.0 * params.lam)
    cdf = params.noise.cdf
    if np.any((1.0 - cdf(p_a.eval(x) - x)) < thresh - 1e-12):
        raise InvalidParamsError("ask quote leaves the admissible set")
    if np.any(cdf(p_b.eval(x) - x) < thresh - 1e-12):
        raise InvalidParamsError("bid quote leaves the admissible set")


def _sweep_once(v: np.ndarray, stop: np.ndarray, wavg: np.ndarray,
                radd: np.ndarray, is_max: bool,
                offset: float = 1.0) -> np.ndarray:
    """One synchronous Bellman sweep; offset is the per-period gain of the
    value class (1 for shift-mode values, 0 for periodic ones)."""
    left = np.empty_like(v)
    right = np.empty_like(v)
    left[0] = v[-1] - offset
    left[1:] = v[:-1]
    right[:-1] = v[1:]
    right[-1] = v[0] + offset
    cont = wavg * (left + right) + radd
    return np.maximum(stop, cont) if is_max else np.minimum(stop, cont)


@njit(cache=True, nogil=True)
def _vi_kernel(v0, stop, wavg, radd, is_max, tol, max_iters,
               offset):  # pragma: no cover
    n = v0.size
    v = v0.copy()
    vn = np.empty(n)
    diff = np.inf
    it = 0
    while it < max_iters:
        it += 1
        diff = 0.0
        for j in range(n):
            lo = v[n - 1] - offset if j == 0 else v[j - 1]
            hi = v[0] + offset if j == n - 1 else v[j + 1]
            cont = wavg[j] * (lo + hi) + radd[j]
            if is_max:
                nv = stop[j] if stop[j] > cont else cont
            else:
                nv = stop[j] if stop[j] < cont else cont
            d = abs(nv - v[j])
            if d > diff:
                diff = d
            vn[j] = nv
        tmp = v
        v = vn
        vn = tmp
        if diff <= tol:
            break
    return v, it, diff


def _vi_numpy(v0, stop, wavg, radd, is_max, tol, max_iters, offset):
    v = v0.copy()
    diff = np.inf
    it = 0
    while it < max_iters:
        it += 1
        vn = _sweep_once(v, stop, wavg, radd, is_max, offset)
        diff = float(np.max(np.abs(vn - v)))
        v = vn
        if diff <= tol:
            break
    return v, it, diff


def _stop_reward(side: str, barrier: ShiftGridFn, n: int) -> np.ndarray:
    vals = barrier.eval(np.arange(n) / n)
    return snap_floor(vals) if side == "ask" else snap_ceil(vals)


def bellman_ask(params: ModelParams, v: ShiftGridFn, p_a: QuoteFn, p_b: QuoteFn,
                barrier: ShiftGridFn) -> ShiftGridFn:
    """One synchronous sweep of the seller's Bellman operator."""
    wavg, ra, _, _ = _node_coefficients(params, p_a, p_b)
    stop = _stop_reward("ask", barrier, params.grid_n)
    return v.with_samples(_sweep_once(v.samples, stop, wavg, ra, True))


def bellman_bid(params: ModelParams, v: ShiftGridFn, p_a: QuoteFn, p_b: QuoteFn,
                barrier: ShiftGridFn) -> ShiftGridFn:
    """One synchronous sweep of the buyer's Bellman operator (min / ceiling)."""
    wavg, _, rb, _ = _node_coefficients(params, p_a, p_b)
    stop = _stop_reward("bid", barrier, params.grid_n)
    return v.with_samples(_sweep_once(v.samples, stop, wavg, rb, False))


def _solve_arrays(v0, stop, wavg, radd, is_max, tol, max_iters,
                  offset: float = 1.0):
    if _HAVE_NUMBA:
        return _vi_kernel(
            np.ascontiguousarray(v0), np.ascontiguousarray(stop),
            np.ascontiguousarray(wavg), np.ascontiguousarray(radd),
            is_max, tol, max_iters, offset,
        )
    return _vi_numpy(v0, stop, wavg, radd, is_max, tol, max_iters, offset)


def solve_stopping(params: ModelParams, side: str, p_a: QuoteFn, p_b: QuoteFn,
                   barrier: ShiftGridFn, v_init: ShiftGridFn | None = None,
                   check_quotes: bool = True):
    """Iterate Bellman sweeps to the stopping value for one agent.

    Args:
        side: "ask" (seller, max against the floored barrier) or "bid"
            (buyer, min against the ceiled barrier).
        barrier: the other agent's value function; rounded internally.
        v_init: start iterate; defaults to the rounded barrier, which makes
            the iteration monotone.

    Returns:
        (value function, number of sweeps performed).

    Raises:
        ConvergenceError: iteration cap reached with successive-sweep change
            still above 10x the inner tolerance.
    """
    if side not in ("ask", "bid"):
        raise ValueError("side must be 'ask' or 'bid'")
    if check_quotes:
        _check_quote_admissible(params, p_a, p_b)
    wavg, ra, rb, _ = _node_coefficients(params, p_a, p_b)
    radd = ra if side == "ask" else rb
    stop = _stop_reward(side, barrier, params.grid_n)
    v0 = stop.copy() if v_init is None else np.asarray(v_init.samples, dtype=float)
    v, iters, diff = _solve_arrays(
        v0, stop, wavg, radd, side == "ask", params.tol_inner, params.max_inner_iters
    )
    if diff > 10.0 * params.tol_inner:
        raise ConvergenceError(
            f"value iteration ({side}) stalled at diff={diff:.3e} "
            f"after {iters} sweeps",
            residual=diff,
        )
    return ShiftGridFn(v, mode="shift"), iters


def _feedback_nodes(params: ModelParams, v: ShiftGridFn, side: str) -> np.ndarray:
    """Exhaustive per-node search for the optimal admissible quote."""
    n = params.grid_n
    cdf = params.noise.cdf
    out = np.empty(n, dtype=np.int64)
    x_nodes = np.arange(n) / n
    v_nodes = v.samples
    for j, x in enumerate(x_nodes):
        if side == "ask":
            cand = admissible_ask_set(params, x)
            obj = (cand - v_nodes[j]) * (1.0 - cdf(cand - x))
        else:
            cand = admissible_bid_set(params, x)
            obj = (v_nodes[j] - cand) * cdf(cand - x)
        m = np.max(obj)
        ties = obj >= m - 1e-12 * max(1.0, abs(m))
        # min argmax for the ask, max argmax for the bid
        out[j] = cand[ties][0] if side == "ask" else cand[ties][-1]
    return out


def _compress_quotes(nodes: np.ndarray, n: int, side: str) -> QuoteFn:
    try:
        return QuoteFn.from_node_values(nodes, n)
    except ValueError as exc:
        raise NonMonotoneQuoteError(
            f"{side} feedback quotes are not a monotone unit step: {exc}",
            prop="quote_monotone_step",
        ) from exc


def feedback_ask(params: ModelParams, v: ShiftGridFn) -> QuoteFn:
    """Seller's optimal posted quote given continuation value v.

    Maximizes (p - v(x)) * (1 - F(p - x)) over the admissible integers,
    breaking ties toward the smallest maximizer.
    """
    nodes = _feedback_nodes(params, v, "ask")
    return _compress_quotes(nodes, params.grid_n, "ask")


def feedback_bid(params: ModelParams, v: ShiftGridFn) -> QuoteFn:
    """Buyer's optimal posted quote: maximizes (v(x) - p) * F(p - x), ties high."""
    nodes = _feedback_nodes(params, v, "bid")
    return _compress_quotes(nodes, params.grid_n, "bid")

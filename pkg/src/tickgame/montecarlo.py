"""Simulation oracle for the raw game: Brownian factor paths, external order
arrivals by exact thinning against the dominating rate 2*lam, marking of
settlements, strategic stopping, and no-profitable-deviation tests.

The game payoff realizes at the first ending event, so no explicit
discounting enters the payoff: the survival weighting of the analytic
objective is carried by the random arrival clock itself.  The accumulated
discount exposure can still be tracked per path for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParamsError, SimulationTruncationError
from .model import ModelParams, admissible_ask_set, admissible_bid_set, intensity
from .periodic import QuoteFn, ShiftGridFn, snap_ceil, snap_floor

__all__ = [
    "SimConfig",
    "ValueEstimate",
    "GameEstimates",
    "DeviationEntry",
    "stopping_components",
    "simulate_payoffs",
    "estimate_fa",
    "estimate_discounted_reward",
    "deviation_test",
]

# Settlement rounding slack: values this close to an integer settle on it.
_SETTLE_SNAP = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo run configuration.

    horizon = 0 resolves to 20/c_l (truncation error below 1e-8 of the value
    band); dt_sim = 0 resolves to h^2/(4*sigma^2), finer than the solver's
    chain step.  Paths are partitioned into fixed batches; batch b draws
    from an independent substream keyed by (seed, b), so results are
    bit-reproducible and independent of scheduling.
    """

    n_paths: int = 200_000
    horizon: float = 0.0
    dt_sim: float = 0.0
    seed: int = 20240
    x0: float = 0.5
    batch_size: int = 32768
    track_discount: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise InvalidParamsError("n_paths must be at least 1")
        if self.batch_size < 1:
            raise InvalidParamsError("batch_size must be at least 1")

    def resolve(self, params: ModelParams) -> "SimConfig":
        horizon = self.horizon if self.horizon > 0 else 20.0 / params.c_l
        h = 1.0 / params.grid_n
        dt = self.dt_sim if self.dt_sim > 0 else h * h / (4.0 * params.sigma**2)
        return replace(self, horizon=horizon, dt_sim=dt)


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    std_error: float
    n: int


@dataclass(frozen=True)
class GameEstimates:
    """Joint output of one simulation run."""

    ask: ValueEstimate
    bid: ValueEstimate
    horizon_frac: float
    min_discount: float = 1.0
    max_discount: float = 1.0


def _batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, batch])))


def stopping_components(stop_ask: ShiftGridFn, stop_bid: ShiftGridFn,
                        level: float = 0.0, tol: float = 1e-9,
                        pad: float = 0.0, refine: int = 8,
                        agent: str = "seller"):
    """1-periodic set where the strategic stop fires, as (lo, hi) components.

    The seller's stop condition is d(u) = stop_ask(u) - floor(stop_bid(u))
    <= level; the buyer's is ceil(stop_ask(u)) - stop_bid(u) <= level.  Both
    d's are nonnegative at equilibria, so level 0 is the first-passage set
    of the value-coincidence points and the two agents' sets agree there.
    Component edges are refined by linear interpolation on a sub-node grid;
    ``pad`` widens (or shrinks, when negative) each component.
    """
    n = stop_ask.n * refine
    u = np.arange(n) / n
    if agent == "seller":
        d = stop_ask.eval(u) - snap_floor(stop_bid.eval(u), tol=_SETTLE_SNAP)
    else:
        d = snap_ceil(stop_ask.eval(u), tol=_SETTLE_SNAP) - stop_bid.eval(u)
    thresh = level + tol
    mask = d <= thresh
    comps = []
    if mask.all():
        comps = [(0.0, 1.0)]
    elif mask.any():
        idx = np.nonzero(mask)[0]
        breaks = np.nonzero(np.diff(idx) > 1)[0]
        starts = [idx[0]] + [idx[b + 1] for b in breaks]
        ends = [idx[b] for b in breaks] + [idx[-1]]
        runs = list(zip(starts, ends))
        if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n - 1:
            first = runs.pop(0)
            last = runs.pop()
            runs.insert(0, (last[0] - n, first[1]))

        def edge(j0, j1):
            # linear crossing of d through thresh between sample j0 and j1
            d0 = d[j0 % n]
            d1 = d[j1 % n]
            if d0 == d1:
                return j1 / n
            t = np.clip((thresh - d0) / (d1 - d0), 0.0, 1.0)
            return (j0 + t * (j1 - j0)) / n

        for s, e in runs:
            lo = edge(s - 1, s) if not mask[(s - 1) % n] else s / n
            hi = edge(e + 1, e) if not mask[(e + 1) % n] else e / n
            comps.append((lo, hi))
    if pad:
        padded = [(lo - pad, hi + pad) for lo, hi in comps if hi + pad >= lo - pad]
        comps = padded
    return comps


def _first_touch(x, xn, comps):
    """Entry point into the 1-periodic component set along each step, or nan.

    Steps are far shorter than a period, so for each component at most one
    integer translate can be touched per step and direction.
    """
    lo = np.minimum(x, xn)
    hi = np.maximum(x, xn)
    up = xn >= x
    best = np.full(x.shape, np.inf)
    entry = np.full(x.shape, np.nan)
    for c_lo, c_hi in comps:
        k_lo = np.ceil(lo - c_hi)
        k_hi = np.floor(hi - c_lo)
        touched = k_lo <= k_hi
        k = np.where(up, k_lo, k_hi)
        cand = np.where(
            up, np.maximum(c_lo + k, lo), np.minimum(c_hi + k, hi)
        )
        dist = np.abs(cand - x)
        better = touched & (dist < best)
        best = np.where(better, dist, best)
        entry = np.where(better, cand, entry)
    return entry, best


def _settlements(stop_ask, stop_bid, x):
    seller = snap_floor(stop_bid.eval(x), tol=_SETTLE_SNAP)
    buyer = snap_ceil(stop_ask.eval(x), tol=_SETTLE_SNAP)
    return seller, buyer


class _Accumulator:
    def __init__(self):
        self.n = 0
        self.sum_a = 0.0
        self.sumsq_a = 0.0
        self.sum_b = 0.0
        self.sumsq_b = 0.0
        self.horizon_hits = 0
        self.min_disc = 1.0
        self.max_disc = 0.0

    def add(self, pay_a, pay_b, hits, disc):
        self.n += pay_a.size
        self.sum_a += float(np.sum(pay_a))
        self.sumsq_a += float(np.sum(pay_a * pay_a))
        self.sum_b += float(np.sum(pay_b))
        self.sumsq_b += float(np.sum(pay_b * pay_b))
        self.horizon_hits += int(hits)
        if disc is not None and disc.size:
            self.min_disc = min(self.min_disc, float(np.min(disc)))
            self.max_disc = max(self.max_disc, float(np.max(disc)))

    def estimate(self, which: str) -> ValueEstimate:
        s = self.sum_a if which == "ask" else self.sum_b
        ss = self.sumsq_a if which == "ask" else self.sumsq_b
        mean = s / self.n
        var = max(0.0, ss / self.n - mean * mean)
        se = math.sqrt(var / max(1, self.n - 1))
        return ValueEstimate(mean=mean, std_error=se, n=self.n)


# Adaptive stepping: dt scales with squared distance to the stopping set so
# an unnoticed bridge touch needs ~4 standard deviations (miss probability
# e^-32 per step), floored at dt_sim/_FINE_FACTOR next to the set (this floor
# controls the absorption-shift bias of the first passage) and capped at
# dt_sim*_COARSE_FACTOR in the far field, where the Gaussian step is exact.
_FINE_FACTOR = 16.0
_COARSE_FACTOR = 100.0
_FINE_RADII = 4.0


def _region_distance(x, comps):
    """Distance from each position to the 1-periodic component set."""
    best = np.full(np.shape(x), np.inf)
    for c_lo, c_hi in comps:
        center = 0.5 * (c_lo + c_hi)
        k = np.round(x - center)
        d = np.maximum(c_lo + k - x, x - (c_hi + k))
        best = np.minimum(best, np.maximum(d, 0.0))
    return best


def _sim_batch_euler(params, p_a, p_b, stop_ask, stop_bid, comps, cfg, rng, n):
    """One batch of the raw game with an active strategic stopping set."""
    sigma = params.sigma
    dt_min = cfg.dt_sim / _FINE_FACTOR
    dt_max = cfg.dt_sim * _COARSE_FACTOR
    two_lam = 2.0 * params.lam
    cdf = params.noise.cdf
    ppf = params.noise.ppf
    alpha = params.alpha

    pay_a = np.empty(n)
    pay_b = np.empty(n)
    disc = np.zeros(n) if cfg.track_discount else None
    hits = 0

    x = np.full(n, float(cfg.x0))
    t = np.zeros(n)
    idx = np.arange(n)
    # immediate stop at time zero
    ent0, dist0 = _first_touch(x, x, comps)
    stopped0 = np.isfinite(ent0) & (dist0 == 0.0)
    if stopped0.any():
        s, b = _settlements(stop_ask, stop_bid, x[stopped0])
        pay_a[idx[stopped0]] = s
        pay_b[idx[stopped0]] = b
        keep = ~stopped0
        x, t, idx = x[keep], t[keep], idx[keep]
    next_arr = rng.exponential(1.0 / two_lam, size=x.size)
    while x.size:
        m = x.size
        dist_now = _region_distance(x, comps)
        dt = np.clip((dist_now / (_FINE_RADII * sigma)) ** 2, dt_min, dt_max)
        xn = x + sigma * np.sqrt(dt) * rng.standard_normal(m)
        entry, dist = _first_touch(x, xn, comps)
        denom = np.maximum(np.abs(xn - x), 1e-300)
        t_strat = np.where(np.isfinite(entry), t + dt * dist / denom, np.inf)

        retire = np.zeros(m, dtype=bool)
        traded = np.zeros(m, dtype=bool)
        cand = next_arr <= t + dt
        if cand.any():
            frac = np.clip((next_arr[cand] - t[cand]) / dt[cand], 0.0, 1.0)
            # exact Brownian-bridge sample of the factor at the arrival time
            spread = sigma * np.sqrt(dt[cand] * frac * (1.0 - frac))
            x_arr = (
                x[cand]
                + (xn[cand] - x[cand]) * frac
                + spread * rng.standard_normal(int(cand.sum()))
            )
            qa = p_a.eval(x_arr)
            qb = p_b.eval(x_arr)
            p_buy = 0.5 * (1.0 - cdf(qa - x_arr))
            p_sell = 0.5 * cdf(qb - x_arr)
            u = rng.random(x_arr.size)
            u2 = rng.random(x_arr.size)
            # an accepted candidate ends the game only if it beats the
            # strategic stop inside this step
            first = next_arr[cand] <= t_strat[cand]
            is_buy = (u < p_buy) & first
            is_sell = (~is_buy) & (u < p_buy + p_sell) & first
            sub = np.nonzero(cand)[0]
            if is_buy.any():
                j = sub[is_buy]
                lo_q = cdf(qa[is_buy] - x_arr[is_buy])
                xi = ppf(lo_q + u2[is_buy] * (1.0 - lo_q))
                pay_a[idx[j]] = qa[is_buy]
                pay_b[idx[j]] = snap_ceil(
                    x_arr[is_buy] + alpha * xi, tol=_SETTLE_SNAP
                )
                retire[j] = True
                traded[j] = True
            if is_sell.any():
                j = sub[is_sell]
                hi_q = cdf(qb[is_sell] - x_arr[is_sell])
                xi = ppf(u2[is_sell] * hi_q)
                pay_b[idx[j]] = qb[is_sell]
                pay_a[idx[j]] = snap_floor(
                    x_arr[is_sell] + alpha * xi, tol=_SETTLE_SNAP
                )
                retire[j] = True
                traded[j] = True
            rejected = cand.copy()
            rejected[sub] = ~traded[sub]
            if rejected.any():
                next_arr[rejected] += rng.exponential(
                    1.0 / two_lam, size=int(rejected.sum())
                )

        strat = np.isfinite(t_strat) & ~traded
        if strat.any():
            s, b = _settlements(stop_ask, stop_bid, entry[strat])
            pay_a[idx[strat]] = s
            pay_b[idx[strat]] = b
            retire |= strat

        if disc is not None:
            c_here = intensity(params, p_a.eval(x), p_b.eval(x), x)
            disc[idx] += c_here * dt

        t = t + dt
        over = ~retire & (t >= cfg.horizon)
        if over.any():
            hits += int(over.sum())
            s, b = _settlements(stop_ask, stop_bid, x[over])
            pay_a[idx[over]] = s
            pay_b[idx[over]] = b
            retire |= over

        keep = ~retire
        x = xn[keep]
        t = t[keep]
        idx = idx[keep]
        next_arr = next_arr[keep]

    disc_out = np.exp(-disc) if disc is not None else None
    return pay_a, pay_b, hits, disc_out


def _sim_batch_jump(params, p_a, p_b, stop_ask, stop_bid, cfg, rng, n):
    """Raw game without a strategic stop: jump candidate-to-candidate.

    Between candidate arrivals the factor is advanced in one exact Gaussian
    step, so there is no time-discretization at all in this mode.
    """
    sigma = params.sigma
    two_lam = 2.0 * params.lam
    cdf = params.noise.cdf
    ppf = params.noise.ppf
    alpha = params.alpha

    pay_a = np.empty(n)
    pay_b = np.empty(n)
    disc = np.zeros(n) if cfg.track_discount else None
    hits = 0

    x = np.full(n, float(cfg.x0))
    t = np.zeros(n)
    idx = np.arange(n)
    while x.size:
        gap = rng.exponential(1.0 / two_lam, size=x.size)
        tn = t + gap
        x = x + sigma * np.sqrt(gap) * rng.standard_normal(x.size)
        if disc is not None:
            # exposure accrues at the local rate over the jump, evaluated at
            # the landing point (diagnostic only)
            disc[idx] += intensity(params, p_a.eval(x), p_b.eval(x), x) * gap
        over = tn >= cfg.horizon
        if over.any():
            hits += int(over.sum())
            s, b = _settlements(stop_ask, stop_bid, x[over])
            pay_a[idx[over]] = s
            pay_b[idx[over]] = b
        qa = p_a.eval(x)
        qb = p_b.eval(x)
        p_buy = 0.5 * (1.0 - cdf(qa - x))
        p_sell = 0.5 * cdf(qb - x)
        u = rng.random(x.size)
        u2 = rng.random(x.size)
        is_buy = (u < p_buy) & ~over
        is_sell = (~is_buy) & (u < p_buy + p_sell) & ~over
        if is_buy.any():
            lo_q = cdf(qa[is_buy] - x[is_buy])
            xi = ppf(lo_q + u2[is_buy] * (1.0 - lo_q))
            pay_a[idx[is_buy]] = qa[is_buy]
            pay_b[idx[is_buy]] = snap_ceil(x[is_buy] + alpha * xi, tol=_SETTLE_SNAP)
        if is_sell.any():
            hi_q = cdf(qb[is_sell] - x[is_sell])
            xi = ppf(u2[is_sell] * hi_q)
            pay_b[idx[is_sell]] = qb[is_sell]
            pay_a[idx[is_sell]] = snap_floor(x[is_sell] + alpha * xi, tol=_SETTLE_SNAP)
        keep = ~(is_buy | is_sell | over)
        x, t, idx = x[keep], tn[keep], idx[keep]
    disc_out = np.exp(-disc) if disc is not None else None
    return pay_a, pay_b, hits, disc_out


def _run_game(params: ModelParams, p_a, p_b, stop_ask: ShiftGridFn,
              stop_bid: ShiftGridFn, cfg: SimConfig, comps) -> GameEstimates:
    cfg = cfg.resolve(params)
    acc = _Accumulator()
    n_batches = (cfg.n_paths + cfg.batch_size - 1) // cfg.batch_size
    for b in range(n_batches):
        n = min(cfg.batch_size, cfg.n_paths - b * cfg.batch_size)
        rng = _batch_rng(cfg.seed, b)
        if comps:
            out = _sim_batch_euler(
                params, p_a, p_b, stop_ask, stop_bid, comps, cfg, rng, n
            )
        else:
            out = _sim_batch_jump(params, p_a, p_b, stop_ask, stop_bid, cfg, rng, n)
        acc.add(*out)
    if acc.horizon_hits > 0.001 * cfg.n_paths:
        raise SimulationTruncationError(
            f"{acc.horizon_hits} of {cfg.n_paths} paths hit the horizon"
        )
    return GameEstimates(
        ask=acc.estimate("ask"),
        bid=acc.estimate("bid"),
        horizon_frac=acc.horizon_hits / cfg.n_paths,
        min_discount=acc.min_disc if cfg.track_discount else 1.0,
        max_discount=acc.max_disc if cfg.track_discount else 1.0,
    )


def simulate_payoffs(params: ModelParams, p_a: QuoteFn, p_b: QuoteFn,
                     stop_ask: ShiftGridFn, stop_bid: ShiftGridFn,
                     cfg: SimConfig):
    """Estimate both agents' game values under the given strategies.

    The game ends at the first of: an external trade (thinned arrivals at
    the posted quotes, marks drawn from the conditioned noise law) or the
    strategic stop (first passage of the set where stop_ask equals
    floor(stop_bid); the seller then settles at floor(stop_bid), the buyer
    at ceil(stop_ask), which coincide at equilibrium stops).

    Returns:
        (ValueEstimate ask, ValueEstimate bid).

    Raises:
        SimulationTruncationError: more than 0.1% of paths hit the horizon.
    """
    comps = stopping_components(stop_ask, stop_bid)
    out = _run_game(params, p_a, p_b, stop_ask, stop_bid, cfg, comps)
    return out.ask, out.bid


def simulate_game(params: ModelParams, p_a, p_b, stop_ask, stop_bid,
                  cfg: SimConfig, comps=None) -> GameEstimates:
    """Full-diagnostics variant of simulate_payoffs; accepts a custom
    stopping set (empty list means the strategic stop never fires)."""
    if comps is None:
        comps = stopping_components(stop_ask, stop_bid)
    return _run_game(params, p_a, p_b, stop_ask, stop_bid, cfg, comps)


def estimate_discounted_reward(params: ModelParams, c_fn, ratio_fn,
                               cfg: SimConfig, rate_bound: float) -> ValueEstimate:
    """Estimate E[ integral exp(-int c) g dt ] from X_0 = x0.

    Uses the killed-diffusion identity: the integral equals the expectation
    of (g/c) at an exponential killing time with state-dependent rate c,
    sampled exactly by thinning against ``rate_bound``.  The Brownian factor
    is advanced between candidates in single exact Gaussian steps, so the
    estimator carries no discretization bias.

    Args:
        c_fn: vectorized kill rate, bounded by rate_bound.
        ratio_fn: vectorized g/c.
    """
    cfg = cfg.resolve(params)
    total = 0.0
    total_sq = 0.0
    count = 0
    hits = 0
    n_batches = (cfg.n_paths + cfg.batch_size - 1) // cfg.batch_size
    for b in range(n_batches):
        n = min(cfg.batch_size, cfg.n_paths - b * cfg.batch_size)
        rng = _batch_rng(cfg.seed, b)
        x = np.full(n, float(cfg.x0))
        t = np.zeros(n)
        vals = np.empty(n)
        idx = np.arange(n)
        while x.size:
            gap = rng.exponential(1.0 / rate_bound, size=x.size)
            t = t + gap
            x = x + params.sigma * np.sqrt(gap) * rng.standard_normal(x.size)
            over = t >= cfg.horizon
            accept = (rng.random(x.size) < np.asarray(c_fn(x)) / rate_bound) & ~over
            if over.any():
                hits += int(over.sum())
                vals[idx[over]] = 0.0  # tail contribution below truncation tol
            if accept.any():
                vals[idx[accept]] = np.asarray(ratio_fn(x[accept]), dtype=float)
            keep = ~(accept | over)
            x, t, idx = x[keep], t[keep], idx[keep]
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        count += n
    if hits > 0.001 * cfg.n_paths:
        raise SimulationTruncationError(
            f"{hits} of {cfg.n_paths} paths hit the horizon"
        )
    mean = total / count
    var = max(0.0, total_sq / count - mean * mean)
    return ValueEstimate(
        mean=mean, std_error=math.sqrt(var / max(1, count - 1)), n=count
    )


def estimate_fa(params: ModelParams, p_a: QuoteFn, p_b: QuoteFn,
                cfg: SimConfig, side: str = "ask") -> ValueEstimate:
    """Monte-Carlo estimate of the never-stop discounted reward value at x0.

    Validates the analytic particular solution; unbiased by construction
    (see estimate_discounted_reward).
    """
    from .model import reward_ask, reward_bid

    reward = reward_ask if side == "ask" else reward_bid

    def c_fn(x):
        return intensity(params, p_a.eval(x), p_b.eval(x), x)

    def ratio_fn(x):
        return reward(params, p_a.eval(x), p_b.eval(x), x) / c_fn(x)

    return estimate_discounted_reward(params, c_fn, ratio_fn, cfg, params.c_u)


@dataclass(frozen=True)
class _NodeQuote:
    """Integer quote from per-node values, piecewise constant on grid cells,
    extended by the shift rule; used for clamped quote deviations."""

    values: np.ndarray

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        n = self.values.size
        k = np.floor(x)
        j = np.clip(np.floor((x - k) * n + 1e-9), 0, n - 1).astype(np.int64)
        out = self.values[j] + k
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class DeviationEntry:
    agent: str
    name: str
    value: float
    reference: float
    delta: float
    std_error: float
    conclusive: bool
    improvement: bool


def _clamped_quote(params: ModelParams, quote: QuoteFn, step: int, side: str):
    n = params.grid_n
    x = np.arange(n) / n
    vals = quote.node_values(n) + step
    pick = admissible_ask_set if side == "ask" else admissible_bid_set
    for j in range(n):
        allowed = pick(params, x[j])
        vals[j] = min(max(vals[j], allowed[0]), allowed[-1])
    return _NodeQuote(values=np.asarray(vals, dtype=np.int64))


def deviation_test(params: ModelParams, eq, cfg: SimConfig,
                   perturbations=None):
    """Re-simulate unilateral deviations against the equilibrium bundle.

    For each perturbation of one agent's stopping rule or posted quote, the
    deviator's payoff is estimated with the opponent's strategy held fixed
    (settlement at the opponent's internal price when the deviator stops).
    An entry is an improvement only when the payoff change clears 3 standard
    errors in the profitable direction; entries inside the band are labeled
    inconclusive.

    The standard menu per agent: null, stopping region widened/narrowed by
    one grid node, stop threshold loosened by half a tick of value, stop
    delayed past the current value crossing, quote moved up/down one tick
    where admissible.
    """
    h = 1.0 / params.grid_n
    menu = perturbations if perturbations is not None else [
        ("null", {}),
        ("region_wider_node", {"pad": h}),
        ("region_narrower_node", {"pad": -h}),
        ("stop_earlier_half_tick", {"level": 0.5}),
        ("stop_later_one_crossing", {"level": -1.0}),
        ("quote_up", {"quote_step": 1}),
        ("quote_down", {"quote_step": -1}),
    ]
    results = []
    for agent in ("seller", "buyer"):
        side = "ask" if agent == "seller" else "bid"
        v_ref = (eq.v_ask if side == "ask" else eq.v_bid).eval(cfg.x0)
        for name, spec in menu:
            p_a, p_b = eq.quote_ask, eq.quote_bid
            if "quote_step" in spec:
                if side == "ask":
                    p_a = _clamped_quote(params, p_a, spec["quote_step"], "ask")
                else:
                    p_b = _clamped_quote(params, p_b, spec["quote_step"], "bid")
            comps = stopping_components(
                eq.v_ask, eq.v_bid, agent=agent,
                level=spec.get("level", 0.0), pad=spec.get("pad", 0.0),
            )
            out = simulate_game(
                params, p_a, p_b, eq.v_ask, eq.v_bid, cfg, comps=comps
            )
            est = out.ask if side == "ask" else out.bid
            delta = est.mean - v_ref
            band = 3.0 * est.std_error
            conclusive = abs(delta) > band
            improvement = (delta > band) if side == "ask" else (delta < -band)
            results.append(
                DeviationEntry(
                    agent=agent, name=name, value=est.mean, reference=v_ref,
                    delta=delta, std_error=est.std_error,
                    conclusive=conclusive, improvement=improvement,
                )
            )
    return results

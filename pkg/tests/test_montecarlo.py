import numpy as np
import pytest
from scipy import stats

from tickgame.errors import SimulationTruncationError
from tickgame.geometric import _quote_callables, fundamental_solutions, particular_solution
from tickgame.model import ModelParams, admissible_ask_set, admissible_bid_set
from tickgame.montecarlo import (
    SimConfig,
    _NodeQuote,
    _sim_batch_euler,
    deviation_test,
    estimate_discounted_reward,
    estimate_fa,
    simulate_game,
    simulate_payoffs,
    stopping_components,
)
from tickgame.periodic import QuoteFn, ShiftGridFn, identity_grid

PARAMS = ModelParams()
N = PARAMS.grid_n
IDENT = identity_grid(N)
# quotes far outside the support: no external flow at all
FAR_ASK = QuoteFn(level=3, breakpoint=1.0)
FAR_BID = QuoteFn(level=-3, breakpoint=1.0)
# quotes that keep the intensity exactly at lam (sale certain, no buys)
LOW_BOTH_A = QuoteFn(level=-3, breakpoint=1.0)
LOW_BOTH_B = QuoteFn(level=-3, breakpoint=1.0)


def edge_quotes(params):
    """Outermost admissible quotes: intensity near its floor c_l."""
    x = np.arange(params.grid_n) / params.grid_n
    top = np.array([admissible_ask_set(params, xj)[-1] for xj in x])
    bot = np.array([admissible_bid_set(params, xj)[0] for xj in x])
    return _NodeQuote(top), _NodeQuote(bot)


class TestStoppingComponents:
    def test_equilibrium_region_is_integer_points(self, paper_eq):
        comps = stopping_components(paper_eq.v_ask, paper_eq.v_bid)
        assert len(comps) == 1
        lo, hi = comps[0]
        assert abs(lo) < 1e-6 and abs(hi) < 1e-6

    def test_level_widens_region(self, paper_eq):
        comps = stopping_components(paper_eq.v_ask, paper_eq.v_bid, level=0.5)
        total = sum(hi - lo for lo, hi in comps)
        assert total > 0.5

    def test_negative_level_empties_region(self, paper_eq):
        assert stopping_components(paper_eq.v_ask, paper_eq.v_bid, level=-1.0) == []

    def test_buyer_and_seller_agree_at_equilibrium(self, paper_eq):
        s = stopping_components(paper_eq.v_ask, paper_eq.v_bid, agent="seller")
        b = stopping_components(paper_eq.v_ask, paper_eq.v_bid, agent="buyer")
        assert len(s) == len(b) == 1
        assert abs(s[0][0] - b[0][0]) < 1e-4 and abs(s[0][1] - b[0][1]) < 1e-4


class TestSimulatePayoffs:
    def test_immediate_stop_integer_start(self):
        cfg = SimConfig(n_paths=500, x0=2.0, seed=1)
        est_a, est_b = simulate_payoffs(PARAMS, FAR_ASK, FAR_BID, IDENT, IDENT, cfg)
        assert est_a.mean == 2.0 and est_a.std_error == 0.0
        assert est_b.mean == 2.0 and est_b.std_error == 0.0

    def test_immediate_stop_interior_start(self):
        # barriers arranged so the coincidence condition already holds at x0
        cfg = SimConfig(n_paths=500, x0=0.3, seed=1)
        stop_ask = ShiftGridFn(IDENT.samples - 0.3, "shift")
        stop_bid = ShiftGridFn(IDENT.samples + 0.2, "shift")
        est_a, est_b = simulate_payoffs(
            PARAMS, FAR_ASK, FAR_BID, stop_ask, stop_bid, cfg
        )
        assert est_a.mean == 0.0 and est_a.std_error == 0.0
        assert est_b.mean == 0.0 and est_b.std_error == 0.0

    def test_pure_exit_is_unbiased(self, paper_eq):
        cfg = SimConfig(n_paths=100_000, x0=0.25, seed=9)
        out = simulate_game(PARAMS, FAR_ASK, FAR_BID, paper_eq.v_ask,
                            paper_eq.v_bid, cfg)
        assert abs(out.ask.mean - 0.25) <= 3 * out.ask.std_error

    def test_reproducibility_bit_identical(self, paper_eq):
        cfg = SimConfig(n_paths=20_000, x0=0.5, seed=42)
        a1, b1 = simulate_payoffs(
            PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
            paper_eq.v_ask, paper_eq.v_bid, cfg,
        )
        a2, b2 = simulate_payoffs(
            PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
            paper_eq.v_ask, paper_eq.v_bid, cfg,
        )
        assert a1 == a2 and b1 == b2

    def test_se_scaling(self, paper_eq):
        ses = []
        for n in (8_000, 32_000):
            cfg = SimConfig(n_paths=n, x0=0.5, seed=3)
            est_a, _ = simulate_payoffs(
                PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
                paper_eq.v_ask, paper_eq.v_bid, cfg,
            )
            ses.append(est_a.std_error)
        ratio = ses[0] / ses[1]
        assert 2.0 * 0.8 <= ratio <= 2.0 * 1.2

    def test_discount_factor_in_unit_interval(self, paper_eq):
        cfg = SimConfig(n_paths=2_000, x0=0.5, seed=4, track_discount=True)
        out = simulate_game(PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
                            paper_eq.v_ask, paper_eq.v_bid, cfg)
        assert 0.0 < out.min_discount <= out.max_discount <= 1.0

    def test_payoff_magnitudes_bounded(self, paper_eq):
        cfg = SimConfig(n_paths=4_000, x0=0.5, seed=5).resolve(PARAMS)
        comps = stopping_components(paper_eq.v_ask, paper_eq.v_bid)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([5, 0])))
        pay_a, pay_b, hits, _ = _sim_batch_euler(
            PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
            paper_eq.v_ask, paper_eq.v_bid, comps, cfg, rng, 4_000,
        )
        bound = abs(cfg.x0) + PARAMS.quote_band + 1.0 + 0.1
        assert np.max(np.abs(pay_a)) <= bound
        assert np.max(np.abs(pay_b)) <= bound
        assert hits == 0

    def test_horizon_truncation_signalled(self, paper_eq):
        # a tiny horizon forces nearly every path to be cut off
        cfg = SimConfig(n_paths=400, x0=0.5, seed=6, horizon=1e-4)
        with pytest.raises(SimulationTruncationError):
            simulate_payoffs(
                PARAMS, paper_eq.quote_ask, paper_eq.quote_bid,
                paper_eq.v_ask, paper_eq.v_bid, cfg,
            )


class TestThinning:
    def test_first_event_times_exponential(self):
        # with quotes far below the support the sale happens at every
        # arrival, so game-ending events are a rate-lam Poisson stream
        cfg = SimConfig(n_paths=10_000, x0=0.5, seed=8)
        _, times = _sample_event_times(cfg)
        stat = stats.kstest(times, "expon", args=(0.0, 1.0 / PARAMS.lam))
        assert stat.statistic < 1.63 / np.sqrt(times.size)


def _sample_event_times(cfg):
    """First game-ending event times under constant intensity lam."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0])))
    two_lam = 2 * PARAMS.lam
    n = cfg.n_paths
    t = np.zeros(n)
    x = np.full(n, cfg.x0)
    done = np.zeros(n, dtype=bool)
    out = np.zeros(n)
    while not done.all():
        active = ~done
        gap = rng.exponential(1.0 / two_lam, size=int(active.sum()))
        t[active] += gap
        x[active] += PARAMS.sigma * np.sqrt(gap) * rng.standard_normal(gap.size)
        # acceptance probability c/(2 lam) with c == lam: one half
        hit = np.zeros(n, dtype=bool)
        hit[active] = rng.random(gap.size) < 0.5
        out[hit & ~done] = t[hit & ~done]
        done |= hit
    return None, out


class TestDiscountedRewardEstimators:
    def test_linear_reward_recovers_start_point(self):
        cfg = SimConfig(n_paths=50_000, x0=0.7, seed=10)
        one = lambda x: np.ones_like(np.asarray(x, dtype=float))
        est = estimate_discounted_reward(
            PARAMS, one, lambda x: np.asarray(x, dtype=float), cfg, rate_bound=2.0
        )
        assert abs(est.mean - 0.7) <= 3 * est.std_error

    def test_constant_ratio_recovers_constant(self):
        cfg = SimConfig(n_paths=20_000, x0=0.2, seed=11)
        one = lambda x: np.ones_like(np.asarray(x, dtype=float))
        est = estimate_discounted_reward(
            PARAMS, one, lambda x: 0.7 * np.ones_like(np.asarray(x, float)),
            cfg, rate_bound=2.0,
        )
        assert est.mean == pytest.approx(0.7, abs=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-8)

    def test_estimate_fa_matches_analytic(self, paper_eq):
        c_fn, g_ask, _, splits = _quote_callables(
            PARAMS, paper_eq.quote_ask, paper_eq.quote_bid
        )
        pair = fundamental_solutions(PARAMS, c_fn, splits=splits)
        fa = particular_solution(PARAMS, pair, g_ask, splits=splits)
        cfg = SimConfig(n_paths=60_000, x0=0.3, seed=12)
        est = estimate_fa(PARAMS, paper_eq.quote_ask, paper_eq.quote_bid, cfg)
        assert abs(est.mean - fa.value(0.3)) <= 3 * est.std_error

    def test_edge_quotes_match_analytic_no_stop_value(self):
        # intensity pinned near its floor; compare the simulated game with
        # stopping disabled against the analytic perpetual value
        top, bot = edge_quotes(PARAMS)
        splits = [(j + 1) / N for j in range(N - 1)
                  if top.values[j + 1] != top.values[j]
                  or bot.values[j + 1] != bot.values[j]]

        def c_fn(x):
            from tickgame.model import intensity
            return intensity(PARAMS, top.eval(x), bot.eval(x), x)

        def g_fn(x):
            from tickgame.model import reward_ask
            return reward_ask(PARAMS, top.eval(x), bot.eval(x), x)

        pair = fundamental_solutions(PARAMS, c_fn, splits=splits)
        fa = particular_solution(PARAMS, pair, g_fn, splits=splits)
        cfg = SimConfig(n_paths=60_000, x0=0.5, seed=13)
        out = simulate_game(PARAMS, top, bot, IDENT, IDENT, cfg, comps=[])
        assert abs(out.ask.mean - fa.value(0.5)) <= 3 * out.ask.std_error


@pytest.fixture(scope="module")
def deviation_report(paper_eq):
    cfg = SimConfig(n_paths=30_000, x0=0.5, seed=14)
    return deviation_test(PARAMS, paper_eq, cfg)


class TestDeviations:
    @pytest.fixture()
    def report(self, deviation_report):
        return deviation_report

    def test_null_inconclusive(self, report):
        for r in report:
            if r.name == "null":
                assert not r.conclusive

    def test_no_profitable_deviation(self, report):
        for r in report:
            assert not r.improvement, f"{r.agent} {r.name} improved"

    def test_quote_down_conclusively_worse_for_seller(self, report):
        row = next(r for r in report
                   if r.agent == "seller" and r.name == "quote_down")
        assert row.conclusive and row.delta < 0

    def test_menu_covers_both_agents(self, report):
        agents = {r.agent for r in report}
        names = {r.name for r in report}
        assert agents == {"seller", "buyer"}
        assert {"null", "stop_earlier_half_tick", "stop_later_one_crossing",
                "quote_up", "quote_down"} <= names

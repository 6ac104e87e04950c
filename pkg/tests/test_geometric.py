import math

import numpy as np
import pytest
from scipy.integrate import quad

from tickgame.errors import InvariantViolationError
from tickgame.geometric import (
    _quote_callables,
    fundamental_solutions,
    majorant_transform,
    min_concave_majorant,
    particular_solution,
    upper_concave_hull,
    value_via_majorant,
)
from tickgame.model import ModelParams
from tickgame.periodic import ShiftGridFn, identity_grid, sup_diff

PARAMS = ModelParams()


def const_one(x):
    return np.ones_like(np.asarray(x, dtype=float))


@pytest.fixture(scope="module")
def const_pair():
    return fundamental_solutions(PARAMS, const_one)


@pytest.fixture(scope="module")
def eq_callables(paper_eq):
    return _quote_callables(PARAMS, paper_eq.quote_ask, paper_eq.quote_bid)


@pytest.fixture(scope="module")
def eq_pair(eq_callables):
    c_fn, _, _, splits = eq_callables
    return fundamental_solutions(PARAMS, c_fn, splits=splits)


class TestFundamentalSolutions:
    def test_constant_coefficient_closed_form(self, const_pair):
        kappa = math.sqrt(2.0)
        xs = np.linspace(0, 1, 101)
        assert np.max(np.abs(const_pair.phi(xs) - np.exp(-kappa * xs))) < 1e-8
        assert np.max(np.abs(const_pair.psi(xs) - np.exp(kappa * xs))) < 1e-8
        assert const_pair.gamma_decay == pytest.approx(math.exp(-kappa), abs=1e-8)
        assert const_pair.wronskian == pytest.approx(2 * kappa, abs=1e-8)

    def test_multiplicative_period_extension(self, eq_pair):
        g = eq_pair.gamma_decay
        xs = np.linspace(0, 0.99, 20)
        assert np.allclose(eq_pair.phi(xs + 1), g * eq_pair.phi(xs), rtol=1e-12)
        assert np.allclose(eq_pair.psi(xs + 1), eq_pair.psi(xs) / g, rtol=1e-12)
        assert np.allclose(
            eq_pair.ratio(xs + 1), eq_pair.ratio(xs) / g**2, rtol=1e-12
        )

    def test_wronskian_constant_in_x(self, eq_pair):
        xs = np.linspace(0, 1, 251)
        w = eq_pair.psi_deriv(xs) * eq_pair.phi(xs) - eq_pair.phi_deriv(
            xs
        ) * eq_pair.psi(xs)
        assert np.max(np.abs(w / eq_pair.wronskian - 1.0)) < 1e-6

    def test_monotone_and_positive(self, eq_pair):
        xs = np.linspace(0, 1, 300)
        assert np.all(eq_pair.phi(xs) > 0) and np.all(eq_pair.psi(xs) > 0)
        assert np.all(eq_pair.phi_deriv(xs) < 0)
        assert np.all(eq_pair.psi_deriv(xs) > 0)

    def test_growth_bounds(self, eq_callables, eq_pair):
        # psi and phi grow/decay no faster than the constant-coefficient
        # envelopes built from the extreme kill rates
        c_fn = eq_callables[0]
        cs = c_fn(np.linspace(0, 1, 2001))
        k_lo = math.sqrt(2 * cs.min()) / PARAMS.sigma
        k_hi = math.sqrt(2 * cs.max()) / PARAMS.sigma
        xs = np.linspace(-3, 3, 1000)
        psi_bound = np.maximum(np.exp(k_lo * xs), np.exp(k_hi * xs))
        phi_bound = np.maximum(np.exp(-k_lo * xs), np.exp(-k_hi * xs))
        assert np.all(eq_pair.psi(xs) <= psi_bound * (1 + 1e-9))
        assert np.all(eq_pair.phi(xs) <= phi_bound * (1 + 1e-9))

    def test_derivative_integral_identities(self, eq_callables, eq_pair):
        # psi'(x) = (2/s^2) int_-inf^x psi c and the mirrored phi' identity,
        # with the improper integrals summed as one-period geometric series
        c_fn = eq_pair and eq_callables[0]
        g = eq_pair.gamma_decay
        for x in np.linspace(0.05, 0.95, 10):
            win, _ = quad(
                lambda y: eq_pair.psi(y) * float(c_fn(y)), x - 1, x, limit=200
            )
            want = (2 / PARAMS.sigma**2) * win / (1 - g)
            assert eq_pair.psi_deriv(x) == pytest.approx(want, rel=1e-6)
            win, _ = quad(
                lambda y: eq_pair.phi(y) * float(c_fn(y)), x, x + 1, limit=200
            )
            want = -(2 / PARAMS.sigma**2) * win / (1 - g)
            assert eq_pair.phi_deriv(x) == pytest.approx(want, rel=1e-6)

    def test_refinement_cross_validation(self, eq_callables):
        c_fn, _, _, splits = eq_callables
        coarse = fundamental_solutions(PARAMS, c_fn, splits=splits, substeps=2)
        fine = fundamental_solutions(PARAMS, c_fn, splits=splits, substeps=20)
        assert coarse.gamma_decay == pytest.approx(fine.gamma_decay, rel=1e-5)
        assert coarse.wronskian == pytest.approx(fine.wronskian, rel=1e-5)

    def test_ode_residual_second_order(self):
        # centred second differences of phi should satisfy the ODE to O(h^2)
        def residual(substeps):
            pair = fundamental_solutions(PARAMS, const_one, substeps=substeps)
            xs = pair.x_nodes
            h = xs[1] - xs[0]
            v = pair.phi_vals
            lap = (v[:-2] - 2 * v[1:-1] + v[2:]) / h**2
            return np.max(np.abs(0.5 * PARAMS.sigma**2 * lap - v[1:-1]))

        r2, r4 = residual(2), residual(4)
        assert r4 < r2
        assert r2 / r4 == pytest.approx(4.0, rel=0.4)

    def test_malformed_intensity_rejected(self):
        with pytest.raises(InvariantViolationError):
            fundamental_solutions(PARAMS, lambda x: -const_one(x))


class TestParticularSolution:
    def test_linear_reward_gives_identity_constant_c(self, const_pair):
        f = particular_solution(PARAMS, const_pair, lambda x: np.asarray(x, float))
        xs = np.linspace(-1.7, 2.3, 200)
        assert np.max(np.abs(f.value(xs) - xs)) < 1e-8
        assert np.max(np.abs(f.deriv(xs) - 1.0)) < 1e-8

    def test_constant_reward_gives_constant(self, const_pair):
        G = 0.7
        f = particular_solution(
            PARAMS, const_pair, lambda x: G * const_one(x), extension="periodic"
        )
        xs = np.linspace(-2, 2, 100)
        assert np.max(np.abs(f.value(xs) - G)) < 1e-8

    def test_linear_reward_gives_identity_equilibrium_c(self, eq_callables, eq_pair):
        c_fn = eq_callables[0]
        splits = eq_callables[3]
        f = particular_solution(
            PARAMS, eq_pair,
            lambda x: np.asarray(x, float) * np.asarray(c_fn(x), float),
            splits=splits,
        )
        xs = np.linspace(0, 1, 301)
        assert np.max(np.abs(f.value(xs) - xs)) < 1e-4

    def test_close_to_x_and_derivative_band(self, eq_callables, eq_pair):
        _, g_ask, g_bid, splits = eq_callables
        xs = np.linspace(0, 1, 301)
        for g_fn in (g_ask, g_bid):
            f = particular_solution(PARAMS, eq_pair, g_fn, splits=splits)
            assert np.max(np.abs(f.value(xs) - xs)) <= PARAMS.quote_band
            w = np.max(np.abs(f.deriv(xs) - 1.0))
            assert w < 1.0

    def test_ode_residual(self, eq_callables, eq_pair):
        # (s^2/2) f'' - c f = -g away from the quote jumps
        c_fn, g_ask, _, splits = eq_callables
        f = particular_solution(PARAMS, eq_pair, g_ask, splits=splits)
        xs = f.x_nodes
        h = 1.0 / (2 * PARAMS.grid_n)
        interior = np.arange(1, len(xs) - 1)
        keep = [
            j for j in interior
            if all(abs(xs[j] - s % 1.0) > 2.5 * h for s in splits)
            and abs(xs[j] - xs[j - 1] - h) < 1e-12
            and abs(xs[j + 1] - xs[j] - h) < 1e-12
        ]
        keep = np.asarray(keep)
        lap = (f.vals[keep - 1] - 2 * f.vals[keep] + f.vals[keep + 1]) / h**2
        resid = (
            0.5 * PARAMS.sigma**2 * lap
            - np.asarray(c_fn(xs[keep])) * f.vals[keep]
            + np.asarray(g_ask(xs[keep]))
        )
        assert np.max(np.abs(resid)) < 5e-3

    def test_derivative_band_shrinks_with_volatility(self, paper_eq):
        ws = []
        xs = np.linspace(0, 1, 201)
        for sigma in (1.0, 2.0, 4.0):
            params = ModelParams(sigma=sigma)
            c_fn, g_ask, _, splits = _quote_callables(
                params, paper_eq.quote_ask, paper_eq.quote_bid
            )
            pair = fundamental_solutions(params, c_fn, splits=splits)
            f = particular_solution(params, pair, g_ask, splits=splits)
            ws.append(np.max(np.abs(f.deriv(xs) - 1.0)))
        assert ws[0] < 1.0
        assert ws[0] > ws[1] > ws[2]


class TestTransform:
    def test_phi_maps_to_one_and_psi_to_identity(self, eq_pair):
        for y in (0.4, 1.0, 2.3, 7.7):
            assert majorant_transform(eq_pair, eq_pair.phi, y) == pytest.approx(
                1.0, abs=1e-9
            )
            assert majorant_transform(eq_pair, eq_pair.psi, y) == pytest.approx(
                y, rel=1e-9
            )

    def test_periodic_function_scaling_law(self, eq_pair):
        def periodic_h(x):
            return 2.0 + np.sin(2 * np.pi * np.asarray(x, dtype=float))

        g = eq_pair.gamma_decay
        for y in (0.5, 1.3, 3.1):
            lhs = majorant_transform(eq_pair, periodic_h, y / g**2)
            rhs = majorant_transform(eq_pair, periodic_h, y) / g
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_inverse_of_ratio(self, eq_pair):
        xs = np.linspace(-1.5, 2.5, 41)
        back = eq_pair.ratio_inverse(eq_pair.ratio(xs))
        assert np.max(np.abs(back - xs)) < 1e-9


def brute_force_hull(y, v, queries):
    """Smallest value at each query of any line that majorizes all points
    (with endpoints floored at zero), found by scanning all point pairs."""
    y = np.asarray(y, float)
    v = np.asarray(v, float)
    y = np.concatenate([y, [y.min(), y.max()]])
    v = np.concatenate([v, [max(v[np.argmin(y[:-2])], 0.0),
                            max(v[np.argmax(y[:-2])], 0.0)]])
    out = []
    for q in queries:
        best = np.inf
        for i in range(len(y)):
            for j in range(len(y)):
                if y[i] >= y[j]:
                    continue
                slope = (v[j] - v[i]) / (y[j] - y[i])
                line = v[i] + slope * (y - y[i])
                if np.all(line >= v - 1e-12):
                    best = min(best, v[i] + slope * (q - y[i]))
        out.append(best)
    return np.asarray(out)


class TestConcaveMajorant:
    def test_reference_points(self):
        hy, hv = upper_concave_hull(
            np.array([1.0, 2, 3, 4, 5]), np.array([0.0, 1, 0, 3, 0])
        )
        assert np.interp(2.0, hy, hv) == pytest.approx(1.0)
        assert np.interp(3.0, hy, hv) == pytest.approx(2.0)

    def test_against_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            y = np.sort(rng.uniform(0.5, 5.0, 9))
            v = rng.uniform(-1.0, 2.0, 9)
            hy, hv = upper_concave_hull(y, v)
            queries = np.linspace(y[0], y[-1], 17)
            want = brute_force_hull(y, v, queries)
            assert np.allclose(np.interp(queries, hy, hv), want, atol=1e-10)

    def test_all_nonpositive_gives_zero(self, eq_pair):
        g = eq_pair.gamma_decay
        y = np.geomspace(1.0, 1.0 / g**2, 64, endpoint=False)
        v = -np.ones_like(y) * y  # covariant: v(y/g^2) = v(y)/g requires care
        v = -np.sqrt(y)           # -sqrt obeys the scaling law
        m = min_concave_majorant(y, v, g)
        assert np.allclose(m.eval(y), 0.0, atol=1e-12)

    def test_tight_on_covariant_concave_function(self, eq_pair):
        g = eq_pair.gamma_decay
        y = np.geomspace(1.0, 1.0 / g**2, 512, endpoint=False)
        v = np.sqrt(y)  # nonnegative, concave, sqrt(y/g^2) = sqrt(y)/g
        m = min_concave_majorant(y, v, g)
        q = np.geomspace(1.1, 1.0 / g**2 * 0.9, 50)
        assert np.max(np.abs(m.eval(q) - np.sqrt(q))) < 1e-5

    def test_properties_of_output(self, eq_pair):
        g = eq_pair.gamma_decay
        rng = np.random.default_rng(5)
        y = np.geomspace(1.0, 1.0 / g**2, 128, endpoint=False)
        base = rng.uniform(-0.5, 1.0, 128)
        v = base * np.sqrt(y)  # enforce the scaling law across periods
        m = min_concave_majorant(y, v, g)
        assert np.all(m.eval(y) >= v - 1e-10)
        assert np.all(m.eval(y) >= -1e-12)
        slopes = np.diff(m.hull_v) / np.diff(m.hull_y)
        assert np.all(np.diff(slopes) <= 1e-10)

    def test_scaling_law_of_output(self, eq_pair):
        g = eq_pair.gamma_decay
        y = np.geomspace(1.0, 1.0 / g**2, 128, endpoint=False)
        v = np.sqrt(y) * (1.2 + np.sin(np.log(y)))
        m = min_concave_majorant(y, v, g)
        q = np.geomspace(1.2, 1.0 / g**2 * 0.8, 20)
        assert np.allclose(m.eval(q / g**2), m.eval(q) / g, rtol=1e-9)


class TestValueViaMajorant:
    def test_low_barrier_returns_particular_solution(self, paper_eq, eq_callables,
                                                     eq_pair):
        _, g_ask, _, splits = eq_callables
        f = particular_solution(PARAMS, eq_pair, g_ask, splits=splits)
        low = ShiftGridFn(identity_grid(PARAMS.grid_n).samples - 5.0, "shift")
        v = value_via_majorant(
            PARAMS, "ask", paper_eq.quote_ask, paper_eq.quote_bid, low
        )
        x = np.arange(PARAMS.grid_n) / PARAMS.grid_n
        assert np.max(np.abs(v.samples - f.value(x))) < 1e-9

    def test_matches_value_iteration(self, paper_eq, paper_params):
        for side, v_dp, barrier in (
            ("ask", paper_eq.v_ask, paper_eq.v_bid),
            ("bid", paper_eq.v_bid, paper_eq.v_ask),
        ):
            v_geo = value_via_majorant(
                paper_params, side, paper_eq.quote_ask, paper_eq.quote_bid, barrier
            )
            assert sup_diff(v_geo, v_dp) <= 0.05

    def test_shift_property_of_output(self, paper_eq, paper_params):
        v = value_via_majorant(
            paper_params, "ask", paper_eq.quote_ask, paper_eq.quote_bid,
            paper_eq.v_bid,
        )
        pts = np.linspace(-1.3, 1.7, 50)
        assert np.allclose(v.eval(pts + 1), v.eval(pts) + 1, atol=1e-12)

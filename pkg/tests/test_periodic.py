import numpy as np
import pytest

from tickgame.periodic import (
    QuoteFn,
    ShiftGridFn,
    discrete_derivative,
    identity_grid,
    snap_ceil,
    snap_floor,
    sup_diff,
)

N = 100


class TestShiftGridFn:
    def test_identity_reproduces_itself(self):
        f = identity_grid(N)
        assert f.eval(2.37) == pytest.approx(2.37, abs=1e-14)
        assert f.eval(-0.63) == pytest.approx(-0.63, abs=1e-14)

    def test_periodic_constant(self):
        f = ShiftGridFn(np.full(N, 0.5), mode="periodic")
        assert f.eval(17.3) == 0.5

    def test_node_round_trip_exact(self):
        rng = np.random.default_rng(0)
        f = ShiftGridFn(np.sort(rng.uniform(0, 1, N)), mode="shift")
        nodes = np.arange(N) / N
        assert np.array_equal(f.eval(nodes), f.samples)

    def test_seam_rule_exact_at_nodes(self):
        x = np.arange(N) / N
        f = ShiftGridFn(x + 0.1 * np.sin(2 * np.pi * x), mode="shift")
        for j in (0, 13, 99):
            assert f.eval(j / N + 1.0) - f.eval(j / N) == pytest.approx(1.0, abs=1e-14)

    def test_shift_law_everywhere(self):
        x = np.arange(N) / N
        f = ShiftGridFn(x + 0.1 * np.sin(2 * np.pi * x), mode="shift")
        rng = np.random.default_rng(1)
        pts = rng.uniform(-3, 3, 200)
        for k in (-2, 1, 5):
            assert np.allclose(f.eval(pts + k), f.eval(pts) + k, atol=1e-12)

    def test_periodic_law_everywhere(self):
        x = np.arange(N) / N
        f = ShiftGridFn(np.cos(2 * np.pi * x), mode="periodic")
        rng = np.random.default_rng(2)
        pts = rng.uniform(-3, 3, 200)
        assert np.allclose(f.eval(pts + 4), f.eval(pts), atol=1e-12)

    def test_linear_interpolation_between_nodes(self):
        f = identity_grid(4)  # nodes 0, .25, .5, .75
        assert f.eval(0.125) == pytest.approx(0.125)
        assert f.eval(0.9) == pytest.approx(0.9)  # seam cell interpolates to 1


class TestSupDiff:
    def test_zero_for_equal(self):
        f = identity_grid(N)
        assert sup_diff(f, f) == 0.0

    def test_single_node_bump(self):
        f = identity_grid(N)
        samples = f.samples.copy()
        samples[3] += 0.25
        assert sup_diff(f, ShiftGridFn(samples, "shift")) == pytest.approx(0.25)

    def test_sampled_sine_perturbation(self):
        x = np.arange(N) / N
        f = identity_grid(N)
        g = ShiftGridFn(x + 0.1 * np.sin(2 * np.pi * x), mode="shift")
        assert sup_diff(f, g) == pytest.approx(0.1, abs=1e-3)

    def test_mode_and_size_mismatch(self):
        f = identity_grid(N)
        g = ShiftGridFn(np.zeros(N), mode="periodic")
        with pytest.raises(ValueError):
            sup_diff(f, g)
        with pytest.raises(ValueError):
            sup_diff(f, identity_grid(N + 1))


class TestDiscreteDerivative:
    def test_identity_and_affine(self):
        assert np.allclose(discrete_derivative(identity_grid(N)), 1.0, atol=1e-12)
        f = ShiftGridFn(np.arange(N) / N + 0.3, mode="shift")
        assert np.allclose(discrete_derivative(f), 1.0, atol=1e-12)

    def test_sine_perturbation_extremes(self):
        x = np.arange(N) / N
        f = ShiftGridFn(x + 0.1 * np.sin(2 * np.pi * x), mode="shift")
        d = discrete_derivative(f)
        assert d.max() == pytest.approx(1 + 0.2 * np.pi, abs=1e-2)
        assert d.min() == pytest.approx(1 - 0.2 * np.pi, abs=1e-2)


class TestQuoteFn:
    def test_matches_floor_form(self):
        # QuoteFn(level, b) equals floor(x - b) + level + 1 for all x
        rng = np.random.default_rng(3)
        for level, brk in ((0, 0.93), (-1, 0.08), (2, 1.0)):
            q = QuoteFn(level=level, breakpoint=brk)
            x = rng.uniform(-4, 4, 500)
            x = x[np.abs((x - np.floor(x)) - brk) > 1e-6]
            assert np.array_equal(q.eval(x), np.floor(x - brk) + level + 1)

    def test_ceil_and_floor_patterns(self):
        x = np.arange(N) / N
        ceil_q = QuoteFn(level=0, breakpoint=1.0 / N)
        floor_q = QuoteFn(level=0, breakpoint=1.0)
        assert np.array_equal(ceil_q.eval(x), np.ceil(x))
        assert np.array_equal(floor_q.eval(x), np.floor(x))

    def test_from_node_values(self):
        vals = np.array([1] * 40 + [2] * 60)
        q = QuoteFn.from_node_values(vals, N)
        assert q.level == 1 and q.breakpoint == pytest.approx(0.40)
        assert np.array_equal(q.node_values(N), vals)

    def test_from_node_values_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            QuoteFn.from_node_values(np.array([0] * 50 + [2] * 50), N)  # jump of 2
        with pytest.raises(ValueError):
            QuoteFn.from_node_values(np.array([1] * 50 + [0] * 50), N)  # decreasing
        with pytest.raises(ValueError):
            QuoteFn.from_node_values(
                np.array([0] * 30 + [1] * 30 + [2] * 40), N
            )  # two jumps

    def test_shift_rule(self):
        q = QuoteFn(level=1, breakpoint=0.93)
        rng = np.random.default_rng(4)
        x = rng.uniform(-3, 3, 100)
        assert np.array_equal(q.eval(x + 1), q.eval(x) + 1)


class TestSnapRounding:
    def test_snaps_representation_noise(self):
        assert snap_floor(1.0 - 1e-13) == 1.0
        assert snap_floor(1.0 + 1e-13) == 1.0
        assert snap_floor(0.9999) == 0.0
        assert snap_ceil(2.0 + 1e-13) == 2.0
        assert snap_ceil(2.0001) == 3.0

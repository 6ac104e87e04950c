"""Analytic oracle for the stopping problems, independent of the value
iteration: fundamental solutions of the killed-diffusion ODE, particular
solutions built from them, a coordinate change under which discounted
stopping values become concave hulls, and the smallest nonnegative concave
majorant.

With a 1-periodic kill rate c the ODE (sigma^2/2) f'' = c f has a Floquet
pair: a positive decreasing solution phi with phi(x+1) = gamma*phi(x) and a
positive increasing solution psi with psi(x+1) = psi(x)/gamma, both equal to
1 at 0, where gamma in (0,1) is the smaller eigenvalue of the period map.
That multiplicative structure turns every improper integral over the line
into a geometric series of one-period integrals, which this module sums in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolationError
from .model import ModelParams, intensity, reward_ask, reward_bid
from .periodic import QuoteFn, ShiftGridFn, snap_ceil, snap_floor

__all__ = [
    "FundamentalPair",
    "ParticularSolution",
    "MajorantFn",
    "fundamental_solutions",
    "particular_solution",
    "majorant_transform",
    "upper_concave_hull",
    "min_concave_majorant",
    "value_via_majorant",
]

# Gauss-Legendre 3-point rule on [-1, 1]
_GL_NODES = np.array([-math.sqrt(3.0 / 5.0), 0.0, math.sqrt(3.0 / 5.0)])
_GL_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def _hermite_eval(x_nodes, vals, derivs, x):
    """Piecewise-cubic Hermite interpolation on a sorted node grid."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(x_nodes, x, side="right") - 1, 0, len(x_nodes) - 2)
    x0 = x_nodes[idx]
    dx = x_nodes[idx + 1] - x0
    s = (x - x0) / dx
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return (
        h00 * vals[idx]
        + h10 * dx * derivs[idx]
        + h01 * vals[idx + 1]
        + h11 * dx * derivs[idx + 1]
    )


def _hermite_deriv_eval(x_nodes, vals, derivs, x):
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(x_nodes, x, side="right") - 1, 0, len(x_nodes) - 2)
    x0 = x_nodes[idx]
    dx = x_nodes[idx + 1] - x0
    s = (x - x0) / dx
    s2 = s * s
    d00 = (6 * s2 - 6 * s) / dx
    d10 = 3 * s2 - 4 * s + 1
    d01 = (-6 * s2 + 6 * s) / dx
    d11 = 3 * s2 - 2 * s
    return (
        d00 * vals[idx]
        + d10 * derivs[idx]
        + d01 * vals[idx + 1]
        + d11 * derivs[idx + 1]
    )


@dataclass(frozen=True)
class FundamentalPair:
    """Floquet pair of the killed-diffusion ODE on one period.

    phi decreasing, psi increasing, both positive with value 1 at 0;
    gamma_decay = phi(1) in (0, 1); wronskian = psi'*phi - phi'*psi > 0.
    """

    x_nodes: np.ndarray
    phi_vals: np.ndarray
    phi_derivs: np.ndarray
    psi_vals: np.ndarray
    psi_derivs: np.ndarray
    gamma_decay: float
    wronskian: float
    sigma: float

    def _reduce(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        return x - k, k

    def phi(self, x):
        b, k = self._reduce(x)
        out = self.gamma_decay**k * _hermite_eval(
            self.x_nodes, self.phi_vals, self.phi_derivs, b
        )
        return out if out.ndim else float(out)

    def phi_deriv(self, x):
        b, k = self._reduce(x)
        out = self.gamma_decay**k * _hermite_deriv_eval(
            self.x_nodes, self.phi_vals, self.phi_derivs, b
        )
        return out if out.ndim else float(out)

    def psi(self, x):
        b, k = self._reduce(x)
        out = self.gamma_decay**(-k) * _hermite_eval(
            self.x_nodes, self.psi_vals, self.psi_derivs, b
        )
        return out if out.ndim else float(out)

    def psi_deriv(self, x):
        b, k = self._reduce(x)
        out = self.gamma_decay**(-k) * _hermite_deriv_eval(
            self.x_nodes, self.psi_vals, self.psi_derivs, b
        )
        return out if out.ndim else float(out)

    def ratio(self, x):
        """The strictly increasing coordinate map psi/phi (bijection onto (0, inf))."""
        return self.psi(x) / self.phi(x)

    def ratio_inverse(self, y, tol: float = 1e-12):
        """Invert the coordinate map by period reduction plus bisection."""
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ValueError("the coordinate map is positive")
        g2 = self.gamma_decay**2
        r0 = float(self.ratio(0.0))
        r1 = r0 / g2
        # shift periods so the reduced target lies in [ratio(0), ratio(1))
        k = np.floor(np.log(np.asarray(y) / r0) / np.log(r1 / r0))
        yb = y * g2**k
        lo = np.zeros_like(yb)
        hi = np.ones_like(yb)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.ratio(mid) < yb
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) <= tol:
                break
        out = 0.5 * (lo + hi) + k
        return out if out.ndim else float(out)


# Right-endpoint coefficient evaluations back off by this much so piecewise
# coefficients are read from inside the current piece; must exceed the node
# snap width of the quote curves.
_EDGE_EPS = 1e-8


def _rk4_second_order(q_fn, x0, f0, d0, steps):
    """Integrate f'' = q(x) f through the given step edges, keeping all nodes.

    The right-endpoint coefficient evaluation backs off by _EDGE_EPS so that
    piecewise coefficients are always read from inside the current piece.
    """
    xs = np.asarray(steps, dtype=float)
    n = len(xs)
    vals = np.empty(n)
    ders = np.empty(n)
    vals[0], ders[0] = f0, d0
    f, d = f0, d0
    for i in range(n - 1):
        a, b = xs[i], xs[i + 1]
        hstep = b - a
        qa = q_fn(a)
        qm = q_fn(0.5 * (a + b))
        qb = q_fn(b - _EDGE_EPS)
        k1f = d
        k1d = qa * f
        k2f = d + 0.5 * hstep * k1d
        k2d = qm * (f + 0.5 * hstep * k1f)
        k3f = d + 0.5 * hstep * k2d
        k3d = qm * (f + 0.5 * hstep * k2f)
        k4f = d + hstep * k3d
        k4d = qb * (f + hstep * k3f)
        f = f + hstep * (k1f + 2 * k2f + 2 * k3f + k4f) / 6.0
        d = d + hstep * (k1d + 2 * k2d + 2 * k3d + k4d) / 6.0
        vals[i + 1], ders[i + 1] = f, d
    return vals, ders


def _step_grid(n_panels: int, splits) -> np.ndarray:
    base = np.linspace(0.0, 1.0, n_panels + 1)
    extra = [s % 1.0 for s in splits if 1e-12 < s % 1.0 < 1.0 - 1e-12]
    grid = np.unique(np.concatenate([base, np.asarray(extra, dtype=float)]))
    return grid


def fundamental_solutions(params: ModelParams, c_fn, splits=(),
                          substeps: int = 2) -> FundamentalPair:
    """Build the Floquet pair for a 1-periodic kill rate.

    Args:
        c_fn: vectorized 1-periodic intensity, valued in [c_l, 2*lam].
        splits: known discontinuity locations of c_fn inside (0, 1); the
            integrator breaks its steps there.
        substeps: RK4 steps per model grid interval.

    Raises:
        InvariantViolationError: the period map has no eigenvalue pair
            (gamma, 1/gamma) with gamma in (0,1), or the computed pair is
            not positive/monotone (malformed c_fn).
    """
    sigma = params.sigma

    def q_fn(x):
        return 2.0 * float(c_fn(x)) / sigma**2

    xs = _step_grid(substeps * params.grid_n, splits)
    u1_vals, u1_ders = _rk4_second_order(q_fn, 0.0, 1.0, 0.0, xs)
    u2_vals, u2_ders = _rk4_second_order(q_fn, 0.0, 0.0, 1.0, xs)
    m00, m01 = u1_vals[-1], u2_vals[-1]
    trace = m00 + u2_ders[-1]
    disc = trace * trace - 4.0
    if trace <= 2.0 or disc <= 0.0 or m01 <= 0.0:
        raise InvariantViolationError(
            "period map has no real eigenvalue pair (gamma, 1/gamma) in (0,1); "
            "the intensity function is malformed"
        )
    gamma = 2.0 / (trace + math.sqrt(disc))
    slope_phi = (gamma - m00) / m01
    slope_psi = (1.0 / gamma - m00) / m01
    phi_vals = u1_vals + slope_phi * u2_vals
    phi_ders = u1_ders + slope_phi * u2_ders
    psi_vals = u1_vals + slope_psi * u2_vals
    psi_ders = u1_ders + slope_psi * u2_ders
    if np.any(phi_vals <= 0) or np.any(psi_vals <= 0):
        raise InvariantViolationError("fundamental solutions must stay positive")
    if np.any(phi_ders >= 0) or np.any(psi_ders <= 0):
        raise InvariantViolationError(
            "phi must be strictly decreasing and psi strictly increasing"
        )
    wron = slope_psi - slope_phi
    return FundamentalPair(
        x_nodes=xs,
        phi_vals=phi_vals,
        phi_derivs=phi_ders,
        psi_vals=psi_vals,
        psi_derivs=psi_ders,
        gamma_decay=gamma,
        wronskian=wron,
        sigma=sigma,
    )


def _panel_integrals(edges, integrand):
    """Gauss-Legendre 3-point integral of ``integrand`` over each panel."""
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    total = np.zeros_like(a)
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        total += weight * integrand(mid + node * half)
    return total * half


@dataclass(frozen=True)
class ParticularSolution:
    """Solution of (sigma^2/2) f'' - c f = -g, extended from one period by
    the shift rule (model rewards) or periodically (relative rewards)."""

    x_nodes: np.ndarray
    vals: np.ndarray
    derivs: np.ndarray
    extension: str = "shift"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        out = _hermite_eval(self.x_nodes, self.vals, self.derivs, x - k)
        if self.extension == "shift":
            out = out + k
        return out if out.ndim else float(out)

    __call__ = value

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        out = _hermite_deriv_eval(self.x_nodes, self.vals, self.derivs, x - k)
        return out if out.ndim else float(out)


# Truncation for the period series: stop once the geometric tail bound of the
# remaining terms drops below this.
_SERIES_TOL = 1e-12
_SERIES_CAP = 2000


def particular_solution(params: ModelParams, pair: FundamentalPair, g_fn,
                        splits=(), extension: str = "shift") -> ParticularSolution:
    """Green's-function solution f = (2/(sigma^2 W)) (phi int_-inf^x psi g
    + psi int_x^inf phi g).

    The improper integrals are summed as a series over periods: the k-th
    period away contributes gamma^k times a one-period integral with g read
    at its actual (shifted) argument, truncated when the geometric tail
    bound falls below 1e-12.

    Args:
        extension: "shift" when g/c gains one per period (the model rewards),
            "periodic" when g/c is 1-periodic; controls how the returned
            function extends beyond the base period.
    """
    if extension not in ("shift", "periodic"):
        raise ValueError("extension must be 'shift' or 'periodic'")
    gamma = pair.gamma_decay
    xs = pair.x_nodes

    # panel edges for the one-period windows [x-1, x] and [x, x+1], refined
    # at the jump residues of g and c (jumps recur at the same residues in
    # every shifted copy)
    left_edges = np.concatenate([xs - 1.0, xs[1:]])
    right_edges = np.concatenate([xs, xs[1:] + 1.0])
    left_edges = _insert_splits(left_edges, splits, lo=-1.0, hi=1.0)
    right_edges = _insert_splits(right_edges, splits, lo=0.0, hi=2.0)

    def window_sums(edges, lo_is_left):
        """Per-node window integrals of the full period series."""
        n_nodes = len(xs)
        if lo_is_left:
            i0 = np.searchsorted(edges, xs - 1.0)
            i1 = np.searchsorted(edges, xs)
            weight = pair.psi
        else:
            i0 = np.searchsorted(edges, xs)
            i1 = np.searchsorted(edges, xs + 1.0)
            weight = pair.phi
        total = np.zeros(n_nodes)
        scale = 1.0
        prev_mag = None
        for k in range(_SERIES_CAP):
            shift = -float(k) if lo_is_left else float(k)
            panels = _panel_integrals(
                edges, lambda y: weight(y) * np.asarray(g_fn(y + shift), dtype=float)
            )
            prefix = np.concatenate([[0.0], np.cumsum(panels)])
            term = prefix[i1] - prefix[i0]
            total += scale * term
            # tail bound allowing per-period linear growth of the terms
            mag = float(np.max(np.abs(term)))
            growth = abs(mag - prev_mag) if prev_mag is not None else mag
            tail = scale * (
                gamma / (1.0 - gamma) * mag
                + gamma / (1.0 - gamma) ** 2 * growth
            )
            prev_mag = mag
            scale *= gamma
            if tail < _SERIES_TOL:
                break
        else:
            raise InvariantViolationError("period series did not truncate")
        return total

    int_left = window_sums(left_edges, lo_is_left=True)
    int_right = window_sums(right_edges, lo_is_left=False)

    scale = 2.0 / (pair.sigma**2 * pair.wronskian)
    vals = scale * (pair.phi_vals * int_left + pair.psi_vals * int_right)
    ders = scale * (pair.phi_derivs * int_left + pair.psi_derivs * int_right)
    return ParticularSolution(
        x_nodes=xs, vals=vals, derivs=ders, extension=extension
    )


def _insert_splits(edges, splits, lo, hi):
    if not len(splits):
        return edges
    pts = []
    for s in splits:
        base = s % 1.0
        k = math.floor(lo) - 1
        while base + k <= hi:
            if lo + 1e-12 < base + k < hi - 1e-12:
                pts.append(base + k)
            k += 1
    if not pts:
        return edges
    return np.unique(np.concatenate([edges, np.asarray(pts)]))


def majorant_transform(pair: FundamentalPair, h_fn, y):
    """Evaluate (h/phi) at ratio^{-1}(y): the coordinate change under which
    discounted stopping values become concave hulls."""
    x = pair.ratio_inverse(y)
    out = np.asarray(h_fn(x), dtype=float) / pair.phi(x)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MajorantFn:
    """Evaluable concave majorant, valid on one period of the transformed
    domain and extended by the scaling law m(y/gamma^2) = m(y)/gamma."""

    hull_y: np.ndarray
    hull_v: np.ndarray
    y_lo: float
    y_hi: float
    gamma: float

    def eval(self, y):
        y = np.asarray(y, dtype=float)
        g2 = self.gamma**2
        k = np.floor(np.log(y / self.y_lo) / math.log(1.0 / g2))
        yb = y * g2**k
        vb = np.interp(yb, self.hull_y, self.hull_v)
        out = vb * self.gamma ** (-k)
        return out if out.ndim else float(out)

    __call__ = eval


def upper_concave_hull(y, v, floor_at_zero: bool = True):
    """Smallest concave majorant of finitely many points on their y-window.

    With ``floor_at_zero`` the window endpoints are anchored at value >= 0,
    which yields the smallest *nonnegative* concave majorant on the window
    (a concave function above both anchors is nonnegative in between).

    Returns (hull_y, hull_v) vertex arrays.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    order = np.argsort(y)
    y, v = y[order], v[order]
    if floor_at_zero:
        y = np.concatenate([[y[0]], y, [y[-1]]])
        v = np.concatenate([[max(v[0], 0.0)], v, [max(v[-1], 0.0)]])
    # monotone chain, keeping the upper envelope
    hy, hv = [], []
    for yi, vi in zip(y, v):
        if hy and yi == hy[-1]:
            if vi <= hv[-1]:
                continue
            hy.pop()
            hv.pop()
        while len(hy) >= 2:
            cross = (hy[-1] - hy[-2]) * (vi - hv[-2]) - (yi - hy[-2]) * (
                hv[-1] - hv[-2]
            )
            if cross >= 0:
                hy.pop()
                hv.pop()
            else:
                break
        hy.append(yi)
        hv.append(vi)
    return np.asarray(hy), np.asarray(hv)


def min_concave_majorant(y_period, v_period, gamma, periods: int = 5,
                         stability_tol: float = 1e-8) -> MajorantFn:
    """Smallest nonnegative concave majorant of a gamma-covariant sample set.

    Args:
        y_period, v_period: dense samples over one period of the transformed
            domain, satisfying the scaling law v(y/gamma^2) = v(y)/gamma.
        periods: number of consecutive periods (K >= 5) spanned before
            truncating; the result is restricted to the middle period.

    Raises:
        InvariantViolationError: middle-period values move by more than
            ``stability_tol`` when two more periods are added (domain
            truncation too aggressive).
    """
    if periods < 5:
        raise ValueError("need at least 5 periods for a stable truncation")
    y_period = np.asarray(y_period, dtype=float)
    v_period = np.asarray(v_period, dtype=float)

    def build(k_half):
        ys, vs = [], []
        for k in range(-k_half, k_half + 1):
            scale = gamma ** (2 * k)
            ys.append(y_period * scale)
            vs.append(v_period * gamma**k)
        return upper_concave_hull(np.concatenate(ys), np.concatenate(vs))

    k_half = periods // 2
    hy, hv = build(k_half)
    hy2, hv2 = build(k_half + 1)
    probe = y_period
    got = np.interp(probe, hy, hv)
    ref = np.interp(probe, hy2, hv2)
    if np.max(np.abs(got - ref)) > stability_tol:
        raise InvariantViolationError(
            "concave majorant did not stabilize under domain extension"
        )
    return MajorantFn(
        hull_y=hy,
        hull_v=hv,
        y_lo=float(np.min(y_period)),
        y_hi=float(np.max(y_period)),
        gamma=gamma,
    )


def _quote_callables(params: ModelParams, p_a: QuoteFn, p_b: QuoteFn):
    def c_fn(x):
        return intensity(params, p_a.eval(x), p_b.eval(x), x)

    def g_ask(x):
        return reward_ask(params, p_a.eval(x), p_b.eval(x), x)

    def g_bid(x):
        return reward_bid(params, p_a.eval(x), p_b.eval(x), x)

    splits = [p_a.breakpoint, p_b.breakpoint]
    return c_fn, g_ask, g_bid, splits


def value_via_majorant(params: ModelParams, side: str, p_a: QuoteFn,
                       p_b: QuoteFn, barrier: ShiftGridFn,
                       periods: int = 5) -> ShiftGridFn:
    """Stopping value by the analytic route: transform the rounded barrier
    net of the particular solution, take the smallest nonnegative concave
    majorant, and map back.

    Returns the value sampled on the model grid, for direct comparison with
    the value-iteration solver.
    """
    if side not in ("ask", "bid"):
        raise ValueError("side must be 'ask' or 'bid'")
    c_fn, g_ask, g_bid, splits = _quote_callables(params, p_a, p_b)
    g_fn = g_ask if side == "ask" else g_bid
    pair = fundamental_solutions(params, c_fn, splits=splits)
    part = particular_solution(params, pair, g_fn, splits=splits)

    xf = pair.x_nodes[:-1]
    phi_f = pair.phi_vals[:-1]
    if side == "ask":
        u = snap_floor(barrier.eval(xf)) - part.vals[:-1]
    else:
        u = part.vals[:-1] - snap_ceil(barrier.eval(xf))
    y_f = pair.psi_vals[:-1] / phi_f
    hull = min_concave_majorant(y_f, u / phi_f, pair.gamma_decay, periods=periods)

    n = params.grid_n
    x = np.arange(n) / n
    phi_x = pair.phi(x)
    hull_x = hull.eval(pair.ratio(x))
    f_x = part.value(x)
    if side == "ask":
        v = f_x + phi_x * hull_x
    else:
        v = f_x - phi_x * hull_x
    return ShiftGridFn(v, mode="shift")

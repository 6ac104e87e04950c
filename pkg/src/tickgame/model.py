"""Model primitives: order-flow intensity, running rewards, admissible quote sets.

Prices are measured in ticks, so quotes live on the integer grid.  The
external order flow arrives at rate ``lam``; an arriving order is a buy if
the arriving trader's reservation price ``x + xi`` is at or above the ask
quote, a sell if at or below the bid quote.  ``xi`` is drawn from the noise
distribution.  After an external trade the remaining strategic inventory is
marked to the nearest tick of ``x + alpha * xi`` (floor on the sell side,
ceiling on the buy side), which is what the marking integrals compute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "InvalidParamsError",
    "NoiseDist",
    "uniform_noise",
    "ModelParams",
    "intensity",
    "mark_integral_bid",
    "mark_integral_ask",
    "reward_ask",
    "reward_bid",
    "admissible_ask_set",
    "admissible_bid_set",
]


class InvalidParamsError(ValueError):
    """Raised when model parameters violate a structural constraint."""


# Number of grid points used for the numeric monotonicity check of a
# custom noise distribution.
_NOISE_CHECK_POINTS = 1000


@dataclass(frozen=True)
class NoiseDist:
    """Reservation-price noise distribution.

    Attributes:
        kind: family tag; "uniform" is the built-in reference family.
        halfwidth: support bound; the density lives inside
            [-halfwidth, halfwidth] ticks.
        cdf: vectorized distribution function.
        pdf: vectorized density.
        ppf: vectorized quantile function (used by the simulator).
    """

    kind: str
    halfwidth: float
    cdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    pdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    ppf: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise InvalidParamsError("noise halfwidth must be positive")
        if self.kind != "uniform":
            _check_noise_assumptions(self)


def _check_noise_assumptions(dist: NoiseDist) -> None:
    """Numeric check of the hazard-monotonicity and mean-zero requirements.

    On the interior of the support, (1-F)/f must be non-increasing and F/f
    non-decreasing; the support must sit inside [-halfwidth, halfwidth] and
    the mean must be zero.
    """
    c0 = dist.halfwidth
    y = np.linspace(-c0, c0, _NOISE_CHECK_POINTS + 1)
    f = np.asarray(dist.pdf(y), dtype=float)
    big_f = np.asarray(dist.cdf(y), dtype=float)
    if np.any(f < -1e-12):
        raise InvalidParamsError("noise density must be nonnegative")
    if not (abs(big_f[0]) < 1e-9 and abs(big_f[-1] - 1.0) < 1e-9):
        raise InvalidParamsError(
            "noise support must be contained in [-halfwidth, halfwidth]"
        )
    interior = f > 1e-12
    up = (1.0 - big_f[interior]) / f[interior]
    dn = big_f[interior] / f[interior]
    if np.any(np.diff(up) > 1e-9):
        raise InvalidParamsError("(1-F)/f must be non-increasing on the support")
    if np.any(np.diff(dn) < -1e-9):
        raise InvalidParamsError("F/f must be non-decreasing on the support")
    mean = np.trapezoid(y * f, y)
    if abs(mean) > 1e-6:
        raise InvalidParamsError("noise distribution must have mean zero")


def uniform_noise(halfwidth: float = 1.2) -> NoiseDist:
    """Uniform noise on [-halfwidth, halfwidth]."""
    c0 = float(halfwidth)
    if not c0 > 0:
        raise InvalidParamsError("noise halfwidth must be positive")

    def cdf(y):
        return np.clip((np.asarray(y, dtype=float) + c0) / (2.0 * c0), 0.0, 1.0)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) <= c0, 1.0 / (2.0 * c0), 0.0)

    def ppf(q):
        return (2.0 * np.asarray(q, dtype=float) - 1.0) * c0

    return NoiseDist(kind="uniform", halfwidth=c0, cdf=cdf, pdf=pdf, ppf=ppf)


@dataclass(frozen=True)
class ModelParams:
    """All scalar model inputs plus solver tolerances.

    ``c_l`` is the intensity floor defining the admissible quote sets; the
    admissible sets are nonempty only for ``0 < c_l < 2 * lam``.
    ``reward_form`` selects how the running reward enters the discrete
    Bellman recursion ("g_dt", the default locked by the Monte-Carlo
    arbitration, or the literal "g_over_c" reading).
    """

    lam: float = 1.0
    sigma: float = 1.0
    alpha: float = 0.9
    c_l: float = 0.1
    noise: NoiseDist = field(default_factory=uniform_noise)
    grid_n: int = 100
    tol_inner: float = 1e-9
    tol_outer: float = 1e-7
    max_inner_iters: int = 0  # 0 means "use the scaled default", see below
    max_outer_iters: int = 200
    reward_form: str = "g_dt"

    def __post_init__(self):
        if not (self.lam > 0 and self.sigma > 0):
            raise InvalidParamsError("lam and sigma must be positive")
        if not 0 < self.alpha < 1:
            raise InvalidParamsError("alpha must lie in (0, 1)")
        if not 0 < self.c_l < 2 * self.lam:
            raise InvalidParamsError("need 0 < c_l < 2*lam, else no admissible quotes")
        if self.grid_n < 2:
            raise InvalidParamsError("grid_n must be at least 2")
        if not (self.tol_inner > 0 and self.tol_outer > 0):
            raise InvalidParamsError("tolerances must be positive")
        if self.reward_form not in ("g_dt", "g_over_c"):
            raise InvalidParamsError("reward_form must be 'g_dt' or 'g_over_c'")
        if self.max_inner_iters == 0:
            # Relaxation needs ~sigma^2 * N^2 sweeps; 200*N^2 covers sigma=1
            # with a wide margin and the factor keeps larger sigma covered.
            object.__setattr__(
                self,
                "max_inner_iters",
                int(200 * self.grid_n**2 * max(1.0, self.sigma**2)),
            )

    @property
    def c_u(self) -> float:
        """Upper bound of the order-flow intensity."""
        return 2.0 * self.lam

    @property
    def quote_band(self) -> float:
        """Bound on |quote - x| for optimal quotes: halfwidth + 1."""
        return self.noise.halfwidth + 1.0


def intensity(params: ModelParams, p_a, p_b, x):
    """Order-flow rate lam*((1 - F(p_a - x)) + F(p_b - x)); lies in [0, 2*lam]."""
    cdf = params.noise.cdf
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    x = np.asarray(x, dtype=float)
    out = params.lam * ((1.0 - cdf(p_a - x)) + cdf(p_b - x))
    return out if out.ndim else float(out)


def _floor_step_integral(params: ModelParams, x, lo, hi):
    """Integral of floor(x + alpha*y) dF(y) over [lo, hi], elementwise.

    The integrand is a step function of y; the integral is an exact sum of
    level * F-mass over the pieces between the integer crossings of
    x + alpha*y.
    """
    cdf = params.noise.cdf
    a = params.alpha
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.zeros(np.broadcast(x, lo, hi).shape)
    xb, lob, hib = np.broadcast_arrays(x, lo, hi)
    nonempty = hib > lob
    if not np.any(nonempty):
        return out if out.ndim else float(out)
    k_min = int(np.floor(np.min(xb[nonempty] + a * lob[nonempty])))
    k_max = int(np.floor(np.max(xb[nonempty] + a * hib[nonempty])))
    for k in range(k_min, k_max + 1):
        # floor(x + alpha*y) == k for y in [(k - x)/a, (k + 1 - x)/a)
        seg_lo = np.maximum(lob, (k - xb) / a)
        seg_hi = np.minimum(hib, (k + 1 - xb) / a)
        mass = np.where(seg_hi > seg_lo, cdf(seg_hi) - cdf(seg_lo), 0.0)
        out = out + k * mass
    return out if out.ndim else float(out)


def _ceil_step_integral(params: ModelParams, x, lo, hi):
    """Integral of ceil(x + alpha*y) dF(y) over [lo, hi], elementwise."""
    cdf = params.noise.cdf
    a = params.alpha
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.zeros(np.broadcast(x, lo, hi).shape)
    xb, lob, hib = np.broadcast_arrays(x, lo, hi)
    nonempty = hib > lob
    if not np.any(nonempty):
        return out if out.ndim else float(out)
    k_min = int(np.ceil(np.min(xb[nonempty] + a * lob[nonempty])))
    k_max = int(np.ceil(np.max(xb[nonempty] + a * hib[nonempty])))
    for k in range(k_min, k_max + 1):
        # ceil(x + alpha*y) == k for y in ((k - 1 - x)/a, (k - x)/a]
        seg_lo = np.maximum(lob, (k - 1 - xb) / a)
        seg_hi = np.minimum(hib, (k - xb) / a)
        mass = np.where(seg_hi > seg_lo, cdf(seg_hi) - cdf(seg_lo), 0.0)
        out = out + k * mass
    return out if out.ndim else float(out)


def mark_integral_bid(params: ModelParams, p_b, x):
    """Expected sell-side mark: integral of floor(x + alpha*y) dF(y), y <= p_b - x."""
    c0 = params.noise.halfwidth
    p_b = np.asarray(p_b, dtype=float)
    x = np.asarray(x, dtype=float)
    hi = np.minimum(p_b - x, c0)
    return _floor_step_integral(params, x, -c0, hi)


def mark_integral_ask(params: ModelParams, p_a, x):
    """Expected buy-side mark: integral of ceil(x + alpha*y) dF(y), y >= p_a - x."""
    c0 = params.noise.halfwidth
    p_a = np.asarray(p_a, dtype=float)
    x = np.asarray(x, dtype=float)
    lo = np.maximum(p_a - x, -c0)
    return _ceil_step_integral(params, x, lo, c0)


def reward_ask(params: ModelParams, p_a, p_b, x):
    """Seller's expected reward rate: lam*(p_a*(1 - F(p_a - x)) + mark_bid)."""
    cdf = params.noise.cdf
    p_a = np.asarray(p_a, dtype=float)
    x = np.asarray(x, dtype=float)
    out = params.lam * (
        p_a * (1.0 - cdf(p_a - x)) + mark_integral_bid(params, p_b, x)
    )
    return out if np.ndim(out) else float(out)


def reward_bid(params: ModelParams, p_a, p_b, x):
    """Buyer's expected cost rate: lam*(p_b*F(p_b - x) + mark_ask)."""
    cdf = params.noise.cdf
    p_b = np.asarray(p_b, dtype=float)
    x = np.asarray(x, dtype=float)
    out = params.lam * (
        p_b * cdf(p_b - x) + mark_integral_ask(params, p_a, x)
    )
    return out if np.ndim(out) else float(out)


def admissible_ask_set(params: ModelParams, x: float) -> np.ndarray:
    """Ascending integers p with 1 - F(p - x) >= c_l/(2*lam).

    Truncated from below at floor(x - (halfwidth + 1)): quotes below that are
    strictly dominated (a sale is already certain), so no optimizer is lost.
    """
    x = float(x)
    cdf = params.noise.cdf
    thresh = params.c_l / (2.0 * params.lam)
    lo = math.floor(x - params.quote_band)
    hi = math.ceil(x + params.quote_band)
    cand = np.arange(lo, hi + 1)
    keep = (1.0 - cdf(cand - x)) >= thresh
    out = cand[keep]
    if out.size == 0:
        raise InvalidParamsError(f"empty admissible ask set at x={x}")
    return out


def admissible_bid_set(params: ModelParams, x: float) -> np.ndarray:
    """Ascending integers p with F(p - x) >= c_l/(2*lam); mirror of the ask set."""
    x = float(x)
    cdf = params.noise.cdf
    thresh = params.c_l / (2.0 * params.lam)
    lo = math.floor(x - params.quote_band)
    hi = math.ceil(x + params.quote_band)
    cand = np.arange(lo, hi + 1)
    keep = cdf(cand - x) >= thresh
    out = cand[keep]
    if out.size == 0:
        raise InvalidParamsError(f"empty admissible bid set at x={x}")
    return out

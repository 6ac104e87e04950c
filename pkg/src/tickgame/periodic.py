"""Grid representations of 1-shift and 1-periodic functions on the real line.

A value function in this model satisfies f(x+1) = f(x) + 1 ("shift" mode),
so it is fully described by its samples on one unit interval; relative
quantities such as f(x) - x are 1-periodic ("periodic" mode).  Evaluation
anywhere on the line reduces to the base period plus an integer offset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ShiftGridFn", "QuoteFn", "identity_grid", "sup_diff", "discrete_derivative"]

# Snap tolerance for "this float is a grid node / an integer" decisions.
# Guards against representation noise when values sit exactly on the seam.
SNAP = 1e-9


def snap_floor(v, tol: float = 1e-12):
    """Floor with snapping: values within tol of an integer floor to it."""
    v = np.asarray(v, dtype=float)
    r = np.round(v)
    out = np.where(np.abs(v - r) <= tol, r, np.floor(v))
    return out if out.ndim else float(out)


def snap_ceil(v, tol: float = 1e-12):
    """Ceiling with snapping: values within tol of an integer round to it."""
    v = np.asarray(v, dtype=float)
    r = np.round(v)
    out = np.where(np.abs(v - r) <= tol, r, np.ceil(v))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ShiftGridFn:
    """Function sampled at the N nodes j/N of [0, 1).

    mode "shift" extends by f(x+1) = f(x) + 1, mode "periodic" by
    f(x+1) = f(x).  Between nodes the function is linear, so monotone
    samples give a monotone function.
    """

    samples: np.ndarray
    mode: str = "shift"

    def __post_init__(self):
        samples = np.ascontiguousarray(np.asarray(self.samples, dtype=float))
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-d array with at least 2 entries")
        if self.mode not in ("shift", "periodic"):
            raise ValueError("mode must be 'shift' or 'periodic'")
        object.__setattr__(self, "samples", samples)
        samples.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def offset(self) -> float:
        """Value gained per unit shift: 1 in shift mode, 0 in periodic mode."""
        return 1.0 if self.mode == "shift" else 0.0

    def eval(self, x):
        """Evaluate at scalar or array x by seam reduction + linear interpolation.

        Exact at grid nodes: positions within SNAP of a node (in node units)
        collapse onto it.
        """
        x = np.asarray(x, dtype=float)
        n = self.n
        t = x * n
        j = np.floor(t)
        frac = t - j
        # collapse t values a hair below a node onto the node
        bump = frac > 1.0 - SNAP
        j = j + bump
        frac = np.where(bump | (frac < SNAP), 0.0, frac)
        period, j_in = np.divmod(j.astype(np.int64), n)
        s = self.samples
        left = s[j_in]
        nxt = j_in + 1
        wrap = nxt == n
        nxt = np.where(wrap, 0, nxt)
        right = s[nxt] + np.where(wrap, self.offset, 0.0)
        out = left + frac * (right - left) + period * self.offset
        return out if out.ndim else float(out)

    __call__ = eval

    def shifted_nodes(self, k: int) -> np.ndarray:
        """Samples rotated by k grid nodes: values of x -> f(x + k/n) at the nodes."""
        n = self.n
        k = k % n
        rolled = np.concatenate([self.samples[k:], self.samples[:k] + self.offset])
        return rolled

    def with_samples(self, samples) -> "ShiftGridFn":
        return ShiftGridFn(np.asarray(samples, dtype=float), self.mode)


def identity_grid(n: int) -> ShiftGridFn:
    """The identity function x -> x as a shift-mode grid function."""
    return ShiftGridFn(np.arange(n) / n, mode="shift")


def sup_diff(f: ShiftGridFn, g: ShiftGridFn) -> float:
    """Sup-norm distance over the line, which reduces to the node maximum."""
    if f.mode != g.mode:
        raise ValueError("sup_diff requires matching modes")
    if f.n != g.n:
        raise ValueError("sup_diff requires matching grid sizes")
    return float(np.max(np.abs(f.samples - g.samples)))


def discrete_derivative(f: ShiftGridFn) -> np.ndarray:
    """Forward differences times N, including the seam node."""
    s = f.samples
    n = f.n
    out = np.empty(n)
    out[:-1] = (s[1:] - s[:-1]) * n
    out[-1] = (s[0] + f.offset - s[-1]) * n
    return out


@dataclass(frozen=True)
class QuoteFn:
    """Integer quote curve: one unit step per period, extended by the shift rule.

    Equals ``level`` on [0, breakpoint) and ``level + 1`` on [breakpoint, 1),
    with breakpoint in (0, 1] (breakpoint == 1 means no jump inside the
    period).
    """

    level: int
    breakpoint: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.breakpoint <= 1.0:
            raise ValueError("breakpoint must lie in (0, 1]")
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "breakpoint", float(self.breakpoint))

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        frac = x - k
        # same node-snapping convention as ShiftGridFn
        bump = frac > 1.0 - SNAP
        k = k + bump
        frac = np.where(bump, 0.0, frac)
        out = self.level + k + (frac >= self.breakpoint - SNAP)
        return out if out.ndim else float(out)

    __call__ = eval

    def node_values(self, n: int) -> np.ndarray:
        """Integer values at the grid nodes j/n of [0, 1)."""
        return self.eval(np.arange(n) / n).astype(np.int64)

    @staticmethod
    def from_node_values(values: np.ndarray, n: int) -> "QuoteFn":
        """Compress per-node integers into a QuoteFn; validates the step shape.

        Requires values nondecreasing across the period with total rise
        exactly one (the shift rule forces one unit jump per period).
        """
        values = np.asarray(values)
        if values.size != n:
            raise ValueError("need one value per grid node")
        d = np.diff(values)
        if np.any(d < 0) or np.any(d > 1) or d.sum() > 1:
            raise ValueError("node values are not a single nondecreasing unit step")
        jumps = np.nonzero(d == 1)[0]
        if jumps.size == 0:
            return QuoteFn(level=int(values[0]), breakpoint=1.0)
        return QuoteFn(level=int(values[0]), breakpoint=(jumps[0] + 1) / n)

"""Render the solver's CSV exports into the three standard figures.

Figure kinds:
  values_quotes  equilibrium value functions and posted quotes against the
                 factor level (two monotone curves meeting at integers,
                 integer step quotes alongside);
  phase_curve    the (seller value, buyer value) curve against the integer
                 staircase boundary of the stopping set;
  inefficiency   tick-size inefficiency from a sweep run.

Node data covers one period [0, 1); the display extends it to two periods
with the shift rule (value and quote gain one per period).  Rendering is a
pure function of the CSV bytes and the spec, so repeated runs produce
byte-identical images.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["SchemaError", "FigureSpec", "render", "load_csv"]

ASK_COLOR = "red"
BID_COLOR = "blue"
FIGSIZE = (8.0, 4.0)
DPI = 150

KINDS = ("values_quotes", "phase_curve", "inefficiency")

_REQUIRED = {
    "values_quotes": ("x", "v_ask", "v_bid", "quote_ask", "quote_bid", "stopping"),
    "phase_curve": ("x", "v_ask", "v_bid"),
    "inefficiency": ("tick_size", "inefficiency", "converged"),
}


class SchemaError(ValueError):
    """Input CSV does not carry the columns the figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    xlim: tuple | None = None
    ylim: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def load_csv(path, required):
    """Columns as float arrays; raises SchemaError naming a missing column."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"missing required column {col!r} in {path}")
        rows = list(reader)
    out = {}
    for col in required:
        out[col] = np.array([float(r[col]) for r in rows])
    return out


def _two_periods(x, values, gain=1.0):
    """Extend node data from [0, 1) to [0, 2) by the shift rule."""
    return np.concatenate([x, x + 1.0]), np.concatenate([values, values + gain])


def _values_quotes(data, axes):
    ax_v, ax_q = axes
    x2, va = _two_periods(data["x"], data["v_ask"])
    _, vb = _two_periods(data["x"], data["v_bid"])
    ax_v.plot(x2, vb, color=BID_COLOR, label="buyer value")
    ax_v.plot(x2, va, color=ASK_COLOR, label="seller value")
    stops = np.concatenate([data["x"], data["x"] + 1.0])[
        np.concatenate([data["stopping"], data["stopping"]]) > 0.5
    ]
    ax_v.plot(stops, np.interp(stops, x2, va), "ko", markersize=4,
              label="stopping nodes")
    ax_v.set_xlabel("factor level x (ticks)")
    ax_v.set_ylabel("value (ticks)")
    ax_v.legend(loc="upper left", fontsize=8)

    _, qa = _two_periods(data["x"], data["quote_ask"])
    _, qb = _two_periods(data["x"], data["quote_bid"])
    ax_q.step(x2, qa, where="post", color=ASK_COLOR, label="ask quote")
    ax_q.step(x2, qb, where="post", color=BID_COLOR, label="bid quote")
    ax_q.set_xlabel("factor level x (ticks)")
    ax_q.set_ylabel("posted quote (ticks)")
    ax_q.legend(loc="upper left", fontsize=8)


def _staircase(lo, hi):
    """Boundary of the set where the value interval contains an integer:
    the staircase through the integer corners (n, n)."""
    xs, ys = [], []
    for n in range(int(np.floor(lo)), int(np.ceil(hi)) + 1):
        xs.extend([n - 1.0, n, n])
        ys.extend([n, n, n + 1.0])
    return np.asarray(xs), np.asarray(ys)


def _phase_curve(data, ax):
    va = np.concatenate([data["v_ask"], data["v_ask"] + 1.0])
    vb = np.concatenate([data["v_bid"], data["v_bid"] + 1.0])
    ax.plot(*_staircase(va.min() - 1, va.max() + 1), color=BID_COLOR,
            linewidth=1.0, label="integer staircase")
    ax.plot(va, vb, color=ASK_COLOR, label="(seller, buyer) values")
    ax.set_xlabel("seller value (ticks)")
    ax.set_ylabel("buyer value (ticks)")
    ax.set_aspect("equal")
    ax.legend(loc="upper left", fontsize=8)


def _inefficiency(data, ax):
    ok = data["converged"] > 0.5
    ax.plot(data["tick_size"][ok], data["inefficiency"][ok], "o-",
            color=ASK_COLOR)
    ax.set_xlabel("tick size")
    ax.set_ylabel("inefficiency (price units)")
    ax.set_xlim(left=0.0)
    ax.set_ylim(bottom=0.0)


def render(spec: FigureSpec) -> str:
    """Draw the figure and write a deterministic PNG; returns the path."""
    data = load_csv(spec.csv_path, _REQUIRED[spec.kind])
    if spec.kind == "values_quotes":
        fig, axes = plt.subplots(1, 2, figsize=FIGSIZE, dpi=DPI)
        _values_quotes(data, axes)
    elif spec.kind == "phase_curve":
        fig, ax = plt.subplots(figsize=(FIGSIZE[1], FIGSIZE[1]), dpi=DPI)
        _phase_curve(data, ax)
    else:
        fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
        _inefficiency(data, ax)
    for ax in np.atleast_1d(fig.axes):
        if spec.xlim is not None:
            ax.set_xlim(*spec.xlim)
        if spec.ylim is not None:
            ax.set_ylim(*spec.ylim)
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="png")
    plt.close(fig)
    return str(out)

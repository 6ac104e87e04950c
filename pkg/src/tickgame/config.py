"""Flat key=value configuration files with dotted namespaces.

The format is deliberately dependency-free: one ``section.key = value`` per
line, ``#`` comments, blank lines ignored.  Unknown keys are rejected.  All
defaults are materialized into the resolved mapping so an echoed config is
complete and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidParamsError
from .model import ModelParams, uniform_noise
from .montecarlo import SimConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Malformed configuration file or invalid parameter combination."""


def _float_list(raw: str):
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _str_list(raw: str):
    return [tok for tok in raw.replace(",", " ").split() if tok]


# key -> (parser, default)
DEFAULTS = {
    "model.lambda": (float, 1.0),
    "model.sigma": (float, 1.0),
    "model.alpha": (float, 0.9),
    "model.c_l": (float, 0.1),
    "noise.kind": (str, "uniform"),
    "noise.halfwidth": (float, 1.2),
    "grid.n": (int, 100),
    "tol.inner": (float, 1e-9),
    "tol.outer": (float, 1e-7),
    "iters.inner_max": (int, 0),   # 0 = scaled default
    "iters.outer_max": (int, 200),
    "dp.reward_form": (str, "g_dt"),
    "equilibrium.update": (str, "gauss_seidel"),
    "mc.n_paths": (int, 200_000),
    "mc.seed": (int, 20240),
    "mc.x0": (float, 0.5),
    "mc.horizon": (float, 0.0),    # 0 = 20 / c_l
    "mc.dt_sim": (float, 0.0),     # 0 = h^2 / (4 sigma^2)
    "mc.batch_size": (int, 32768),
    "sweep.ticks": (_float_list, [0.25, 0.5, 1.0]),
    "verify.checks": (
        _str_list,
        ["dp_vs_geometric", "mc_fa", "mc_payoff", "reward_form"],
    ),
    "verify.fa_paths": (int, 100_000),
    "verify.payoff_paths": (int, 200_000),
    "verify.probes": (_float_list, [0.25, 0.5, 0.75]),
}

_KNOWN_CHECKS = ("dp_vs_geometric", "mc_fa", "mc_payoff", "reward_form")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def model_params(self) -> ModelParams:
        v = self.values
        if v["noise.kind"] != "uniform":
            raise ConfigError(
                f"unsupported noise.kind {v['noise.kind']!r}; 'uniform' is built in"
            )
        try:
            return ModelParams(
                lam=v["model.lambda"],
                sigma=v["model.sigma"],
                alpha=v["model.alpha"],
                c_l=v["model.c_l"],
                noise=uniform_noise(v["noise.halfwidth"]),
                grid_n=v["grid.n"],
                tol_inner=v["tol.inner"],
                tol_outer=v["tol.outer"],
                max_inner_iters=v["iters.inner_max"],
                max_outer_iters=v["iters.outer_max"],
                reward_form=v["dp.reward_form"],
            )
        except InvalidParamsError as exc:
            raise ConfigError(str(exc)) from exc

    def sim_config(self, **overrides) -> SimConfig:
        v = self.values
        kwargs = dict(
            n_paths=v["mc.n_paths"],
            horizon=v["mc.horizon"],
            dt_sim=v["mc.dt_sim"],
            seed=v["mc.seed"],
            x0=v["mc.x0"],
            batch_size=v["mc.batch_size"],
        )
        kwargs.update(overrides)
        try:
            return SimConfig(**kwargs)
        except InvalidParamsError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> dict:
        """Resolved configuration with every default materialized."""
        return dict(sorted(self.values.items()))


def parse_config(path) -> RunConfig:
    """Parse and validate a config file; unknown keys are errors."""
    text = Path(path).read_text()
    values = {k: default for k, (_, default) in DEFAULTS.items()}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw_line!r}")
        key, _, raw_val = line.partition("=")
        key = key.strip()
        raw_val = raw_val.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser, _ = DEFAULTS[key]
        try:
            values[key] = parser(raw_val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if values["dp.reward_form"] not in ("g_dt", "g_over_c"):
        raise ConfigError("dp.reward_form must be g_dt or g_over_c")
    if values["equilibrium.update"] not in ("gauss_seidel", "jacobi"):
        raise ConfigError("equilibrium.update must be gauss_seidel or jacobi")
    for chk in values["verify.checks"]:
        if chk not in _KNOWN_CHECKS:
            raise ConfigError(f"unknown verify check {chk!r}")
    if any(t <= 0 for t in values["sweep.ticks"]):
        raise ConfigError("sweep.ticks must be positive")
    cfg = RunConfig(values=values)
    cfg.model_params()  # validate parameter combination early
    return cfg

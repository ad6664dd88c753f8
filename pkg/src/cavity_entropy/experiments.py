"""Experiment definitions behind the command-line runner.

Each ``run_*`` function takes a validated :class:`ExperimentConfig` and
returns ``(header, rows, extra)``: CSV column names, data rows, and
experiment-specific manifest fields.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from . import bayes, dynamics, hilbert, infotheory, steady_state

EXPERIMENTS = ("qfunc", "fidelity-contour", "fidelity-curve", "evolve-entropy",
               "mi-sweep", "bayes", "validate")
SEED_ENV = "CAVITY_ENTROPY_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    count: int
    log: bool = False

    def values(self) -> List[float]:
        if self.log:
            return [float(v) for v in np.geomspace(self.start, self.stop, self.count)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.count)]


Scalar = Union[float, Sweep]

_DEFAULTS: Dict[str, Any] = {
    "experiment": None,
    "x": 1.0,
    "n_bar0": 5.0,
    "m": 0.5,
    "f": None,
    "t_end": None,
    "n_out": 201,
    "rtol": dynamics.DEFAULT_RTOL,
    "atol": dynamics.DEFAULT_ATOL,
    "equilibrium_tol": dynamics.DEFAULT_EQUILIBRIUM_TOL,
    "tail_tol": 1e-12,
    "grid_points": 401,
    "grid_half_width": None,
    "n_trials": 100_000,
    "seed": 0,
    "rule": "sample",
    "method": "analytic",
    "out": None,
}
_SWEEPABLE = {"x", "n_bar0", "m", "f"}
_TOLERANCES = ("rtol", "atol", "equilibrium_tol", "tail_tol")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def echo(self) -> Dict[str, Any]:
        out = {}
        for k, v in self.params.items():
            out[k] = v.__dict__.copy() if isinstance(v, Sweep) else v
        out["experiment"] = self.experiment
        return out

    def scalar(self, key) -> float:
        v = self.params[key]
        if isinstance(v, Sweep):
            raise ConfigError(f"{key!r} must be a scalar for {self.experiment}")
        return v

    def values(self, key) -> List[float]:
        v = self.params[key]
        return v.values() if isinstance(v, Sweep) else [v]


def _parse_sweep(key, raw) -> Sweep:
    if set(raw) - {"start", "stop", "count", "log"} or not {"start", "stop", "count"} <= set(raw):
        raise ConfigError(f"sweep {key!r} needs keys start, stop, count[, log]")
    try:
        sw = Sweep(float(raw["start"]), float(raw["stop"]), int(raw["count"]), bool(raw.get("log", False)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep {key!r}: {exc}") from None
    if sw.count < 2 or not sw.start < sw.stop:
        raise ConfigError(f"sweep {key!r} needs count >= 2 and start < stop")
    if sw.log and sw.start <= 0:
        raise ConfigError(f"log sweep {key!r} needs a positive start")
    return sw


def parse_config(raw: Dict[str, Any], experiment: str, env: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Validate a flat JSON config; unknown keys are rejected."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if raw.get("experiment") not in (None, experiment):
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    params = {k: v for k, v in _DEFAULTS.items() if k != "experiment"}
    for key, val in raw.items():
        if key == "experiment":
            continue
        if isinstance(val, dict):
            if key not in _SWEEPABLE:
                raise ConfigError(f"{key!r} cannot be swept")
            params[key] = _parse_sweep(key, val)
        else:
            params[key] = val
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            params["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    _validate(params)
    return ExperimentConfig(experiment, params)


def _validate(p: Dict[str, Any]) -> None:
    def num(key, lo=None, hi=None, lo_open=False, allow_none=False):
        v = p[key]
        if v is None and allow_none:
            return
        vals = v.values() if isinstance(v, Sweep) else [v]
        for x in vals:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or math.isnan(x):
                raise ConfigError(f"{key!r} must be numeric")
            if lo is not None and (x <= lo if lo_open else x < lo):
                raise ConfigError(f"{key!r}={x} below allowed range")
            if hi is not None and x > hi:
                raise ConfigError(f"{key!r}={x} above allowed range")

    num("x", 0.0, 1.0)
    num("n_bar0", 0.0)
    num("m", 0.0, lo_open=True)
    num("f", 0.0, 1.0, allow_none=True)
    num("t_end", 0.0, lo_open=True, allow_none=True)
    num("grid_half_width", 0.0, lo_open=True, allow_none=True)
    for key in _TOLERANCES:
        num(key, 0.0, lo_open=True)
    for key in ("n_out", "grid_points", "n_trials", "seed"):
        if isinstance(p[key], bool) or not isinstance(p[key], int):
            raise ConfigError(f"{key!r} must be an integer")
    if p["n_out"] < 2 or p["grid_points"] < 2 or p["n_trials"] < 1 or p["seed"] < 0:
        raise ConfigError("n_out and grid_points must be >= 2, n_trials >= 1, seed >= 0")
    if p["rule"] not in ("sample", "map"):
        raise ConfigError("rule must be 'sample' or 'map'")
    if p["method"] not in ("analytic", "dynamics"):
        raise ConfigError("method must be 'analytic' or 'dynamics'")
    if p["out"] is not None and not isinstance(p["out"], str):
        raise ConfigError("out must be a path string")


# ---------------------------------------------------------------------------
# helpers


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _inputs(x, n_bar0, m, tail_tol) -> steady_state.SteadyStateInputs:
    return steady_state.SteadyStateInputs.build(x, n_bar0, m, tail_tol)


# ---------------------------------------------------------------------------
# experiments


def run_qfunc(cfg: ExperimentConfig, jobs: int = 1):
    x, n_bar0, m = cfg.scalar("x"), cfg.scalar("n_bar0"), cfg.scalar("m")
    inputs = _inputs(x, n_bar0, m, cfg["tail_tol"])
    alpha = complex(math.sqrt(n_bar0))
    rho = steady_state.final_cavity_state(inputs, alpha)
    half = cfg["grid_half_width"] or abs(alpha) + 5.0
    axis = np.linspace(-half, half, cfg["grid_points"])
    grid = infotheory.husimi_q(rho, axis, axis)
    rows = [(float(re), float(im), float(q))
            for im, qrow in zip(grid.im_axis, grid.values)
            for re, q in zip(grid.re_axis, qrow)]
    return ["re_beta", "im_beta", "q_value"], rows, {"n_max": inputs.n_max,
                                                    "normalization": grid.normalization()}


def _contour_point(args):
    x, n_bar0, m, tail_tol = args
    inputs = _inputs(x, n_bar0, m, tail_tol)
    return (n_bar0, m, steady_state.fidelity_F(inputs), inputs.n_max)


def run_fidelity_contour(cfg: ExperimentConfig, jobs: int = 1):
    x = cfg.scalar("x")
    pts = [(x, n, m, cfg["tail_tol"]) for n in cfg.values("n_bar0") for m in cfg.values("m")]
    res = sorted(_map(_contour_point, pts, jobs))
    rows = [(n, m, F) for n, m, F, _ in res]
    return ["n_bar0", "m", "F"], rows, {"n_max": max(r[3] for r in res)}


def run_fidelity_curve(cfg: ExperimentConfig, jobs: int = 1):
    x, n_bar0 = cfg.scalar("x"), cfg.scalar("n_bar0")
    n_max = hilbert.truncation_dim(n_bar0, cfg["tail_tol"])
    rows = []
    for m in sorted(cfg.values("m")):
        f_sum = steady_state.conditional_fidelity_sum(n_bar0, m, n_max)
        f_th = steady_state.conditional_fidelity_thermo(m)
        rows.append((m, 1.0 - x * (1.0 - f_sum), 1.0 - x * (1.0 - f_th)))
    extra = {"n_max": n_max, "m_min": steady_state.m_min(n_bar0) if n_bar0 > 0 else None}
    return ["m", "F_numeric_sum", "F_thermo"], rows, extra


def run_evolve_entropy(cfg: ExperimentConfig, jobs: int = 1):
    x, n_bar0, m = cfg.scalar("x"), cfg.scalar("n_bar0"), cfg.scalar("m")
    params = dynamics.ModelParams.from_m(m, x, n_bar0, tail_tol=cfg["tail_tol"])
    traj = dynamics.evolve_purified(params, cfg["t_end"], rtol=cfg["rtol"], atol=cfg["atol"],
                                    n_out=cfg["n_out"], equilibrium_tol=cfg["equilibrium_tol"])
    ts = infotheory.entropy_time_series(traj.times, traj.states, x)
    norm = ts.normalized()
    keys = list(infotheory.SERIES_KEYS)
    header = ["t"] + keys + [k + "_norm" for k in keys]
    rows = []
    for i, t in enumerate(ts.times):
        rows.append(tuple([float(t)] + [float(ts.series[k][i]) for k in keys]
                          + [float(norm[k][i]) for k in keys]))
    extra = {"n_max": params.n_max, "s0": ts.s0, "converged_at": traj.converged_at,
             "n_steps": traj.n_steps, "trace_drift": traj.trace_drift}
    return header, rows, extra


def _mi_point(args):
    x, n_bar0, m, method, tail_tol, tols = args
    inputs = _inputs(x, n_bar0, m, tail_tol)
    alpha = complex(math.sqrt(n_bar0))
    if method == "analytic":
        rl = steady_state.equilibrium_rl_state(inputs, alpha)
        i_rl = infotheory.quantum_mutual_information(rl, ([0], [1]))
    else:
        params = dynamics.ModelParams.from_m(m, x, n_bar0, n_max=inputs.n_max)
        traj = dynamics.evolve_purified(params, rtol=tols[0], atol=tols[1], n_out=51)
        i_rl = infotheory.quantum_mutual_information(traj.final, ([1], [2]))
    f = steady_state.conditional_fidelity_sum(n_bar0, m, inputs.n_max)
    return (m, n_bar0, i_rl, infotheory.classical_mi_measurement(x, f), inputs.n_max)


def run_mi_sweep(cfg: ExperimentConfig, jobs: int = 1):
    x = cfg.scalar("x")
    tols = (cfg["rtol"], cfg["atol"])
    pts = [(x, n, m, cfg["method"], cfg["tail_tol"], tols)
           for n in cfg.values("n_bar0") for m in cfg.values("m")]
    res = sorted(_map(_mi_point, pts, jobs))
    rows = [r[:4] for r in res]
    return ["m", "n_bar0", "I_RL_equilibrium", "I_classical"], rows, {
        "n_max": max(r[4] for r in res), "method": cfg["method"], "s0": infotheory.binary_entropy(x)}


def run_bayes(cfg: ExperimentConfig, jobs: int = 1):
    x = cfg.scalar("x")
    if cfg["f"] is not None:
        fs = [(None, f) for f in cfg.values("f")]
    else:
        fs = [(m, steady_state.conditional_fidelity_thermo(m)) for m in cfg.values("m")]
    rows = []
    rng = np.random.default_rng(cfg["seed"])
    for m, f in sorted(fs, key=lambda t: t[1]):
        sim = bayes.simulate(f, x, cfg["n_trials"], cfg["seed"], cfg["rule"], rng=rng)
        closed = bayes.p_correct_sampling(x, f) if cfg["rule"] == "sample" else bayes.p_correct_map(f, x)
        rows.append((float("nan") if m is None else m, f, closed, sim.rate, sim.stderr))
    return ["m", "f", "p_correct", "mc_rate", "mc_stderr"], rows, {"seed": cfg["seed"], "rule": cfg["rule"]}


def run_validate(cfg: ExperimentConfig, jobs: int = 1):
    from .validation import run_checks

    checks = run_checks(cfg)
    rows = [(c.name, int(c.passed), c.value, c.tolerance) for c in checks]
    return ["check", "passed", "value", "tolerance"], rows, {"checks": [c.as_dict() for c in checks]}


RUNNERS = {
    "qfunc": run_qfunc,
    "fidelity-contour": run_fidelity_contour,
    "fidelity-curve": run_fidelity_curve,
    "evolve-entropy": run_evolve_entropy,
    "mi-sweep": run_mi_sweep,
    "bayes": run_bayes,
    "validate": run_validate,
}

"""Invariant and oracle checks run by ``cavity-entropy validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import bayes, dynamics, hilbert, infotheory, steady_state


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "value": self.value, "tolerance": self.tolerance}


def _check(name: str, value: float, tol: float, ok: Callable[[float, float], bool] = None) -> Check:
    ok = ok or (lambda v, t: v <= t)
    return Check(name, bool(ok(value, tol)), float(value), float(tol))


def run_checks(cfg) -> List[Check]:
    x = float(cfg.values("x")[0])
    n_bar0 = float(cfg.values("n_bar0")[0])
    m = float(cfg.values("m")[0])
    inputs = steady_state.SteadyStateInputs.build(x, n_bar0, m, cfg["tail_tol"])
    alpha = complex(math.sqrt(n_bar0))
    n_max = inputs.n_max
    out = []

    rc = steady_state.rho_c(alpha, m, n_max)
    final = steady_state.final_cavity_state(inputs, alpha)
    coh = hilbert.coherent_state(alpha, n_max)
    f = steady_state.conditional_fidelity_sum(n_bar0, m, n_max)

    out.append(_check("rho_c_fidelity_equals_sum",
                      abs(np.vdot(coh.amplitudes, rc.matrix @ coh.amplitudes).real - f), 1e-8))
    out.append(_check("fidelity_equals_overlap",
                      abs(steady_state.fidelity_F(inputs)
                          - infotheory.uhlmann_fidelity(coh.to_density(), final)), 1e-8))
    if n_bar0 > 0:
        eta = hilbert.displace(final, alpha)
        out.append(_check("displaced_vacuum_equals_fidelity",
                          abs(eta.matrix[0, 0].real - steady_state.fidelity_F(inputs)), 1e-6))
    n_op = hilbert.number_operator(n_max)
    out.append(_check("intensity_identity",
                      abs(final.expect(n_op).real - steady_state.final_intensity(x, n_bar0)), 1e-6))

    s0 = infotheory.binary_entropy(x)
    s_c = infotheory.von_neumann_entropy(rc)
    s_l = infotheory.von_neumann_entropy(final)
    out.append(_check("mixing_lower_bound", x * s_c - s_l, 1e-8))
    out.append(_check("mixing_upper_bound", s_l - (s0 + x * s_c), 1e-8))

    rl = steady_state.equilibrium_rl_state(inputs, alpha)
    i_rl = infotheory.quantum_mutual_information(rl, ([0], [1]))
    out.append(_check("mi_nonnegative", -i_rl, 1e-8))
    out.append(_check("mi_below_s0", i_rl - s0, 1e-8))

    out.append(_check("m_half_in_range", abs(steady_state.m_half() - 0.09), 0.005))
    th = steady_state.conditional_fidelity_thermo
    out.append(_check("thermo_strong_limit", abs(th(1e-4) / math.sqrt(2 * math.pi * 1e-4) - 1), 0.05))
    out.append(_check("thermo_weak_limit", abs(th(100.0) - (1 - 1 / 400)), 1e-4))

    pc = bayes.p_correct(f)
    out.append(_check("p_correct_at_least_half", 0.5 - pc, 0.0))
    sim = bayes.simulate(f, 0.5, cfg["n_trials"], cfg["seed"], "sample")
    out.append(_check("bayes_monte_carlo", abs(sim.rate - pc) / max(sim.stderr, 1e-12), 3.0))

    # short dynamics check at small photon number keeps the validate run fast
    small = dynamics.ModelParams.from_m(m, x, min(n_bar0, 2.0), tail_tol=cfg["tail_tol"])
    traj = dynamics.evolve(dynamics.initial_state(small), small, rtol=cfg["rtol"], atol=cfg["atol"], n_out=21)
    small_inputs = steady_state.SteadyStateInputs(x, small.n_bar0, m, small.n_max)
    oracle = steady_state.final_cavity_state(small_inputs, small.alpha)
    out.append(_check("dynamics_matches_closed_form",
                      hilbert.trace_distance(hilbert.partial_trace(traj.final, [1]), oracle), 1e-4))
    out.append(_check("trace_drift", traj.trace_drift, 1e-6))
    return out

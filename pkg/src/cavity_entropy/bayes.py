"""Click / no-click inference of the initial particle state.

After displacing the equilibrium cavity field back to the origin, a photon
counter either sees nothing ("no_click") or at least one photon ("click").
A particle that started dark never changes the field, so it never produces a
click; a bright start leaves the vacuum population at the conditional
fidelity ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateEvidence
from .steady_state import conditional_fidelity_thermo

CLICK = "click"
NO_CLICK = "no_click"
OUTCOMES = (CLICK, NO_CLICK)
STARTS = ("b", "d")


def _check_prob(name, v):
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def likelihood(outcome: str, start: str, f: float) -> float:
    """P(outcome | start)."""
    _check_prob("f", f)
    if outcome not in OUTCOMES or start not in STARTS:
        raise ValueError(f"unknown outcome/start {outcome!r}/{start!r}")
    p_no_click = f if start == "b" else 1.0
    return p_no_click if outcome == NO_CLICK else 1.0 - p_no_click


@dataclass(frozen=True)
class PosteriorRow:
    outcome: str
    evidence: float  # P(outcome)
    p_b: float
    p_d: float


def posterior(outcome: str, x: float, f: float) -> PosteriorRow:
    """Bayes update of the prior (x, 1 - x) over (b, d) after one readout."""
    _check_prob("x", x)
    joint_b = likelihood(outcome, "b", f) * x
    joint_d = likelihood(outcome, "d", f) * (1.0 - x)
    evidence = joint_b + joint_d
    if evidence == 0:
        raise DegenerateEvidence(f"outcome {outcome!r} impossible for x={x}, f={f}")
    return PosteriorRow(outcome, evidence, joint_b / evidence, joint_d / evidence)


@dataclass(frozen=True)
class MeasurementPosterior:
    prior_b: float
    likelihood_no_click_given_b: float
    rows: dict  # outcome -> PosteriorRow, impossible outcomes omitted
    p_correct: float

    def row(self, outcome: str) -> PosteriorRow:
        return self.rows[outcome]


def measurement_posterior(x: float, f: float) -> MeasurementPosterior:
    rows = {}
    for outcome in OUTCOMES:
        try:
            rows[outcome] = posterior(outcome, x, f)
        except DegenerateEvidence:
            continue
    return MeasurementPosterior(x, f, rows, p_correct_sampling(x, f))


def p_correct_sampling(x: float, f: float) -> float:
    """Success rate when the guess is drawn from the posterior.

    sum_C P(C) [P(b|C)^2 + P(d|C)^2]; equals 1 / (1 + f) at x = 1/2.
    """
    total = 0.0
    for outcome in OUTCOMES:
        try:
            r = posterior(outcome, x, f)
        except DegenerateEvidence:
            continue
        total += r.evidence * (r.p_b**2 + r.p_d**2)
    return total


def p_correct(f: float) -> float:
    """Posterior-sampling success probability 1 / (1 + f) for a flat prior."""
    _check_prob("f", f)
    return 1.0 / (1.0 + f)


def map_guess(outcome: str, x: float, f: float) -> str:
    """Maximum-a-posteriori start state; exact ties go to "d"."""
    r = posterior(outcome, x, f)
    return "b" if r.p_b > r.p_d else "d"


def p_correct_map(f: float, x: float = 0.5) -> float:
    """Success rate of the MAP rule (1 - f/2 for a flat prior)."""
    total = 0.0
    for outcome in OUTCOMES:
        try:
            guess = map_guess(outcome, x, f)
        except DegenerateEvidence:
            continue
        prior = x if guess == "b" else 1.0 - x
        total += likelihood(outcome, guess, f) * prior
    return total


def p_correct_limits(m: float) -> tuple:
    """(strong-coupling, weak-coupling) approximations of 1 / (1 + f_thermo(m))."""
    if not m > 0:
        raise ValueError("m must be positive")
    return 1.0 - math.sqrt(2.0 * math.pi * m), 0.5 * (1.0 + 1.0 / (8.0 * m))


def p_correct_thermo(m: float) -> float:
    return p_correct(conditional_fidelity_thermo(m))


@dataclass(frozen=True)
class SimulationResult:
    rate: float
    stderr: float
    n_trials: int
    seed: int
    rule: str


def simulate(f: float, x: float = 0.5, n_trials: int = 100_000, seed: int = 0,
             rule: str = "sample", rng: Optional[np.random.Generator] = None) -> SimulationResult:
    """Monte Carlo estimate of the guessing success rate.

    Each trial draws a start state from the prior, a readout from the
    likelihood, and a guess by ``rule``: "sample" draws the guess from the
    posterior, "map" takes the most probable start.
    """
    _check_prob("x", x)
    _check_prob("f", f)
    if rule not in ("sample", "map"):
        raise ValueError(f"unknown rule {rule!r}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    start_b = rng.random(n_trials) < x
    no_click = np.where(start_b, rng.random(n_trials) < f, True)
    p_b_given = {}
    for outcome in OUTCOMES:
        try:
            p_b_given[outcome] = posterior(outcome, x, f).p_b
        except DegenerateEvidence:
            p_b_given[outcome] = 0.0
    pb = np.where(no_click, p_b_given[NO_CLICK], p_b_given[CLICK])
    if rule == "sample":
        guess_b = rng.random(n_trials) < pb
    else:
        guess_b = pb > 0.5
    correct = guess_b == start_b
    rate = float(correct.mean())
    stderr = math.sqrt(max(rate * (1.0 - rate), 1e-300) / n_trials)
    return SimulationResult(rate, stderr, n_trials, seed, rule)

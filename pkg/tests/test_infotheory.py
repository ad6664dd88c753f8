import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import logm, sqrtm

from cavity_entropy import dynamics as dyn
from cavity_entropy import hilbert as h
from cavity_entropy import infotheory as it
from cavity_entropy import steady_state as ss
from cavity_entropy.errors import NormalizationError, PositivityError

from conftest import purified


def random_density(dim, seed, rank=None):
    rng = np.random.default_rng(seed)
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return h.DensityMatrix(rho / np.trace(rho), (dim,))


# entropies

def test_pure_state_entropy_zero():
    assert abs(it.von_neumann_entropy(h.coherent_state(1.5, 20).to_density())) < 1e-8


def test_maximally_mixed_qubit():
    assert it.von_neumann_entropy(h.DensityMatrix(np.eye(2) / 2, (2,))) == pytest.approx(math.log(2))


def test_initial_particle_entropy():
    x = 0.3
    s = it.von_neumann_entropy(h.particle_state(x))
    assert s == pytest.approx(-x * math.log(x) - (1 - x) * math.log(1 - x))


def test_entropy_matches_matrix_logarithm():
    rho = random_density(6, seed=5)
    ref = -np.trace(rho.matrix @ logm(rho.matrix)).real
    assert it.von_neumann_entropy(rho) == pytest.approx(ref, abs=1e-10)


def test_entropy_rejects_negative_spectrum():
    bad = h.DensityMatrix(np.diag([1.0 + 1e-6, -1e-6]), (2,), check_positivity=False)
    with pytest.raises(PositivityError):
        it.von_neumann_entropy(bad)


def test_entropy_clips_roundoff_negatives():
    rho = h.DensityMatrix(np.diag([1.0 + 1e-10, -1e-10]), (2,), check_positivity=False)
    assert it.von_neumann_entropy(rho) == pytest.approx(0, abs=1e-8)


def test_shannon_examples():
    assert it.shannon_entropy([1, 0]) == 0
    assert it.shannon_entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    diag = h.DensityMatrix(np.diag([0.3, 0.7]), (2,))
    assert it.shannon_entropy([0.3, 0.7]) == pytest.approx(it.von_neumann_entropy(diag))


@pytest.mark.parametrize("p", [[0.5, 0.6], [1.2, -0.2]])
def test_shannon_rejects_bad_distribution(p):
    with pytest.raises(NormalizationError):
        it.shannon_entropy(p)


# fidelity

def test_fidelity_self():
    rho = random_density(5, seed=1)
    assert it.uhlmann_fidelity(rho, rho) == pytest.approx(1, abs=1e-10)


def test_fidelity_orthogonal_pure():
    assert it.uhlmann_fidelity(h.fock_state(0, 3).to_density(), h.fock_state(1, 3).to_density()) == 0


def test_fidelity_matches_scipy_sqrtm():
    rho, sigma = random_density(5, seed=2), random_density(5, seed=3)
    r = sqrtm(rho.matrix)
    ref = np.trace(sqrtm(r @ sigma.matrix @ r)).real ** 2
    assert it.uhlmann_fidelity(rho, sigma) == pytest.approx(ref, abs=1e-8)


def test_fidelity_with_coherent_state_is_steady_state_F():
    inputs = ss.SteadyStateInputs.build(1.0, 5.0, 1.0)
    coh = h.coherent_state(math.sqrt(5), inputs.n_max).to_density()
    final = ss.final_cavity_state(inputs, math.sqrt(5))
    assert abs(it.uhlmann_fidelity(coh, final) - ss.fidelity_F(inputs)) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_fidelity_symmetric(seed, rank):
    rho, sigma = random_density(5, seed, rank), random_density(5, seed + 1, rank)
    assert abs(it.uhlmann_fidelity(rho, sigma) - it.uhlmann_fidelity(sigma, rho)) < 1e-8


def test_fidelity_invariant_under_displacement():
    inputs = ss.SteadyStateInputs.build(0.5, 4.0, 0.3)
    rho = ss.final_cavity_state(inputs, 2.0)
    sigma = h.coherent_state(1.5, inputs.n_max).to_density()
    before = it.uhlmann_fidelity(rho, sigma)
    after = it.uhlmann_fidelity(h.displace(rho, 1.0), h.displace(sigma, 1.0))
    assert abs(before - after) < 1e-8


# Husimi Q

def test_q_peak_of_coherent_state():
    n_max = h.truncation_dim(4)
    rho = h.coherent_state(2.0, n_max).to_density()
    assert it.husimi_values(rho, 2.0)[0] == pytest.approx(1 / math.pi, abs=1e-10)


def test_q_of_coherent_state_is_gaussian():
    alpha = 1.0 + 1.0j
    n_max = h.truncation_dim(2)
    rho = h.coherent_state(alpha, n_max).to_density()
    betas = np.array([0, 1, 1j, -1 - 0.5j, 2 + 2j, 3])
    ref = np.exp(-np.abs(alpha - betas) ** 2) / math.pi
    np.testing.assert_allclose(it.husimi_values(rho, betas), ref, atol=1e-8)


def test_q_dark_particle_grid_is_gaussian():
    alpha = 3.0
    inputs = ss.SteadyStateInputs.build(0.0, 9.0, 0.7)
    grid = it.husimi_q(ss.final_cavity_state(inputs, alpha), alpha=alpha)
    re, im = np.meshgrid(grid.re_axis, grid.im_axis)
    ref = np.exp(-np.abs(alpha - (re + 1j * im)) ** 2) / math.pi
    assert np.max(np.abs(grid.values - ref)) < 1e-8


def test_q_default_grid_shape_and_normalization():
    inputs = ss.SteadyStateInputs.build(1.0, 9.0, 0.1)
    grid = it.husimi_q(ss.final_cavity_state(inputs, 3.0), alpha=3.0)
    assert grid.values.shape == (401, 401)
    assert grid.re_axis[0] == pytest.approx(-8) and grid.re_axis[-1] == pytest.approx(8)
    assert np.all(grid.values >= 0)
    assert abs(grid.normalization() - 1) < 0.02


def test_q_phase_uniform_at_very_strong_coupling():
    inputs = ss.SteadyStateInputs.build(1.0, 100.0, 1e-4)
    rho = ss.final_cavity_state(inputs, 10.0)
    q = it.husimi_values(rho, 10 * np.exp(1j * np.linspace(0, 2 * math.pi, 720, endpoint=False)))
    assert (q.max() - q.min()) / q.max() < 0.10


# mutual information

def test_mutual_information_of_product_state():
    ab = h.tensor(random_density(3, 1), random_density(4, 2))
    assert abs(it.quantum_mutual_information(ab, ([0], [1]))) < 1e-8


def test_mutual_information_of_bell_state():
    bell = h.Ket(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2)).to_density()
    assert it.quantum_mutual_information(bell, ([0], [1])) == pytest.approx(2 * math.log(2))


def test_equilibrium_mi_vanishes_for_bright_start():
    inputs = ss.SteadyStateInputs.build(1.0, 5.0, 0.5)
    rl = ss.equilibrium_rl_state(inputs, math.sqrt(5))
    assert abs(it.quantum_mutual_information(rl, ([0], [1]))) < 1e-8


def test_purified_equilibrium_mi_in_range():
    i_rl = it.quantum_mutual_information(purified(0.5, 5.0, 0.5).final, ([1], [2]))
    assert 0 < i_rl <= it.binary_entropy(0.5)


def test_analytic_rl_state_matches_dynamics():
    traj = purified(0.5, 5.0, 0.5)
    inputs = ss.SteadyStateInputs(0.5, 5.0, 0.5, traj.params.n_max)
    rl = ss.equilibrium_rl_state(inputs, math.sqrt(5))
    assert h.trace_distance(h.partial_trace(traj.final, [1, 2]), rl) < 1e-4


def test_conditional_entropy_uninformative():
    x = 0.3
    assert it.conditional_entropy_measurement(x, 1.0) == pytest.approx(it.binary_entropy(x))
    assert it.classical_mi_measurement(x, 1.0) == pytest.approx(0, abs=1e-15)


def test_conditional_entropy_perfect():
    x = 0.3
    assert it.conditional_entropy_measurement(x, 0.0) == pytest.approx(0, abs=1e-15)
    assert it.classical_mi_measurement(x, 0.0) == pytest.approx(it.binary_entropy(x))


@pytest.mark.parametrize("x,f", [(0.5, 0.5), (0.2, 0.9), (0.8, 0.05)])
def test_classical_mi_from_joint_table(x, f):
    # rows: start in (b, d); columns: (no_click, click)
    joint = np.array([[x * f, x * (1 - f)], [1 - x, 0.0]])
    ps, pc = joint.sum(1), joint.sum(0)
    nz = joint > 0
    mi = np.sum(joint[nz] * np.log(joint[nz] / np.outer(ps, pc)[nz]))
    assert it.classical_mi_measurement(x, f) == pytest.approx(mi, abs=1e-12)


def test_mi_strong_limit_approaches_s0():
    lim = it.mi_thermo_limits(0.5, 1e-12)
    assert lim.strong == pytest.approx(it.binary_entropy(0.5), abs=1e-4)


def test_mi_weak_limit_value():
    lim = it.mi_thermo_limits(0.5, 100)
    assert lim.weak == pytest.approx(0.5 * math.log(2) / 400)
    assert lim.weak == pytest.approx(8.66e-4, rel=1e-3)
    assert lim.weak_valid and not lim.strong_valid


def test_mi_strong_limit_matches_measurement_mi():
    x, m = 0.5, 1e-4
    ref = it.classical_mi_measurement(x, ss.conditional_fidelity_thermo(m))
    lim = it.mi_thermo_limits(x, m)
    assert lim.strong_valid
    assert abs(lim.strong / ref - 1) < 0.05


def test_mi_strong_limit_form_without_prior_weight():
    x, m = 0.3, 1e-3
    r = math.sqrt(2 * math.pi * m)
    lim = it.mi_thermo_limits(x, m)
    assert lim.strong_without_x == pytest.approx(it.binary_entropy(x) + r * (math.log(r) + math.log(x / (1 - x)) - 1))


@pytest.mark.parametrize("m", [0.5])
def test_quantum_mi_exceeds_and_approaches_measurement_mi(m):
    gaps = []
    for n_bar in (1.0, 4.0, 9.0):
        inputs = ss.SteadyStateInputs.build(0.5, n_bar, m)
        rl = ss.equilibrium_rl_state(inputs, math.sqrt(n_bar))
        f = ss.conditional_fidelity_sum(n_bar, m, inputs.n_max)
        gaps.append(it.quantum_mutual_information(rl, ([0], [1])) - it.classical_mi_measurement(0.5, f))
    assert min(gaps) >= -1e-6
    assert gaps[0] > gaps[1] > gaps[2]


# mixing bounds

@pytest.mark.parametrize("x", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("m", [0.1, 1.0])
def test_mixing_bounds(x, m):
    inputs = ss.SteadyStateInputs.build(x, 5.0, m)
    s_c = it.von_neumann_entropy(ss.rho_c(math.sqrt(5), m, inputs.n_max))
    s_l = it.von_neumann_entropy(ss.final_cavity_state(inputs, math.sqrt(5)))
    assert x * s_c <= s_l + 1e-8
    assert s_l <= it.binary_entropy(x) + x * s_c + 1e-8


# reservoir and entanglement

def test_reservoir_empty_at_start():
    p = dyn.ModelParams.from_m(0.5, 0.5, 5.0)
    assert abs(it.reservoir_entropy(dyn.initial_purified_state(p)).S_P) < 1e-8


def test_reservoir_dominates_cavity_at_equilibrium():
    ent = it.reservoir_entropy(purified(0.5, 5.0, 0.5).final)
    assert ent.S_P >= ent.S_L


def test_reservoir_equals_global_entropy_along_run():
    traj = purified(0.5, 5.0, 0.5)
    for s in traj.states[::20]:
        assert it.reservoir_entropy(s).S_P == pytest.approx(it.von_neumann_entropy(s), abs=1e-12)


def test_margins_bright_start():
    p = dyn.ModelParams.from_m(0.5, 1.0, 2.0)
    rep = it.entanglement_inequalities(dyn.evolve_purified(p, t_end=20, n_out=5).final)
    assert rep.entropies.S_R < 1e-8
    assert rep.margin_R >= -1e-8


def test_margins_vanish_without_coupling():
    p = dyn.ModelParams.from_m(math.inf, 1.0, 4.0)
    rep = it.entanglement_inequalities(dyn.evolve_purified(p, t_end=10, n_out=3).final)
    assert abs(rep.margin_R) < 1e-6 and abs(rep.margin_L) < 1e-6


def test_margins_uncoupled_mixed_start():
    # R margin sits at -S0 when nothing happens to a mixed particle
    p = dyn.ModelParams.from_m(math.inf, 0.5, 4.0)
    rep = it.entanglement_inequalities(dyn.initial_purified_state(p))
    assert rep.margin_R == pytest.approx(-math.log(2), abs=1e-8)
    assert abs(rep.margin_L) < 1e-8


def test_entanglement_witnesses_at_equilibrium():
    rep = it.entanglement_inequalities(purified(0.5, 9.0, 0.5).final)
    assert rep.margin_R > 0 and rep.margin_L > 0
    assert rep.witness_R and rep.witness_L


# properties along a trajectory

def test_subadditivity_and_araki_lieb_along_run():
    traj = purified(0.5, 5.0, 0.5)
    for s in traj.states[::10]:
        s_r, s_l, s_rl = (it.subsystem_entropy(s, k) for k in ([1], [2], [1, 2]))
        assert s_rl <= s_r + s_l + 1e-8
        assert abs(s_r - s_l) <= s_rl + 1e-8


def test_time_series_bounds():
    traj = purified(0.5, 5.0, 0.5)
    ts = it.entropy_time_series(traj.times, traj.states, 0.5)
    for k in it.SERIES_KEYS:
        assert np.all(ts.series[k] >= -1e-8)
    assert np.all(ts.series["I_RL"] <= ts.s0 + 1e-8)
    np.testing.assert_array_equal(ts.series["S_P"], ts.series["S_ARL"])
    assert ts.normalized()["S_R"][0] == pytest.approx(1)

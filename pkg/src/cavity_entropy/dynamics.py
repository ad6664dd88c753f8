"""Master-equation propagation for the particle-cavity system.

Time is measured in units of 1/gamma.  States are dense; the Hamiltonian and
jump operator are kept sparse because they only have O(n_max) non-zeros, so
one right-hand-side evaluation costs O(d^2) instead of O(d^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .errors import DimensionMismatch, IntegrationError, PositivityError
from .hilbert import B, D, E, PARTICLE_DIM, DensityMatrix, OperatorMatrix

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-12
DEFAULT_EQUILIBRIUM_TOL = 1e-5


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters.  ``gamma`` sets the time unit."""

    g: float
    x: float
    alpha: complex
    n_max: int
    gamma: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0.0 <= self.x <= 1.0:
            raise ValueError("x must lie in [0, 1]")
        if self.n_max < 1:
            raise ValueError("n_max must be positive")

    @classmethod
    def from_m(cls, m: float, x: float, n_bar0: float, *, gamma: float = 1.0,
               n_max: Optional[int] = None, tail_tol: float = 1e-12) -> "ModelParams":
        """Build parameters from the critical photon number m = (gamma/g)^2 / 2."""
        if not m > 0:
            raise ValueError("m must be positive")
        g = 0.0 if math.isinf(m) else gamma / math.sqrt(2.0 * m)
        if n_max is None:
            n_max = hilbert.truncation_dim(n_bar0, tail_tol)
        return cls(g=g, x=x, alpha=complex(math.sqrt(n_bar0)), n_max=n_max, gamma=gamma)

    @property
    def m(self) -> float:
        if self.g == 0:
            return math.inf
        return 0.5 * (self.gamma / self.g) ** 2

    @property
    def n_bar0(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def cavity_dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple
    converged_at: Optional[int] = None
    params: Optional[ModelParams] = None
    n_steps: int = 0
    n_rejected: int = 0
    trace_drift: float = 0.0

    def __len__(self):
        return len(self.states)

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def default_horizon(m: float) -> float:
    """Equilibration time 50/gamma, stretched by sqrt(m) for weak coupling."""
    if math.isinf(m):
        return 50.0
    return 50.0 * max(1.0, math.sqrt(m))


# ---------------------------------------------------------------------------
# operators


def jaynes_cummings_h(params: ModelParams) -> OperatorMatrix:
    """(g/2)(|b><e| a^dag + |e><b| a) on particle (x) cavity."""
    a = hilbert.annihilation(params.n_max).matrix
    be = hilbert.outer_particle(B, E).matrix
    h = 0.5 * params.g * (np.kron(be, a.conj().T) + np.kron(be.T, a))
    return OperatorMatrix(h, (PARTICLE_DIM, params.cavity_dim), hermitian=True)


def jump_operator(params: ModelParams) -> OperatorMatrix:
    j = np.kron(hilbert.outer_particle(D, E).matrix, np.eye(params.cavity_dim))
    return OperatorMatrix(j, (PARTICLE_DIM, params.cavity_dim))


@lru_cache(maxsize=32)
def _generator(g: float, gamma: float, n_max: int, purified: bool):
    """Sparse H_eff = H - i gamma/2 J^dag J, plus the index map of J.

    J = |d><e| (x) 1 only moves the excited block onto the dark block, so
    J rho J^dag is a block copy: rows ``src`` of rho go to rows ``dst``.
    """
    nc = n_max + 1
    aux = PARTICLE_DIM if purified else 1
    a = sp.diags(np.sqrt(np.arange(1, nc)), 1, shape=(nc, nc), format="csr", dtype=complex)

    def particle(i, j):
        m = sp.csr_matrix(([1.0], ([i], [j])), shape=(PARTICLE_DIM, PARTICLE_DIM), dtype=complex)
        return sp.kron(m, sp.identity(aux), format="csr")

    h = 0.5 * g * (sp.kron(particle(B, E), a.T.conj()) + sp.kron(particle(E, B), a))
    h_eff = (h - 0.5j * gamma * sp.kron(particle(E, E), sp.identity(nc))).tocsr()
    block = aux * nc
    src = np.arange(E * block, (E + 1) * block)
    dst = np.arange(D * block, (D + 1) * block)
    return h_eff, src, dst


def _dims_for(params: ModelParams, dims: Sequence[int]) -> bool:
    """Return True for the purified A(x)R(x)L layout, False for A(x)L."""
    dims = tuple(dims)
    if dims == (PARTICLE_DIM, params.cavity_dim):
        return False
    if dims == (PARTICLE_DIM, PARTICLE_DIM, params.cavity_dim):
        return True
    raise DimensionMismatch(f"state dims {dims} incompatible with n_max={params.n_max}")


def _rhs_matrix(rho: np.ndarray, h_eff, src, dst, gamma: float) -> np.ndarray:
    # valid for Hermitian rho: rho H_eff^dag = (H_eff rho)^dag
    x = h_eff @ rho
    out = -1j * x
    out += out.conj().T
    out[dst[0]:dst[-1] + 1, dst[0]:dst[-1] + 1] += gamma * rho[src[0]:src[-1] + 1, src[0]:src[-1] + 1]
    return out


def lindblad_rhs(rho: DensityMatrix, params: ModelParams) -> np.ndarray:
    """d rho / dt = -i[H, rho] + gamma (J rho J^dag - {J^dag J, rho}/2)."""
    purified = _dims_for(params, rho.dims)
    h_eff, src, dst = _generator(params.g, params.gamma, params.n_max, purified)
    return _rhs_matrix(np.asarray(rho.matrix), h_eff, src, dst, params.gamma)


# ---------------------------------------------------------------------------
# initial states


def initial_state(params: ModelParams) -> DensityMatrix:
    alpha = hilbert.coherent_state(params.alpha, params.n_max).to_density()
    return hilbert.tensor(hilbert.particle_state(params.x), alpha)


def initial_purified_state(params: ModelParams) -> DensityMatrix:
    ket = hilbert.tensor(hilbert.purified_particle(params.x),
                         hilbert.coherent_state(params.alpha, params.n_max))
    return ket.to_density()


# ---------------------------------------------------------------------------
# integrator

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_ERR = _B5 - _B4


def _propagate(rho0: np.ndarray, rhs, t_out: np.ndarray, rtol: float, atol: float,
               on_snapshot) -> tuple:
    """Adaptive DP5(4) with FSAL, stepping exactly onto every output time."""
    t = float(t_out[0])
    y = rho0.copy()
    on_snapshot(0, y)
    k1 = rhs(y)
    span = float(t_out[-1] - t_out[0])
    h_min = 1e-12 * max(span, 1.0)
    scale0 = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale0) ** 2))
    d1 = np.sqrt(np.mean(np.abs(k1 / scale0) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, span)
    n_steps = n_rejected = 0
    abs_y = np.abs(y)
    for idx in range(1, len(t_out)):
        target = float(t_out[idx])
        while t < target:
            last = t + h >= target
            step = target - t if last else h
            ks = [k1]
            for s in range(1, 7):
                y_stage = y.copy()
                for c, kk in zip(_A[s], ks):
                    if c != 0.0:
                        y_stage += (step * c) * kk
                ks.append(rhs(y_stage))
            y_new = y_stage
            err = np.zeros_like(y)
            for c, kk in zip(_ERR, ks):
                if c != 0.0:
                    err += (step * c) * kk
            abs_new = np.abs(y_new)
            scale = np.maximum(abs_y, abs_new)
            scale *= rtol
            scale += atol
            err = np.abs(err)
            err /= scale
            err_norm = float(np.sqrt(np.mean(err * err)))
            if err_norm <= 1.0:
                t = target if last else t + step
                y = 0.5 * (y_new + y_new.conj().T)
                abs_y = abs_new
                k1 = ks[6]
                n_steps += 1
                fac = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                if not last:
                    h = step * fac
            else:
                n_rejected += 1
                h = step * max(0.2, 0.9 * err_norm ** -0.2)
                if h < h_min:
                    raise IntegrationError(f"step size underflow at t={t:.6g} (h={h:.3e})")
        on_snapshot(idx, y)
    return n_steps, n_rejected


def _output_times(t_end: float, n_out: Optional[int], times: Optional[Sequence[float]]) -> np.ndarray:
    if times is not None:
        t = np.asarray(times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0) or t[0] != 0.0:
            raise ValueError("times must be strictly increasing and start at 0")
        return t
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    return np.linspace(0.0, t_end, (n_out or 201))


def evolve(rho0: DensityMatrix, params: ModelParams, t_end: Optional[float] = None, *,
           rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL, n_out: Optional[int] = None,
           times: Optional[Sequence[float]] = None,
           equilibrium_tol: float = DEFAULT_EQUILIBRIUM_TOL) -> Trajectory:
    """Integrate the master equation from ``rho0`` and store snapshots.

    ``rho0`` may live on particle (x) cavity or on particle (x) auxiliary (x)
    cavity; in the latter case the dynamics acts as the identity on the
    auxiliary copy.  Snapshots are taken at ``times`` or on a uniform grid of
    ``n_out`` points over [0, t_end].
    """
    if t_end is None and times is None:
        t_end = default_horizon(params.m)
    purified = _dims_for(params, rho0.dims)
    t_out = _output_times(t_end, n_out, times)
    h_eff, src, dst = _generator(params.g, params.gamma, params.n_max, purified)

    def rhs(r):
        return _rhs_matrix(r, h_eff, src, dst, params.gamma)

    states: list = [None] * len(t_out)

    def snapshot(i, y):
        lam_min = np.linalg.eigvalsh(y)[0]
        if lam_min < -hilbert.POSITIVITY_TOL:
            raise PositivityError(f"eigenvalue {lam_min:.3e} at t={t_out[i]:.6g}")
        states[i] = DensityMatrix(y.copy(), rho0.dims, check_positivity=False)

    n_steps, n_rej = _propagate(np.array(rho0.matrix), rhs, t_out, rtol, atol, snapshot)
    traces = np.array([np.trace(s.matrix).real for s in states])
    traj = Trajectory(times=t_out, states=tuple(states), params=params, n_steps=n_steps,
                      n_rejected=n_rej, trace_drift=float(np.max(np.abs(traces - traces[0]))))
    return replace(traj, converged_at=detect_equilibrium(traj, equilibrium_tol))


def evolve_purified(params: ModelParams, t_end: Optional[float] = None, **kwargs) -> Trajectory:
    """Evolve |u><u|_AR (x) |alpha><alpha| with the particle operators extended by 1_R."""
    return evolve(initial_purified_state(params), params, t_end, **kwargs)


def excited_population(rho: DensityMatrix) -> float:
    diag = np.real(np.diagonal(rho.matrix)).reshape(rho.dims)
    return float(diag[E].sum())


def detect_equilibrium(traj: Trajectory, tol: float = DEFAULT_EQUILIBRIUM_TOL) -> Optional[int]:
    """First snapshot index where the state has stopped moving and decayed.

    Requires trace distance between consecutive snapshots per unit time and
    the excited population both strictly below ``tol``.
    """
    if len(traj.states) == 0:
        raise ValueError("empty trajectory")
    for i in range(1, len(traj.states)):
        if excited_population(traj.states[i]) >= tol:
            continue
        rate = hilbert.trace_distance(traj.states[i], traj.states[i - 1]) / (traj.times[i] - traj.times[i - 1])
        if rate < tol:
            return i
    return None

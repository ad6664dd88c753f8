"""Entropies, fidelities, Husimi Q-functions and mutual information.

All logarithms are natural (entropies in nats).  The photon reservoir that
absorbs spontaneous emission is never represented explicitly: because the
particle, auxiliary copy, cavity and reservoir together are in a pure state,
every reservoir entropy equals the entropy of a complementary subsystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from . import hilbert
from .errors import DimensionMismatch, NormalizationError, PositivityError
from .hilbert import DensityMatrix

EIG_CUTOFF = 1e-12

# subsystem positions in the purified layout
A, R, L = 0, 1, 2


def _clipped_spectrum(matrix: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(matrix)
    if lam[0] < -hilbert.POSITIVITY_TOL:
        raise PositivityError(f"eigenvalue {lam[0]:.3e} below -{hilbert.POSITIVITY_TOL}")
    return np.clip(lam, 0.0, None)


def _entropy_of_matrix(matrix: np.ndarray) -> float:
    lam = _clipped_spectrum(matrix)
    lam = lam[lam > EIG_CUTOFF]
    # roundoff on a pure state can leave a tiny negative sum
    return max(0.0, float(-np.sum(lam * np.log(lam))))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return _entropy_of_matrix(rho.matrix)


def shannon_entropy(p: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-8:
        raise NormalizationError(f"not a probability vector: {p}")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz))) + 0.0


def binary_entropy(x: float) -> float:
    """Entropy -x ln x - (1-x) ln(1-x) of the initial particle mixture."""
    return shannon_entropy([x, 1.0 - x])


def _sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    if lam[0] < -hilbert.POSITIVITY_TOL:
        raise PositivityError(f"eigenvalue {lam[0]:.3e} below -{hilbert.POSITIVITY_TOL}")
    return (vecs * np.sqrt(np.clip(lam, 0.0, None))) @ vecs.conj().T


def _pure_vector(rho: DensityMatrix, tol: float = 1e-10) -> Optional[np.ndarray]:
    if abs(rho.purity() - 1.0) > tol:
        return None
    lam, vecs = np.linalg.eigh(rho.matrix)
    return vecs[:, -1]


def uhlmann_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, with the <psi|sigma|psi> shortcut for pure inputs."""
    if tuple(rho.dims) != tuple(sigma.dims):
        raise DimensionMismatch(f"dims {rho.dims} and {sigma.dims} differ")
    for pure, other in ((rho, sigma), (sigma, rho)):
        psi = _pure_vector(pure)
        if psi is not None:
            return float(min(1.0, max(0.0, np.vdot(psi, other.matrix @ psi).real)))
    root = _sqrtm_psd(rho.matrix)
    inner = root @ sigma.matrix @ root
    lam = _clipped_spectrum(0.5 * (inner + inner.conj().T))
    return float(min(1.0, np.sum(np.sqrt(lam)) ** 2))


# ---------------------------------------------------------------------------
# phase space


@dataclass(frozen=True)
class QGrid:
    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray  # values[i, j] at beta = re_axis[j] + 1j * im_axis[i]
    cell_area: float

    def normalization(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def argmax(self) -> complex:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.re_axis[j], self.im_axis[i])


def default_grid(alpha: complex, points: int = 401) -> Tuple[np.ndarray, np.ndarray]:
    half = abs(alpha) + 5.0
    axis = np.linspace(-half, half, points)
    return axis, axis.copy()


def _coherent_rows(betas: np.ndarray, n_max: int) -> np.ndarray:
    """Matrix whose rows are the truncated coherent amplitudes <n|beta>."""
    n = np.arange(n_max + 1)
    r = np.abs(betas)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log(r)
        log_mag = -0.5 * r[:, None] ** 2 + n[None, :] * log_r[:, None] - 0.5 * gammaln(n + 1)[None, :]
    log_mag[:, 0] = -0.5 * r**2  # 0 * log(0) = 0 at the origin
    return np.exp(log_mag) * np.exp(1j * np.angle(betas)[:, None] * n[None, :])


def husimi_values(rho: DensityMatrix, betas) -> np.ndarray:
    """Q(beta) = <beta|rho|beta> / pi at arbitrary points."""
    if len(rho.dims) != 1:
        raise DimensionMismatch("Q-function needs a single-mode cavity state")
    betas = np.atleast_1d(np.asarray(betas, dtype=complex))
    rows = _coherent_rows(betas.ravel(), rho.dims[0] - 1)
    vals = np.sum((rows.conj() @ rho.matrix) * rows, axis=1).real / math.pi
    return np.clip(vals, 0.0, None).reshape(betas.shape)


def husimi_q(rho: DensityMatrix, re_axis: Optional[np.ndarray] = None,
             im_axis: Optional[np.ndarray] = None, *, alpha: Optional[complex] = None) -> QGrid:
    """Sample the Husimi Q-function on a rectangular grid.

    Without explicit axes the grid is 401 x 401 points over
    [-(|alpha| + 5), |alpha| + 5] in both quadratures.
    """
    if re_axis is None or im_axis is None:
        if alpha is None:
            n = np.arange(rho.dims[0])
            alpha = math.sqrt(float(np.real(np.diagonal(rho.matrix)) @ n))
        re_axis, im_axis = default_grid(alpha)
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    values = np.empty((len(im_axis), len(re_axis)))
    for i, im in enumerate(im_axis):
        values[i] = husimi_values(rho, re_axis + 1j * im)
    d_re = re_axis[1] - re_axis[0] if len(re_axis) > 1 else 1.0
    d_im = im_axis[1] - im_axis[0] if len(im_axis) > 1 else 1.0
    return QGrid(re_axis, im_axis, values, float(d_re * d_im))


# ---------------------------------------------------------------------------
# mutual information


def subsystem_entropy(rho: DensityMatrix, keep: Sequence[int]) -> float:
    keep = sorted(set(keep))
    if keep == list(range(len(rho.dims))):
        return von_neumann_entropy(rho)
    return _entropy_of_matrix(hilbert.partial_trace_matrix(rho.matrix, rho.dims, keep))


def quantum_mutual_information(rho: DensityMatrix, split: Tuple[Sequence[int], Sequence[int]]) -> float:
    """S(Y) + S(Z) - S(YZ) for subsystem groups ``split = (Y, Z)``.

    Subsystems in neither group are traced out first.
    """
    y, z = (sorted(set(s)) for s in split)
    if not y or not z or set(y) & set(z):
        raise DimensionMismatch(f"invalid bipartition {split}")
    if max(y + z) >= len(rho.dims) or min(y + z) < 0:
        raise DimensionMismatch(f"bipartition {split} out of range for dims {rho.dims}")
    return subsystem_entropy(rho, y) + subsystem_entropy(rho, z) - subsystem_entropy(rho, y + z)


def conditional_entropy_measurement(x: float, f: float) -> float:
    """Entropy of the initial particle state left after the click/no-click readout."""
    if not (0.0 <= x <= 1.0 and 0.0 <= f <= 1.0):
        raise ValueError("x and f must lie in [0, 1]")
    p_no_click = 1.0 - x * (1.0 - f)
    total = 0.0
    if x * f > 0:
        total -= x * f * math.log(f * x / p_no_click)
    if x < 1:
        total -= (1.0 - x) * math.log((1.0 - x) / p_no_click)
    return total + 0.0


def classical_mi_measurement(x: float, f: float) -> float:
    return binary_entropy(x) - conditional_entropy_measurement(x, f)


@dataclass(frozen=True)
class MILimits:
    strong: float
    weak: float
    strong_valid: bool
    weak_valid: bool
    epsilon: float
    strong_without_x: float  # S0 - epsilon / x, the form lacking the prior weight


def mi_thermo_limits(x: float, m: float, margin: float = 10.0) -> MILimits:
    """Strong- and weak-coupling forms of the large-n_bar0 mutual information.

    A limit is flagged valid when ``m`` is ``margin`` times inside its regime.

    The strong form is S0 - epsilon with
    epsilon = -x sqrt(2 pi m) [ln sqrt(2 pi m) + ln(x / (1 - x)) - 1],
    the leading term of the measurement MI as f -> sqrt(2 pi m).
    """
    if not (0.0 < x < 1.0 and m > 0):
        raise ValueError("need 0 < x < 1 and m > 0")
    root = math.sqrt(2.0 * math.pi * m)
    bare = -root * (math.log(root) + math.log(x / (1.0 - x)) - 1.0)
    eps = x * bare
    s0 = binary_entropy(x)
    bound = min(1.0, ((1.0 - x) / x) ** 2 / (2.0 * math.pi))
    return MILimits(strong=s0 - eps, weak=-x * math.log(x) / (4.0 * m),
                    strong_valid=m * margin <= bound, weak_valid=m >= margin, epsilon=eps,
                    strong_without_x=s0 - bare)


# ---------------------------------------------------------------------------
# reservoir bookkeeping (purified particle (x) auxiliary (x) cavity states)


@dataclass(frozen=True)
class ReservoirEntropies:
    S_P: float   # = S(ARL)
    S_PR: float  # = S(AL)
    S_PL: float  # = S(AR)
    S_R: float
    S_L: float
    S_A: float

    @property
    def I_PR(self) -> float:
        return self.S_P + self.S_R - self.S_PR

    @property
    def I_PL(self) -> float:
        return self.S_P + self.S_L - self.S_PL


def _check_arl(rho: DensityMatrix) -> None:
    if len(rho.dims) != 3:
        raise DimensionMismatch(f"expected particle (x) auxiliary (x) cavity state, got dims {rho.dims}")


def reservoir_entropy(rho_arl: DensityMatrix) -> ReservoirEntropies:
    _check_arl(rho_arl)
    return ReservoirEntropies(
        S_P=von_neumann_entropy(rho_arl),
        S_PR=subsystem_entropy(rho_arl, [A, L]),
        S_PL=subsystem_entropy(rho_arl, [A, R]),
        S_R=subsystem_entropy(rho_arl, [R]),
        S_L=subsystem_entropy(rho_arl, [L]),
        S_A=subsystem_entropy(rho_arl, [A]),
    )


@dataclass(frozen=True)
class EntanglementReport:
    margin_R: float  # I(P:R) - S(R)
    margin_L: float  # I(P:L) - S(L)
    particle_purity: float
    particle_nearly_pure: bool
    entropies: ReservoirEntropies

    @property
    def witness_R(self) -> bool:
        return self.margin_R > 0

    @property
    def witness_L(self) -> bool:
        return self.margin_L > 0


def entanglement_inequalities(rho_arl: DensityMatrix, purity_tol: float = 1e-2) -> EntanglementReport:
    """Reservoir entanglement margins I(P:R) - S(R) and I(P:L) - S(L).

    Positive margins witness entanglement with the reservoir.  The argument
    behind them assumes the particle ends nearly pure; the report flags that
    regime but does not enforce it.
    """
    ent = reservoir_entropy(rho_arl)
    rho_a = hilbert.partial_trace_matrix(rho_arl.matrix, rho_arl.dims, [A])
    purity = float(np.sum(np.abs(rho_a) ** 2))
    return EntanglementReport(
        margin_R=ent.I_PR - ent.S_R,
        margin_L=ent.I_PL - ent.S_L,
        particle_purity=purity,
        particle_nearly_pure=purity > 1.0 - purity_tol,
        entropies=ent,
    )


# ---------------------------------------------------------------------------
# time series

SERIES_KEYS = ("S_A", "S_R", "S_L", "S_RL", "S_ARL", "S_P", "I_RL")


@dataclass(frozen=True)
class EntropyTimeSeries:
    times: np.ndarray
    series: dict
    s0: float

    def normalized(self) -> dict:
        if self.s0 == 0:
            return {k: np.full_like(v, np.nan) for k, v in self.series.items()}
        return {k: v / self.s0 for k, v in self.series.items()}


def entropy_snapshot(rho_arl: DensityMatrix) -> dict:
    _check_arl(rho_arl)
    s_arl = von_neumann_entropy(rho_arl)
    s_r = subsystem_entropy(rho_arl, [R])
    s_l = subsystem_entropy(rho_arl, [L])
    s_rl = subsystem_entropy(rho_arl, [R, L])
    return {
        "S_A": subsystem_entropy(rho_arl, [A]),
        "S_R": s_r,
        "S_L": s_l,
        "S_RL": s_rl,
        "S_ARL": s_arl,
        "S_P": s_arl,
        "I_RL": s_r + s_l - s_rl,
    }


def entropy_time_series(times, states, x: float) -> EntropyTimeSeries:
    rows = [entropy_snapshot(s) for s in states]
    series = {k: np.array([r[k] for r in rows]) for k in SERIES_KEYS}
    return EntropyTimeSeries(np.asarray(times, dtype=float), series, binary_entropy(x))

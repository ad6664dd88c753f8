"""Closed-form equilibrium cavity states and conditional fidelities.

All Poisson-weighted double sums are evaluated in log space: at n_bar0 = 100
the terms n_bar0^(l+l') / (l! l'!) span several hundred orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, gammaln, logsumexp

from . import hilbert
from .errors import RootBracketError, TruncationError
from .hilbert import DensityMatrix


@dataclass(frozen=True)
class SteadyStateInputs:
    """``m = math.inf`` encodes an uncoupled particle (g = 0)."""

    x: float
    n_bar0: float
    m: float
    n_max: int

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError("x must lie in [0, 1]")
        if self.n_bar0 < 0:
            raise ValueError("n_bar0 must be non-negative")
        if not self.m > 0:
            raise ValueError("m must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be positive")

    @classmethod
    def build(cls, x: float, n_bar0: float, m: float, tail_tol: float = 1e-12) -> "SteadyStateInputs":
        n_max = hilbert.truncation_dim(n_bar0, tail_tol) if math.isfinite(n_bar0) else 1
        return cls(x=x, n_bar0=n_bar0, m=m, n_max=n_max)


def kernel_K(l, lp, m):
    """Interaction kernel 1 / (1 + (l + l')/2 + (l - l')^2 / (8 m)).

    Works elementwise on arrays.  ``m = inf`` gives the (l - l')-independent
    limit of the formula.
    """
    l = np.asarray(l, dtype=float)
    lp = np.asarray(lp, dtype=float)
    if np.any(np.asarray(m) <= 0):
        raise ValueError("m must be positive")
    diff = 0.0 if np.isinf(m) else (l - lp) ** 2 / (8.0 * m)
    out = 1.0 / (1.0 + 0.5 * (l + lp) + diff)
    return float(out) if out.ndim == 0 else out


def _kernel_matrix(n_max: int, m: float) -> np.ndarray:
    idx = np.arange(n_max + 1)
    return kernel_K(idx[:, None], idx[None, :], m)


def _check_alpha(alpha: complex, n_bar0: float) -> None:
    if abs(abs(alpha) ** 2 - n_bar0) > 1e-12 * max(1.0, n_bar0):
        raise ValueError(f"|alpha|^2 = {abs(alpha) ** 2!r} does not match n_bar0 = {n_bar0!r}")


def rho_c(alpha: complex, m: float, n_max: int) -> DensityMatrix:
    """Cavity state left behind when the particle starts bright.

    e^{-|a|^2}|0><0| + |a|^2 sum_{l,l'} K_{l,l'} <l'|a><a|l> |l'><l|.
    ``m = inf`` (no coupling) returns |alpha><alpha|.
    """
    if math.isinf(m):
        return hilbert.coherent_state(alpha, n_max).to_density()
    c = hilbert.coherent_amplitudes(alpha, n_max)
    n_bar0 = abs(alpha) ** 2
    mat = n_bar0 * _kernel_matrix(n_max, m) * np.outer(c, c.conj())
    mat[0, 0] += math.exp(-n_bar0)
    deficit = 1.0 - np.trace(mat).real
    if abs(deficit) > 1e-5:
        raise TruncationError(f"rho_c trace deficit {deficit:.3e} at n_max={n_max}")
    mat /= np.trace(mat).real
    return DensityMatrix(0.5 * (mat + mat.conj().T), (n_max + 1,))


def final_cavity_state(inputs: SteadyStateInputs, alpha: complex) -> DensityMatrix:
    """(1 - x)|alpha><alpha| + x rho_c."""
    _check_alpha(alpha, inputs.n_bar0)
    coh = hilbert.coherent_state(alpha, inputs.n_max).to_density().matrix
    rc = rho_c(alpha, inputs.m, inputs.n_max).matrix
    return DensityMatrix((1.0 - inputs.x) * coh + inputs.x * rc, (inputs.n_max + 1,))


def equilibrium_rl_state(inputs: SteadyStateInputs, alpha: complex) -> DensityMatrix:
    """Auxiliary-copy (x) cavity equilibrium: x|b><b| (x) rho_c + (1-x)|d><d| (x) |alpha><alpha|."""
    _check_alpha(alpha, inputs.n_bar0)
    coh = hilbert.coherent_state(alpha, inputs.n_max).to_density().matrix
    rc = rho_c(alpha, inputs.m, inputs.n_max).matrix
    pb = np.zeros((3, 3))
    pb[hilbert.B, hilbert.B] = 1.0
    pd = np.zeros((3, 3))
    pd[hilbert.D, hilbert.D] = 1.0
    mat = inputs.x * np.kron(pb, rc) + (1.0 - inputs.x) * np.kron(pd, coh)
    return DensityMatrix(mat, (3, inputs.n_max + 1), check_positivity=False)


def conditional_fidelity_sum(n_bar0: float, m: float, n_max: int) -> float:
    """Finite-photon-number conditional fidelity.

    e^{-2 n} (1 + n sum_{l,l'} K_{l,l'} n^{l+l'} / (l! l'!)), n = n_bar0.
    """
    if n_bar0 == 0:
        return 1.0
    if math.isinf(m):
        return 1.0
    idx = np.arange(n_max + 1)
    log_w = idx * math.log(n_bar0) - gammaln(idx + 1)
    log_terms = np.log(_kernel_matrix(n_max, m)) + log_w[:, None] + log_w[None, :]
    log_sum = logsumexp(log_terms)
    return float(math.exp(-2.0 * n_bar0) + math.exp(math.log(n_bar0) + log_sum - 2.0 * n_bar0))


def conditional_fidelity_thermo(m: float) -> float:
    """Large-photon-number limit sqrt(2 pi m) e^{2m} erfc(sqrt(2m))."""
    if not m > 0:
        raise ValueError("m must be positive")
    if math.isinf(m):
        return 1.0
    # erfcx(z) = e^{z^2} erfc(z) keeps the product finite for large m
    return float(math.sqrt(2.0 * math.pi * m) * erfcx(math.sqrt(2.0 * m)))


def fidelity_F(inputs: SteadyStateInputs) -> float:
    """Fidelity 1 - x(1 - f) between initial and equilibrium cavity states."""
    if math.isinf(inputs.m):
        return 1.0
    if math.isinf(inputs.n_bar0):
        f = conditional_fidelity_thermo(inputs.m)
    else:
        f = conditional_fidelity_sum(inputs.n_bar0, inputs.m, inputs.n_max)
    return 1.0 - inputs.x * (1.0 - f)


def m_min(n_bar0: float) -> float:
    """Below 1 / (8 pi^2 n_bar0) the large-n_bar0 fidelity formula breaks down."""
    if not n_bar0 > 0:
        raise ValueError("n_bar0 must be positive")
    return 1.0 / (8.0 * math.pi**2 * n_bar0)


def _bisect(fn, lo: float, hi: float, xtol: float) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo * f_hi > 0:
        raise RootBracketError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def m_half(lo: float = 0.01, hi: float = 1.0, xtol: float = 1e-10) -> float:
    """Critical photon number where the large-n_bar0 conditional fidelity equals 1/2."""
    return _bisect(lambda m: conditional_fidelity_thermo(m) - 0.5, lo, hi, xtol)


def phase_spread(n: float, dn: float, g_over_gamma: float) -> float:
    """Relative phase (g / 2 gamma)(sqrt(n + dn) - sqrt(n)) picked up over one lifetime."""
    if n < 0 or n + dn < 0:
        raise ValueError("photon numbers must be non-negative")
    return 0.5 * g_over_gamma * (math.sqrt(n + dn) - math.sqrt(n))


def coherent_phase_spread(n_bar0: float, g_over_gamma: float) -> float:
    """|phase_spread| across one standard deviation of a coherent state."""
    return abs(phase_spread(n_bar0, math.sqrt(n_bar0), g_over_gamma))


def final_intensity(x: float, n_bar0: float) -> float:
    return n_bar0 - x * (1.0 - math.exp(-n_bar0))

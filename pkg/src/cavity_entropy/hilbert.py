"""Truncated Fock-space linear algebra.

States and operators live on a composite space described by an ordered tuple
of subsystem dimensions.  In this package the particle ``A`` (basis b, e, d)
always comes first, an optional purifying copy ``R`` second, and the cavity
mode ``L`` last, e.g. ``(3, 3, n_max + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DimensionMismatch, InvalidStateError, PositivityError, TruncationError

# particle basis ordering
B, E, D = 0, 1, 2
PARTICLE_DIM = 3

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8

Dims = tuple


def _as_dims(dims: Sequence[int]) -> Dims:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionMismatch(f"invalid subsystem dimensions {dims}")
    return dims


@dataclass(frozen=True)
class Ket:
    """Pure state vector.

    ``renorm`` is the norm of the amplitudes before they were rescaled to
    unit length (1.0 for states that need no renormalization).
    """

    amplitudes: np.ndarray
    dims: Dims
    renorm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (math.prod(self.dims),):
            raise DimensionMismatch(f"amplitude shape {amps.shape} does not match dims {self.dims}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > 1e-10:
            raise InvalidStateError(f"ket not normalized: |psi|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def overlap(self, other: "Ket") -> complex:
        _check_same_dims(self.dims, other.dims)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Positivity is checked with a full eigendecomposition; pass
    ``check_positivity=False`` when the caller has already verified it.
    """

    matrix: np.ndarray
    dims: Dims
    check_positivity: InitVar[bool] = True

    def __post_init__(self, check_positivity):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        mat = np.array(self.matrix, dtype=complex)
        n = math.prod(self.dims)
        if mat.shape != (n, n):
            raise DimensionMismatch(f"matrix shape {mat.shape} does not match dims {self.dims}")
        herm_dev = np.max(np.abs(mat - mat.conj().T)) if n else 0.0
        if herm_dev > HERMITIAN_TOL:
            raise InvalidStateError(f"matrix not Hermitian (max deviation {herm_dev:.3e})")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr!r} differs from 1")
        if check_positivity:
            lam_min = np.linalg.eigvalsh(mat)[0]
            if lam_min < -POSITIVITY_TOL:
                raise PositivityError(f"minimum eigenvalue {lam_min:.3e} < -{POSITIVITY_TOL}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expect(self, op: Union["OperatorMatrix", np.ndarray]) -> complex:
        m = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
        if m.shape != self.matrix.shape:
            raise DimensionMismatch(f"operator shape {m.shape} vs state {self.matrix.shape}")
        # Tr(O rho) without forming the product
        return complex(np.sum(m * self.matrix.T))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    dims: Dims
    hermitian: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        mat = np.array(self.matrix, dtype=complex)
        n = math.prod(self.dims)
        if mat.shape != (n, n):
            raise DimensionMismatch(f"matrix shape {mat.shape} does not match dims {self.dims}")
        if self.hermitian and np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise InvalidStateError("operator flagged Hermitian but is not")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __matmul__(self, other):
        return matmul(self, other)


def _check_same_dims(a: Dims, b: Dims) -> None:
    if tuple(a) != tuple(b):
        raise DimensionMismatch(f"dims {a} and {b} differ")


# ---------------------------------------------------------------------------
# truncation and states


def truncation_dim(n_bar0: float, tail_tol: float = 1e-12) -> int:
    """Fock cutoff ``n_max`` for a coherent state with mean photon number ``n_bar0``.

    The smallest ``n_max`` whose Poisson tail mass P(n > n_max) is below
    ``tail_tol``, but never below ``ceil(n_bar0 + 10 sqrt(n_bar0)) + 5``.
    """
    if n_bar0 < 0:
        raise ValueError("n_bar0 must be non-negative")
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    floor = math.ceil(n_bar0 + 10.0 * math.sqrt(n_bar0)) + 5
    if n_bar0 == 0:
        return floor
    n = int(n_bar0)
    while poisson.sf(n, n_bar0) >= tail_tol:
        n += 1
    return max(n, floor)


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """Unnormalized truncated amplitudes e^{-|a|^2/2} a^n / sqrt(n!), n = 0..n_max."""
    n = np.arange(n_max + 1)
    r = abs(alpha)
    if r == 0:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, n_max: int) -> Ket:
    amps = coherent_amplitudes(alpha, n_max)
    norm = float(np.linalg.norm(amps))
    if 1.0 - norm * norm > 1e-6:
        raise TruncationError(
            f"coherent state |{alpha}> loses {1 - norm * norm:.3e} probability at n_max={n_max}"
        )
    return Ket(amps / norm, (n_max + 1,), renorm=norm)


def fock_state(n: int, n_max: int) -> Ket:
    if not 0 <= n <= n_max:
        raise DimensionMismatch(f"Fock index {n} outside 0..{n_max}")
    amps = np.zeros(n_max + 1, dtype=complex)
    amps[n] = 1.0
    return Ket(amps, (n_max + 1,))


def basis_ket(indices: Sequence[int], dims: Sequence[int]) -> Ket:
    dims = _as_dims(dims)
    if len(indices) != len(dims):
        raise DimensionMismatch("one index per subsystem required")
    amps = np.zeros(math.prod(dims), dtype=complex)
    amps[np.ravel_multi_index(tuple(indices), dims)] = 1.0
    return Ket(amps, dims)


def particle_state(x: float) -> DensityMatrix:
    """Diagonal particle mixture x|b><b| + (1-x)|d><d|."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    rho = np.zeros((PARTICLE_DIM, PARTICLE_DIM), dtype=complex)
    rho[B, B] = x
    rho[D, D] = 1.0 - x
    return DensityMatrix(rho, (PARTICLE_DIM,))


def purified_particle(x: float) -> Ket:
    """sqrt(x)|b,b> + sqrt(1-x)|d,d> on particle (x) auxiliary copy."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    amps = np.zeros(PARTICLE_DIM**2, dtype=complex)
    amps[B * PARTICLE_DIM + B] = math.sqrt(x)
    amps[D * PARTICLE_DIM + D] = math.sqrt(1.0 - x)
    return Ket(amps, (PARTICLE_DIM, PARTICLE_DIM))


# ---------------------------------------------------------------------------
# operators


def annihilation(n_max: int) -> OperatorMatrix:
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1), (n_max + 1,))


def creation(n_max: int) -> OperatorMatrix:
    return dagger(annihilation(n_max))


def number_operator(n_max: int) -> OperatorMatrix:
    return OperatorMatrix(np.diag(np.arange(n_max + 1)), (n_max + 1,), hermitian=True)


def identity(dims: Sequence[int]) -> OperatorMatrix:
    dims = _as_dims(dims)
    return OperatorMatrix(np.eye(math.prod(dims)), dims, hermitian=True)


def outer_particle(i: int, j: int) -> OperatorMatrix:
    """Particle transition operator |i><j| in the (b, e, d) basis."""
    m = np.zeros((PARTICLE_DIM, PARTICLE_DIM))
    m[i, j] = 1.0
    return OperatorMatrix(m, (PARTICLE_DIM,), hermitian=(i == j))


def dagger(op: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(op.matrix.conj().T, op.dims, op.hermitian)


def matmul(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _check_same_dims(a.dims, b.dims)
    return OperatorMatrix(a.matrix @ b.matrix, a.dims)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _check_same_dims(a.dims, b.dims)
    return OperatorMatrix(a.matrix @ b.matrix - b.matrix @ a.matrix, a.dims)


def tensor(*parts):
    """Kronecker product of kets, density matrices or operators (all the same kind)."""
    if not parts:
        raise ValueError("tensor() needs at least one factor")
    kind = type(parts[0])
    if any(type(p) is not kind for p in parts):
        raise DimensionMismatch("cannot tensor objects of different kinds")
    dims = sum((tuple(p.dims) for p in parts), ())
    if kind is Ket:
        amps = parts[0].amplitudes
        for p in parts[1:]:
            amps = np.kron(amps, p.amplitudes)
        return Ket(amps / np.linalg.norm(amps), dims)
    mat = parts[0].matrix
    for p in parts[1:]:
        mat = np.kron(mat, p.matrix)
    if kind is DensityMatrix:
        return DensityMatrix(mat, dims, check_positivity=False)
    if kind is OperatorMatrix:
        return OperatorMatrix(mat, dims, all(p.hermitian for p in parts))
    raise TypeError(f"cannot tensor {kind.__name__}")


# ---------------------------------------------------------------------------
# reductions and maps


def partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce ``matrix`` on ``dims`` to the subsystems listed in ``keep``."""
    dims = _as_dims(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatch(f"keep={keep} invalid for dims {dims}")
    n = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    d = math.prod(dims[i] for i in keep)
    return reduced.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    keep = sorted(set(int(k) for k in keep))
    mat = partial_trace_matrix(rho.matrix, rho.dims, keep)
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(mat, tuple(rho.dims[i] for i in keep), check_positivity=False)


def displacement_operator(alpha: complex, n_max: int) -> OperatorMatrix:
    """exp(alpha a^dag - alpha* a) on the truncated space.

    The generator is anti-Hermitian; diagonalizing ``i * generator`` keeps the
    result unitary to roundoff.
    """
    a = annihilation(n_max).matrix
    gen = alpha * a.conj().T - np.conj(alpha) * a
    lam, vecs = np.linalg.eigh(1j * gen)
    return OperatorMatrix((vecs * np.exp(-1j * lam)) @ vecs.conj().T, (n_max + 1,))


def displace(rho: DensityMatrix, alpha: complex, *, cutoff_tol: float = 1e-6) -> DensityMatrix:
    """Return D(-alpha) rho D(-alpha)^dag for a single-mode state."""
    if len(rho.dims) != 1:
        raise DimensionMismatch("displace() acts on a single cavity mode")
    n_max = rho.dims[0] - 1
    dop = displacement_operator(-alpha, n_max).matrix
    eta = dop @ rho.matrix @ dop.conj().T
    eta = 0.5 * (eta + eta.conj().T)
    top = eta[n_max, n_max].real
    if top > cutoff_tol:
        raise TruncationError(f"displaced state has population {top:.3e} at the cutoff")
    return DensityMatrix(eta, rho.dims, check_positivity=False)


def trace_distance(rho: Union[DensityMatrix, np.ndarray], sigma: Union[DensityMatrix, np.ndarray]) -> float:
    a = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))

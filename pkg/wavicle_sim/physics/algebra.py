"""Finite-dimensional complex linear algebra.

States, Hermitian observables, spin operators in polar coordinates, matrix
elements and a cyclic Jacobi eigensolver for small Hermitian matrices.
All values are immutable; every function here is safe to call from any
number of threads.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DimensionMismatchError, ValidationError

HERMITIAN_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12
MAX_JACOBI_DIM = 16
MAX_JACOBI_SWEEPS = 64


def _as_complex_array(values, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=np.complex128)
    if array.ndim != ndim:
        raise ValidationError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValidationError("amplitudes must be finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class StateVector:
    """Normalized state |psi> in C^dim."""

    components: np.ndarray

    def __post_init__(self):
        components = _as_complex_array(self.components, 1)
        if components.size == 0:
            raise ValidationError("state must have at least one component")
        norm2 = float(np.vdot(components, components).real)
        if abs(norm2 - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"state is not normalized (norm^2 = {norm2!r})")
        object.__setattr__(self, "components", components)

    @classmethod
    def normalized(cls, values) -> "StateVector":
        """Build a state from arbitrary non-zero amplitudes."""
        array = _as_complex_array(values, 1)
        norm = float(np.linalg.norm(array))
        if norm == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(array / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        array = np.zeros(dim, dtype=np.complex128)
        array[index] = 1.0
        return cls(array)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    def __hash__(self):
        return hash(self.components.tobytes())


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian dim x dim matrix. Construction validates conjugate symmetry."""

    entries: np.ndarray

    def __post_init__(self):
        entries = _as_complex_array(self.entries, 2)
        rows, cols = entries.shape
        if rows != cols or rows == 0:
            raise ValidationError(f"operator must be square, got shape {entries.shape}")
        deviation = float(np.max(np.abs(entries - entries.conj().T)))
        if deviation > HERMITIAN_TOLERANCE:
            raise ValidationError(f"operator is not Hermitian (max deviation {deviation:.3e})")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim, dtype=np.complex128))

    def __eq__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class Direction:
    """Unit vector n in polar coordinates (theta from the z axis, phi azimuth)."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        phi = float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise ValidationError("direction angles must be finite")
        if not 0.0 <= theta <= math.pi:
            raise ValidationError(f"theta must lie in [0, pi], got {theta!r}")
        phi = math.fmod(phi, 2.0 * math.pi)
        if phi < 0.0:
            phi += 2.0 * math.pi
        if phi >= 2.0 * math.pi:
            phi = 0.0
        if theta == 0.0 or theta == math.pi:
            phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def unit_vector(self) -> np.ndarray:
        return np.array([
            math.sin(self.theta) * math.cos(self.phi),
            math.sin(self.theta) * math.sin(self.phi),
            math.cos(self.theta),
        ])


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues A_j in ascending order with orthonormal eigenvectors f_j."""

    eigenvalues: np.ndarray
    eigenvectors: tuple[StateVector, ...]

    @property
    def dim(self) -> int:
        return len(self.eigenvectors)

    def matrix(self) -> np.ndarray:
        """Columns are the eigenvectors."""
        return np.column_stack([f.components for f in self.eigenvectors])

    def reconstruct(self) -> np.ndarray:
        """Sum_j A_j f_j f_j^dagger."""
        vectors = self.matrix()
        return (vectors * self.eigenvalues) @ vectors.conj().T


SPIN_UP = StateVector.basis(2, 0)
SPIN_DOWN = StateVector.basis(2, 1)


def spin_operator(n: Direction) -> HermitianOperator:
    """S = (n, sigma) for a spin-1/2 in the |up>, |down> basis.

    Off-diagonal elements follow <up|S|down> = e^{i phi} sin(theta), which
    fixes the sign convention of the azimuth.
    """
    cos_t = math.cos(n.theta)
    sin_t = math.sin(n.theta)
    upper = sin_t * complex(math.cos(n.phi), math.sin(n.phi))
    return HermitianOperator(np.array([
        [cos_t, upper],
        [upper.conjugate(), -cos_t],
    ]))


def _check_dims(*dims: int) -> None:
    if len(set(dims)) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {dims}")


def _raw_element(bra: np.ndarray, op: np.ndarray, ket: np.ndarray) -> complex:
    return complex(np.vdot(bra, op @ ket))


def matrix_element(bra: StateVector, op: HermitianOperator, ket: StateVector) -> complex:
    """<bra|op|ket>.

    The pair is evaluated in a canonical orientation so that swapping bra
    and ket returns the exact complex conjugate.
    """
    _check_dims(bra.dim, op.dim, ket.dim)
    bra_bytes = bra.components.tobytes()
    ket_bytes = ket.components.tobytes()
    if bra_bytes == ket_bytes:
        return complex(_raw_element(bra.components, op.entries, ket.components).real, 0.0)
    if bra_bytes < ket_bytes:
        return _raw_element(bra.components, op.entries, ket.components)
    return _raw_element(ket.components, op.entries, bra.components).conjugate()


def expectation(state: StateVector, op: HermitianOperator) -> float:
    """<state|op|state> as a real number."""
    return matrix_element(state, op, state).real


def _off_diagonal_norm(matrix: np.ndarray) -> float:
    off_diagonal = matrix[~np.eye(matrix.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(np.abs(off_diagonal) ** 2)))


def _jacobi_rotation(a_pp: float, a_qq: float, a_pq: complex) -> np.ndarray:
    """2x2 unitary U with (U^dagger M U)_{pq} = 0 for M = [[a_pp, a_pq], [a_pq*, a_qq]]."""
    magnitude = abs(a_pq)
    phase = a_pq / magnitude
    theta = (a_qq - a_pp) / (2.0 * magnitude)
    if theta == 0.0:
        t = 1.0
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.hypot(t, 1.0)
    s = t * c
    # diag(1, e^{-i beta}) makes the pair real, then a plane rotation zeroes it
    return np.array([
        [c, s],
        [-s * phase.conjugate(), c * phase.conjugate()],
    ], dtype=np.complex128)


def _canonical_phase(vector: np.ndarray) -> np.ndarray:
    index = int(np.argmax(np.abs(vector)))
    pivot = vector[index]
    vector = vector * (abs(pivot) / pivot)
    vector[index] = abs(pivot)
    return vector


def spectral_decompose(op: HermitianOperator) -> SpectralDecomposition:
    """Eigen-decomposition by cyclic complex Jacobi rotations.

    Eigenvalues are returned ascending; each eigenvector is rotated so that
    its largest-magnitude component is real and positive. Degenerate
    eigenspaces come back with whatever orthonormal basis the sweeps reach.
    """
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    dim = op.dim
    if dim > MAX_JACOBI_DIM:
        raise DimensionMismatchError(f"Jacobi solver supports dim <= {MAX_JACOBI_DIM}, got {dim}")

    work = np.array(op.entries, dtype=np.complex128)
    work = 0.5 * (work + work.conj().T)
    vectors = np.eye(dim, dtype=np.complex128)
    scale = max(float(np.linalg.norm(work)), np.finfo(float).tiny)
    negligible = np.finfo(float).eps * scale
    tolerance = 4.0 * negligible

    for _ in range(MAX_JACOBI_SWEEPS):
        if _off_diagonal_norm(work) <= tolerance:
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                a_pq = work[p, q]
                if abs(a_pq) <= negligible:
                    # below rounding of the largest entry
                    work[p, q] = 0.0
                    work[q, p] = 0.0
                    continue
                rotation = _jacobi_rotation(work[p, p].real, work[q, q].real, a_pq)
                pair = [p, q]
                work[:, pair] = work[:, pair] @ rotation
                work[pair, :] = rotation.conj().T @ work[pair, :]
                work[p, q] = 0.0
                work[q, p] = 0.0
                vectors[:, pair] = vectors[:, pair] @ rotation
    else:
        if _off_diagonal_norm(work) > tolerance:
            raise ConvergenceError(f"Jacobi sweeps did not converge for dim={dim}")

    eigenvalues = np.diag(work).real.copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvalues.setflags(write=False)
    eigenvectors = tuple(
        StateVector.normalized(_canonical_phase(vectors[:, index])) for index in order
    )
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def overlap_coefficients(state: StateVector, basis: SpectralDecomposition) -> np.ndarray:
    """Expansion coefficients c_j = <f_j|state>, in the basis' eigenvalue order."""
    _check_dims(state.dim, basis.dim)
    return np.array([np.vdot(f.components, state.components) for f in basis.eigenvectors])


def probabilities(state: StateVector, basis: SpectralDecomposition) -> np.ndarray:
    """w_j = |c_j|^2."""
    return np.abs(overlap_coefficients(state, basis)) ** 2

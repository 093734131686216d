"""Complex linear algebra for qudits.

Dense state vectors only: kets, computational and Fourier bases, product
states, unitaries on selected subsystems of a joint space, and Born-rule
projective measurement. All randomness flows through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
MAX_JOINT_AMPLITUDES = 2**20


class Basis(Enum):
    """The two bases every participant prepares and measures in."""

    COMPUTATIONAL = "computational"
    FOURIER = "fourier"


class DimensionError(ValueError):
    """Subsystem dimensions are inconsistent or exceed the dense-vector cap."""


class NotUnitaryError(ValueError):
    """A matrix supplied as a unitary fails the unitarity tolerance."""


def _freeze(amplitudes, length: int) -> np.ndarray:
    amps = np.array(amplitudes, dtype=np.complex128).reshape(length)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state not normalized: |norm-1| = {abs(norm - 1.0):.3e}")
    amps.setflags(write=False)
    return amps


@dataclass(frozen=True, eq=False)
class Ket:
    """Pure state of one d-dimensional system, amplitudes in the computational basis."""

    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"ket dimension must be >= 2, got {self.dim}")
        object.__setattr__(self, "amplitudes", _freeze(self.amplitudes, self.dim))


@dataclass(frozen=True, eq=False)
class JointState:
    """Pure state of an ordered list of subsystems, flattened in C order."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise DimensionError(f"subsystem dimensions must all be >= 2, got {dims}")
        total = int(np.prod(dims))
        if total > MAX_JOINT_AMPLITUDES:
            raise DimensionError(f"joint dimension {total} exceeds cap {MAX_JOINT_AMPLITUDES}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _freeze(self.amplitudes, total))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def basis_ket(d: int, j: int) -> Ket:
    """|j> in dimension d."""
    _check_index(d, j)
    amps = np.zeros(d, dtype=np.complex128)
    amps[j] = 1.0
    return Ket(d, amps)


def fourier_ket(d: int, j: int) -> Ket:
    """j-th Fourier-basis ket of dimension d: sum_k e^{2*pi*i*j*k/d} |k> / sqrt(d)."""
    _check_index(d, j)
    k = np.arange(d)
    return Ket(d, np.exp(2j * np.pi * j * k / d) / np.sqrt(d))


def basis_state(d: int, basis: Basis, j: int) -> Ket:
    return basis_ket(d, j) if basis is Basis.COMPUTATIONAL else fourier_ket(d, j)


@lru_cache(maxsize=None)
def basis_matrix(d: int, basis: Basis) -> np.ndarray:
    """Matrix whose column j is the j-th basis ket (read-only)."""
    if basis is Basis.COMPUTATIONAL:
        mat = np.eye(d, dtype=np.complex128)
    else:
        k = np.arange(d)
        mat = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def transition_probabilities(d: int, prepared_in: Basis, measured_in: Basis) -> np.ndarray:
    """Row m: Born distribution of outcomes when basis state m is measured in another basis."""
    prep = basis_matrix(d, prepared_in)
    meas = basis_matrix(d, measured_in)
    probs = np.abs(meas.conj().T @ prep) ** 2
    probs = probs.T.copy()
    probs.setflags(write=False)
    return probs


@lru_cache(maxsize=None)
def cumulative_transition_rows(d: int, prepared_in: Basis, measured_in: Basis) -> tuple[tuple[float, ...], ...]:
    """Per-prepared-index cumulative outcome distributions, for fast sampling."""
    probs = transition_probabilities(d, prepared_in, measured_in)
    return tuple(tuple(np.cumsum(row)) for row in probs)


def pick_outcome(cumrow, u: float) -> int:
    """Index of the first cumulative edge above u (categorical sampling)."""
    for k, edge in enumerate(cumrow):
        if u < edge:
            return k
    return len(cumrow) - 1


def inner(a: Ket | JointState, b: Ket | JointState) -> complex:
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def outcome_distribution(state: Ket, basis: Basis) -> np.ndarray:
    """Born probabilities of each outcome for a projective measurement in ``basis``."""
    mat = basis_matrix(state.dim, basis)
    return np.abs(mat.conj().T @ state.amplitudes) ** 2


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    cum /= cum[-1]
    return min(int(np.searchsorted(cum, rng.random(), side="right")), len(probs) - 1)


def measure(state: Ket, basis: Basis, rng: np.random.Generator) -> tuple[int, Ket]:
    """Projective measurement; returns the outcome and the post-measurement basis ket."""
    outcome = sample_outcome(outcome_distribution(state, basis), rng)
    return outcome, basis_state(state.dim, basis, outcome)


def product_state(kets) -> JointState:
    kets = list(kets)
    amps = reduce(np.kron, [k.amplitudes for k in kets])
    return JointState(tuple(k.dim for k in kets), amps)


def tensor_with(state: JointState, ket: Ket) -> JointState:
    """Append one fresh subsystem at the end."""
    return JointState(state.dims + (ket.dim,), np.kron(state.amplitudes, ket.amplitudes))


def is_unitary(mat: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    eye = np.eye(mat.shape[0])
    return bool(np.max(np.abs(mat.conj().T @ mat - eye)) <= tol)


def apply_joint(unitary: np.ndarray, state: JointState, subsystems) -> JointState:
    """Apply a unitary to the product space of the selected subsystems.

    ``subsystems`` lists subsystem indices in the order matching the
    unitary's tensor factor ordering.
    """
    subsystems = tuple(int(s) for s in subsystems)
    if len(set(subsystems)) != len(subsystems):
        raise DimensionError(f"repeated subsystem index in {subsystems}")
    for s in subsystems:
        if not 0 <= s < len(state.dims):
            raise DimensionError(f"subsystem {s} out of range for dims {state.dims}")
    unitary = np.asarray(unitary, dtype=np.complex128)
    d_sel = int(np.prod([state.dims[s] for s in subsystems]))
    if unitary.shape != (d_sel, d_sel):
        raise DimensionError(f"unitary shape {unitary.shape} does not match selected dimension {d_sel}")
    if not is_unitary(unitary):
        raise NotUnitaryError("matrix is not unitary within tolerance")

    tensor = state.tensor()
    moved = np.moveaxis(tensor, subsystems, range(len(subsystems)))
    shape = moved.shape
    out = unitary @ moved.reshape(d_sel, -1)
    back = np.moveaxis(out.reshape(shape), range(len(subsystems)), subsystems)
    return JointState(state.dims, back.ravel())


def _measured_coefficients(state: JointState, subsystem: int, basis: Basis):
    if not 0 <= subsystem < len(state.dims):
        raise DimensionError(f"subsystem {subsystem} out of range for dims {state.dims}")
    d = state.dims[subsystem]
    moved = np.moveaxis(state.tensor(), subsystem, 0)
    coeffs = basis_matrix(d, basis).conj().T @ moved.reshape(d, -1)
    return coeffs, moved.shape


def subsystem_distribution(state: JointState, subsystem: int, basis: Basis) -> np.ndarray:
    """Marginal Born distribution of one subsystem's measurement outcomes."""
    coeffs, _ = _measured_coefficients(state, subsystem, basis)
    return (np.abs(coeffs) ** 2).sum(axis=1)


def measure_joint(
    state: JointState, subsystem: int, basis: Basis, rng: np.random.Generator
) -> tuple[int, JointState]:
    """Born-rule measurement of one subsystem; the post-state is renormalized."""
    coeffs, moved_shape = _measured_coefficients(state, subsystem, basis)
    probs = (np.abs(coeffs) ** 2).sum(axis=1)
    outcome = sample_outcome(probs, rng)
    conditional = coeffs[outcome] / np.sqrt(probs[outcome])
    d = state.dims[subsystem]
    axis_vec = basis_state(d, basis, outcome).amplitudes
    post = np.outer(axis_vec, conditional).reshape(moved_shape)
    post = np.moveaxis(post, 0, subsystem)
    return outcome, JointState(state.dims, post.ravel())


def _check_index(d: int, j: int) -> None:
    if d < 2:
        raise DimensionError(f"dimension must be >= 2, got {d}")
    if not 0 <= j < d:
        raise ValueError(f"basis index {j} out of range for dimension {d}")

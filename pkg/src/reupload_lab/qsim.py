"""Dense state-vector and density-matrix simulation for small qubit registers.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
computational-basis index.  Everything here works on plain ``numpy`` arrays:
a state vector is a complex 1-D array of length ``2**n``, a density matrix is
a ``(2**n, 2**n)`` complex array.

Batched kernels (``apply_1q``, ``apply_perm``) operate on arrays shaped
``(batch, 2**n)`` and are what the training loops use.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_QUBITS = 10
CONSTRUCTION_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


class QuantumDomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def _check_angle(angle: float) -> float:
    angle = float(angle)
    if not math.isfinite(angle):
        raise QuantumDomainError(f"rotation angle must be finite, got {angle}")
    return angle


def rz(angle: float) -> np.ndarray:
    """``exp(-i * angle * Z / 2)``."""
    a = _check_angle(angle)
    return np.array([[np.exp(-0.5j * a), 0], [0, np.exp(0.5j * a)]], dtype=complex)


def ry(angle: float) -> np.ndarray:
    """``exp(-i * angle * Y / 2)``."""
    a = _check_angle(angle)
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def r3(phi1: float, phi2: float, phi3: float) -> np.ndarray:
    """General single-qubit rotation ``rz(phi3) @ ry(phi2) @ rz(phi1)``."""
    return rz(phi3) @ ry(phi2) @ rz(phi1)


def r3_batch(angles: np.ndarray) -> np.ndarray:
    """Vectorised :func:`r3` over the last axis.

    Args:
        angles: real array of shape ``(..., 3)`` holding ``(phi1, phi2, phi3)``.

    Returns:
        Complex array of shape ``(..., 2, 2)``.
    """
    angles = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(angles)):
        raise QuantumDomainError("rotation angles must be finite")
    p1, p2, p3 = angles[..., 0], angles[..., 1], angles[..., 2]
    c, s = np.cos(p2 / 2), np.sin(p2 / 2)
    plus = np.exp(-0.5j * (p1 + p3))
    minus = np.exp(0.5j * (p1 - p3))
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = plus * c
    out[..., 0, 1] = -minus * s
    out[..., 1, 0] = np.conj(minus) * s
    out[..., 1, 1] = np.conj(plus) * c
    return out


def r3_derivatives(angles: np.ndarray) -> np.ndarray:
    """Partial derivatives of :func:`r3_batch` w.r.t. each of the three angles.

    Returns an array of shape ``(..., 3, 2, 2)``.
    """
    angles = np.asarray(angles, dtype=float)
    g = r3_batch(angles)
    p1, p2, p3 = angles[..., 0], angles[..., 1], angles[..., 2]
    half_z = -0.5j * Z
    d = np.empty(angles.shape[:-1] + (3, 2, 2), dtype=complex)
    d[..., 0, :, :] = g @ half_z
    d[..., 2, :, :] = half_z @ g
    # d/dphi2: rz(phi3) (-iY/2) ry(phi2) rz(phi1)
    c, s = np.cos(p2 / 2), np.sin(p2 / 2)
    dry = np.empty(angles.shape[:-1] + (2, 2), dtype=complex)
    dry[..., 0, 0] = -0.5 * s
    dry[..., 0, 1] = -0.5 * c
    dry[..., 1, 0] = 0.5 * c
    dry[..., 1, 1] = -0.5 * s
    e3 = np.exp(-0.5j * p3)
    e1 = np.exp(-0.5j * p1)
    d[..., 1, 0, 0] = e3 * dry[..., 0, 0] * e1
    d[..., 1, 0, 1] = e3 * dry[..., 0, 1] * np.conj(e1)
    d[..., 1, 1, 0] = np.conj(e3) * dry[..., 1, 0] * e1
    d[..., 1, 1, 1] = np.conj(e3) * dry[..., 1, 1] * np.conj(e1)
    return d


def _check_qubits(n_qubits: int) -> int:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise QuantumDomainError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    return int(n_qubits)


def embed(gate: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Lift a 2x2 gate to the full register: ``I^(qubit) (x) gate (x) I^(rest)``."""
    _check_qubits(n_qubits)
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (n_qubits - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, np.asarray(gate, dtype=complex)), right)


def _bit(index: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    return (index >> (n_qubits - 1 - qubit)) & 1


@lru_cache(maxsize=None)
def cnot_ring_permutation(n_qubits: int) -> np.ndarray:
    """Index map ``perm`` such that ``(cnot_ring(n) @ psi) == psi[perm]``."""
    _check_qubits(n_qubits)
    if n_qubits < 2:
        raise QuantumDomainError("a CNOT ring needs at least two qubits")
    # Gather form: output[k] = input[perm[k]].  Composing gates in ascending
    # order means the last gate's index map is applied first.
    perm = np.arange(2**n_qubits)
    for i in range(n_qubits):
        c, t = i, (i + 1) % n_qubits
        flip = _bit(perm, c, n_qubits) << (n_qubits - 1 - t)
        perm = perm ^ flip
    out = np.empty_like(perm)
    # perm currently maps input index -> output index; invert for gather.
    out[perm] = np.arange(2**n_qubits)
    out.setflags(write=False)
    return out


def cnot(control: int, target: int, n_qubits: int) -> np.ndarray:
    """Full-register CNOT matrix."""
    _check_qubits(n_qubits)
    if control == target or not (0 <= control < n_qubits and 0 <= target < n_qubits):
        raise QuantumDomainError(f"invalid CNOT({control}->{target}) on {n_qubits} qubits")
    dim = 2**n_qubits
    idx = np.arange(dim)
    dest = idx ^ (_bit(idx, control, n_qubits) << (n_qubits - 1 - target))
    m = np.zeros((dim, dim), dtype=complex)
    m[dest, idx] = 1
    return m


def cnot_ring(n_qubits: int) -> np.ndarray:
    """CNOT(i -> i+1 mod n) for i = 0..n-1, applied in ascending order."""
    _check_qubits(n_qubits)
    if n_qubits < 2:
        raise QuantumDomainError("a CNOT ring needs at least two qubits")
    u = np.eye(2**n_qubits, dtype=complex)
    for i in range(n_qubits):
        u = cnot(i, (i + 1) % n_qubits, n_qubits) @ u
    return u


def is_unitary(u: np.ndarray, atol: float = CONSTRUCTION_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= atol)


def _dim_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise QuantumDomainError(f"dimension {dim} is not a power of two")
    return n


def basis_state(bits: Sequence[int] | str) -> np.ndarray:
    """Computational basis vector ``|b0 b1 ... b_{n-1}>``."""
    bits = [int(b) for b in bits]
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int("".join(map(str, bits)), 2)] = 1
    return psi


def zero_state(n_qubits: int) -> np.ndarray:
    return basis_state([0] * _check_qubits(n_qubits))


def check_state_vector(psi: np.ndarray, atol: float = CONSTRUCTION_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise QuantumDomainError("state vector must be one-dimensional")
    _dim_qubits(psi.shape[0])
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1) > atol:
        raise QuantumDomainError(f"state vector not normalised (|psi|^2 = {norm})")
    return psi


def check_density(rho: np.ndarray, atol: float = CONSTRUCTION_TOL) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise QuantumDomainError(f"density matrix must be square, got shape {rho.shape}")
    _dim_qubits(rho.shape[0])
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise QuantumDomainError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > atol:
        raise QuantumDomainError(f"density matrix trace is {tr}, expected 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -1e-9:
        raise QuantumDomainError(f"density matrix has negative eigenvalue {lo}")
    return rho


def apply(gate: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Apply a full-register unitary to a state vector."""
    gate = np.asarray(gate, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if gate.shape != (state.shape[0], state.shape[0]):
        raise QuantumDomainError(f"gate shape {gate.shape} does not match state dim {state.shape[0]}")
    out = gate @ state
    norm = np.vdot(out, out).real
    if abs(norm - 1) > CONSTRUCTION_TOL:
        raise QuantumDomainError(f"gate application broke normalisation ({norm})")
    return out


def density_from_vector(psi: np.ndarray) -> np.ndarray:
    psi = check_state_vector(psi)
    return np.outer(psi, psi.conj())


def mix(states: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Convex combination of density matrices."""
    weights = np.asarray(weights, dtype=float)
    if len(states) != len(weights) or len(states) == 0:
        raise QuantumDomainError("need one weight per state and at least one state")
    if np.any(weights < 0):
        raise QuantumDomainError("mixture weights must be non-negative")
    if abs(weights.sum() - 1) > 1e-6:
        raise QuantumDomainError(f"mixture weights sum to {weights.sum()}, expected 1")
    rho = sum(w * np.asarray(s, dtype=complex) for w, s in zip(weights, states))
    return check_density(rho, atol=1e-9)


def maximally_mixed(n_qubits: int) -> np.ndarray:
    d = 2 ** _check_qubits(n_qubits)
    return np.eye(d, dtype=complex) / d


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.sum(rho * rho.T)))


class ObservableKind(enum.Enum):
    H0 = "H0"
    H1 = "H1"
    TENSOR_Z = "TensorZ"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Observable:
    """Hermitian measurement operator with spectrum in [-1, 1]."""

    matrix: np.ndarray
    kind: ObservableKind = ObservableKind.CUSTOM

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumDomainError("observable must be a square matrix")
        _dim_qubits(m.shape[0])
        if np.max(np.abs(m - m.conj().T)) > CONSTRUCTION_TOL:
            raise QuantumDomainError("observable is not Hermitian")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -1 - 1e-9 or ev.max() > 1 + 1e-9:
            raise QuantumDomainError("observable eigenvalues must lie in [-1, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _dim_qubits(self.matrix.shape[0])

    @property
    def diagonal(self) -> np.ndarray | None:
        """Diagonal entries when the observable is diagonal, else ``None``."""
        d = np.diag(self.matrix)
        if np.count_nonzero(self.matrix - np.diag(d)) == 0:
            return d.real.copy()
        return None

    @classmethod
    def h0(cls, n_qubits: int = 1) -> "Observable":
        """``|0><0|`` on qubit 0."""
        return cls(embed(np.diag([1.0, 0.0]), 0, n_qubits), ObservableKind.H0)

    @classmethod
    def h1(cls, n_qubits: int = 1) -> "Observable":
        """``|1><1|`` on qubit 0."""
        return cls(embed(np.diag([0.0, 1.0]), 0, n_qubits), ObservableKind.H1)

    @classmethod
    def tensor_z(cls, n_qubits: int) -> "Observable":
        """``Z (x) Z (x) ... (x) Z``."""
        m = np.array([[1.0]], dtype=complex)
        for _ in range(_check_qubits(n_qubits)):
            m = np.kron(m, Z)
        return cls(m, ObservableKind.TENSOR_Z)


def expectation(obs: Observable | np.ndarray, state: np.ndarray) -> float:
    """``Tr[H rho]`` for a density matrix or ``<psi|H|psi>`` for a vector."""
    h = obs.matrix if isinstance(obs, Observable) else np.asarray(obs, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != h.shape[0]:
        raise QuantumDomainError(f"observable dim {h.shape[0]} != state dim {state.shape[0]}")
    if state.ndim == 1:
        return float(np.vdot(state, h @ state).real)
    return float(np.real(np.sum(h * state.T)))


# -- batched kernels ---------------------------------------------------------


def apply_1q(states: np.ndarray, gates: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply single-qubit gates to a batch of state vectors.

    Args:
        states: ``(batch, 2**n)`` complex array.
        gates: ``(2, 2)`` gate shared by the batch or ``(batch, 2, 2)``.
        qubit: target qubit.
        n_qubits: register size.
    """
    b = states.shape[0]
    s = states.reshape(b, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    if gates.ndim == 2:
        out = np.einsum("ij,bajc->baic", gates, s)
    else:
        out = np.einsum("bij,bajc->baic", gates, s)
    return out.reshape(b, -1)


def reduced_outer(left: np.ndarray, right: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """``M[b, i, j] = sum_rest conj(left[b, ..i..]) * right[b, ..j..]`` on one qubit."""
    b = left.shape[0]
    shape = (b, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    return np.einsum("baic,bajc->bij", left.reshape(shape).conj(), right.reshape(shape))


def apply_perm(states: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return states[:, perm]

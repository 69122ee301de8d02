"""Pauli-basis coefficients and transfer matrices.

Coefficients of an ``n``-qubit state are ``alpha_i = Tr[rho P_i]`` over the
basis ``{I, Z, X, Y}^(x)n``.  Qubit 0 is the leftmost factor, so the index
runs fastest on the last qubit, exactly like ``np.kron`` ordering.  With this
convention ``rho = 2**-n * sum_i alpha_i P_i``.

A transfer matrix ``T`` maps coefficients under a map: ``beta = T @ alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rng
from .model import (
    CircuitSpec,
    check_theta,
    simulate,
    trainable_layer_unitary,
)
from .qsim import I2, X, Y, Z, QuantumDomainError

SINGLE_BASIS = (I2, Z, X, Y)
LABELS = "IZXY"


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> np.ndarray:
    """Stack of all ``4**n`` Pauli strings, shape ``(4**n, 2**n, 2**n)``."""
    basis = np.ones((1, 1, 1), dtype=complex)
    for _ in range(n_qubits):
        basis = np.einsum("aij,bkl->abikjl", basis, np.stack(SINGLE_BASIS))
        d = basis.shape[2] * basis.shape[3]
        basis = basis.reshape(-1, d, d)
    basis.setflags(write=False)
    return basis


def pauli_label(index: int, n_qubits: int) -> str:
    chars = []
    for _ in range(n_qubits):
        index, r = divmod(index, 4)
        chars.append(LABELS[r])
    return "".join(reversed(chars))


def _n_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if 2**n != dim:
        raise QuantumDomainError(f"dimension {dim} is not a power of two")
    return n


def to_pauli(rho: np.ndarray) -> np.ndarray:
    """Real coefficient vector ``Tr[rho P_i]`` (length ``4**n``)."""
    rho = np.asarray(rho, dtype=complex)
    n = _n_from_dim(rho.shape[0])
    # Tr[rho P] = sum_ij rho_ij P_ji
    return np.real(np.einsum("ij,aji->a", rho, pauli_basis(n)))


def from_pauli(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    n = int(round(math.log(coeffs.shape[0], 4)))
    if 4**n != coeffs.shape[0]:
        raise QuantumDomainError(f"coefficient vector length {coeffs.shape[0]} is not 4**n")
    return np.einsum("a,aij->ij", coeffs, pauli_basis(n)) / 2**n


def check_pauli_vector(coeffs: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    n = int(round(math.log(coeffs.shape[0], 4)))
    if abs(coeffs[0] - 1) > atol:
        raise QuantumDomainError(f"identity coefficient is {coeffs[0]}, expected 1")
    scaled = float(coeffs @ coeffs) / 2**n
    if not (2.0**-n - atol <= scaled <= 1 + atol):
        raise QuantumDomainError(f"2^-n |coeffs|^2 = {scaled} outside [2^-n, 1]")
    return coeffs


def transfer_of_unitary(u: np.ndarray) -> np.ndarray:
    """``T[i, j] = Tr[P_i U P_j U^dag] / 2**n``."""
    u = np.asarray(u, dtype=complex)
    n = _n_from_dim(u.shape[0])
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-8:
        raise QuantumDomainError("transfer_of_unitary needs a unitary matrix")
    basis = pauli_basis(n)
    conj = np.einsum("ij,ajk,lk->ail", u, basis, u.conj())
    return np.real(np.einsum("bji,aij->ba", basis, conj)) / 2**n


def is_transfer_block(t: np.ndarray, atol: float = 1e-9) -> bool:
    """First row and column equal ``e_0``: the ``1 (+) block`` structure."""
    e0 = np.zeros(t.shape[0])
    e0[0] = 1
    return bool(np.allclose(t[0], e0, atol=atol, rtol=0) and np.allclose(t[:, 0], e0, atol=atol, rtol=0))


def is_orthogonal(t: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(t.T @ t - np.eye(t.shape[0]))) <= atol)


def rz_transfer(x: float) -> np.ndarray:
    c, s = math.cos(x), math.sin(x)
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, -s], [0, 0, s, c]], dtype=float)


def ry_transfer(x: float) -> np.ndarray:
    c, s = math.cos(x), math.sin(x)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1]], dtype=float)


# -- expectations over Gaussian data ------------------------------------------------


def expected_cos_sin(mu: float, sigma2: float) -> tuple[float, float]:
    """``(E cos x, E sin x)`` for ``x ~ N(mu, sigma2)``."""
    if sigma2 < 0:
        raise QuantumDomainError("variance must be non-negative")
    a = math.exp(-sigma2 / 2)
    return a * math.cos(mu), a * math.sin(mu)


def _expected_rot(cos_sin: tuple[float, float], axis: str) -> np.ndarray:
    c, s = cos_sin
    m = np.eye(4)
    i, j = (2, 3) if axis == "z" else (1, 2)
    m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
    return m


def expected_transfer_single(mu, sigma2) -> np.ndarray:
    """Closed-form ``E[T(x)]`` of the encoding gate ``r3(x)`` for independent
    ``x_i ~ N(mu_i, sigma2_i)``.

    Entry names follow ``t_ab``: the weight of input Pauli ``a`` in output
    Pauli ``b``, with ``A_i = exp(-sigma2_i / 2)``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if mu.shape != (3,) or sigma2.shape != (3,):
        raise ValueError("need three means and three variances")
    if np.any(sigma2 <= 0):
        raise QuantumDomainError("variances must be positive")
    a1, a2, a3 = np.exp(-sigma2 / 2)
    c1, c2, c3 = np.cos(mu)
    s1, s2, s3 = np.sin(mu)
    t_zz = a2 * c2
    t_zx = a2 * s2 * a3 * c3
    t_zy = a2 * s2 * a3 * s3
    t_xz = -a2 * s2 * a1 * c1
    t_xx = a2 * c2 * a1 * c1 * a3 * c3 - a1 * s1 * a3 * s3
    t_xy = a2 * c2 * a1 * c1 * a3 * s3 + a1 * s1 * a3 * c3
    t_yz = a2 * s2 * a1 * s1
    t_yx = -a2 * c2 * a1 * s1 * a3 * c3 - a1 * c1 * a3 * s3
    t_yy = -a2 * c2 * a1 * s1 * a3 * s3 + a1 * c1 * a3 * c3
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, t_zz, t_xz, t_yz],
        [0.0, t_zx, t_xx, t_yx],
        [0.0, t_zy, t_xy, t_yy],
    ])


def expected_transfer_product(mu, sigma2) -> np.ndarray:
    """``E[T_z(x3)] E[T_y(x2)] E[T_z(x1)]`` built factor by factor."""
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    return (_expected_rot(expected_cos_sin(mu[2], sigma2[2]), "z")
            @ _expected_rot(expected_cos_sin(mu[1], sigma2[1]), "y")
            @ _expected_rot(expected_cos_sin(mu[0], sigma2[0]), "z"))


def contraction_eigenvalue(t: np.ndarray) -> float:
    """Largest eigenvalue of ``B^T B`` for the lower-right 3x3 block ``B``."""
    block = np.asarray(t, dtype=float)[1:, 1:]
    return float(np.linalg.eigvalsh(block.T @ block).max())


@dataclass(frozen=True)
class GaussianSpec:
    """Independent Gaussian data: one mean and variance per data element."""

    means: np.ndarray
    variances: np.ndarray
    sigma_floor: float | None = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).copy()
        var = np.asarray(self.variances, dtype=float).copy()
        if var.ndim == 0:
            var = np.full(means.shape, float(var))
        if means.shape != var.shape or means.ndim != 1:
            raise ValueError("means and variances must be 1-D of equal length")
        if self.sigma_floor is not None:
            floor = float(self.sigma_floor)
        else:
            floor = float(var.min()) if var.size else 1.0
        if floor <= 0 or np.any(var < floor):
            raise ValueError("every variance must be >= sigma_floor > 0")
        means.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "sigma_floor", floor)

    @classmethod
    def iid(cls, means, sigma2: float) -> "GaussianSpec":
        means = np.asarray(means, dtype=float)
        return cls(means, np.full(means.shape, sigma2), sigma2)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        z = rng.normal(gen, (size, len(self.means)))
        return self.means + np.sqrt(self.variances) * z


def _expected_layer_transfer(spec: CircuitSpec, gauss: GaussianSpec, layer: int) -> np.ndarray:
    n = spec.n_qubits
    mu = gauss.means.reshape(spec.encoding_layers, n, 3)[layer]
    var = gauss.variances.reshape(spec.encoding_layers, n, 3)[layer]
    t = np.ones((1, 1))
    for q in range(n):
        t = np.kron(t, expected_transfer_single(mu[q], var[q]))
    return t


def initial_pauli(n_qubits: int) -> np.ndarray:
    """Coefficients of ``|0...0><0...0|``: ``(1, 1, 0, 0)`` on every qubit."""
    v = np.ones(1)
    for _ in range(n_qubits):
        v = np.kron(v, [1.0, 1.0, 0.0, 0.0])
    return v


def expected_state_analytic(spec: CircuitSpec, gauss: GaussianSpec, theta: np.ndarray) -> np.ndarray:
    """Pauli vector of ``E_x[rho(x, theta)]`` for a single-upload circuit.

    Chains ``H_l E[T(x_[l])]`` over the layers starting from ``|0...0>``.
    Padded layers (beyond the encoding layers) contribute only ``H_l``.
    """
    if spec.repetitions != 1:
        raise QuantumDomainError("the layer-wise factorisation only holds for one repetition")
    theta = check_theta(spec, theta)
    if len(gauss.means) != spec.data_dim:
        raise ValueError(f"Gaussian spec has {len(gauss.means)} entries, circuit needs {spec.data_dim}")
    beta = initial_pauli(spec.n_qubits)
    for l in range(spec.total_layers):
        if l < spec.encoding_layers:
            beta = _expected_layer_transfer(spec, gauss, l) @ beta
        beta = transfer_of_unitary(trainable_layer_unitary(spec, theta, 0, l)) @ beta
    return beta


def expected_state_monte_carlo(spec: CircuitSpec, gauss: GaussianSpec, theta: np.ndarray,
                               samples: int, seed: int, chunk: int = 20000) -> np.ndarray:
    """Equal-weight mixture of encoded pure states over i.i.d. Gaussian draws.

    Draws are generated in fixed chunks, each from its own ``mc`` stream, and
    summed in chunk order, so the result depends only on ``seed``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = check_theta(spec, theta)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    for k, start in enumerate(range(0, samples, chunk)):
        size = min(chunk, samples - start)
        xs = gauss.sample(rng.stream(seed, "mc", k), size)
        psi = simulate(spec, xs, theta)
        rho += psi.T @ psi.conj()
    return rho / samples


def average_state(spec: CircuitSpec, xs: np.ndarray, theta: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Mean encoded density matrix over given inputs."""
    xs = np.asarray(xs, dtype=float)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    for start in range(0, len(xs), chunk):
        psi = simulate(spec, xs[start:start + chunk], theta)
        rho += psi.T @ psi.conj()
    return rho / len(xs)


def single_gate_transfer_samples(xs: np.ndarray) -> np.ndarray:
    """Exact transfer matrices of ``r3(x)`` for each row of ``xs``, vectorised
    via ``T_z(x3) T_y(x2) T_z(x1)``."""
    xs = np.asarray(xs, dtype=float)
    m = xs.shape[0]

    def rot(angle, i, j):
        t = np.zeros((m, 4, 4))
        t[:, 0, 0] = 1
        c, s = np.cos(angle), np.sin(angle)
        t[:, i, i], t[:, i, j], t[:, j, i], t[:, j, j] = c, -s, s, c
        fixed = ({1, 2, 3} - {i, j}).pop()
        t[:, fixed, fixed] = 1
        return t

    return rot(xs[:, 2], 2, 3) @ rot(xs[:, 1], 1, 2) @ rot(xs[:, 0], 2, 3)

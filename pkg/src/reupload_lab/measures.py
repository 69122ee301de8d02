"""Distinguishability measures between density matrices and the closed-form
concentration bounds for deep encoders.

All logarithms are base 2.
"""

from __future__ import annotations

import math

import numpy as np

from .qsim import QuantumDomainError, purity

FULL_RANK_TOL = 1e-10


def _herm_eig(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rho = np.asarray(rho, dtype=complex)
    return np.linalg.eigh(0.5 * (rho + rho.conj().T))


def _matrix_power(rho: np.ndarray, power: float) -> np.ndarray:
    w, v = _herm_eig(rho)
    w = np.clip(w, 0.0, None)
    with np.errstate(divide="ignore"):
        wp = np.where(w > 0, w**power, 0.0) if power < 0 else w**power
    return (v * wp) @ v.conj().T


def _require_full_rank(rho: np.ndarray) -> np.ndarray:
    w, _ = _herm_eig(rho)
    lo = float(w.min())
    if lo <= FULL_RANK_TOL:
        raise QuantumDomainError(
            f"second argument must be full rank; smallest eigenvalue is {lo:.3e}"
        )
    return w


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Half the Schatten 1-norm of the difference."""
    w, _ = _herm_eig(np.asarray(rho1) - np.asarray(rho2))
    return float(min(1.0, 0.5 * np.abs(w).sum()))


def fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`` (not squared)."""
    s1 = _matrix_power(rho1, 0.5)
    w, _ = _herm_eig(s1 @ np.asarray(rho2) @ s1)
    return float(min(1.0, np.sqrt(np.clip(w, 0, None)).sum()))


def affinity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """``Tr[sqrt(rho1) sqrt(rho2)]``."""
    val = np.trace(_matrix_power(rho1, 0.5) @ _matrix_power(rho2, 0.5)).real
    return float(min(1.0, max(0.0, val)))


def renyi(alpha: float, rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Petz-Renyi divergence ``log2(Tr[rho1^a rho2^(1-a)]) / (a - 1)``.

    ``rho2`` must be full rank, which also covers the support condition.
    """
    if alpha <= 0:
        raise QuantumDomainError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        raise QuantumDomainError("alpha = 1 is the relative entropy limit; not provided here")
    _require_full_rank(rho2)
    q = np.trace(_matrix_power(rho1, alpha) @ _matrix_power(rho2, 1.0 - alpha)).real
    return float(math.log2(q) / (alpha - 1.0))


def d2(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Petz-Renyi-2 divergence ``log2 Tr[rho1^2 rho2^-1]``."""
    w, v = _herm_eig(rho2)
    lo = float(w.min())
    if lo <= FULL_RANK_TOL:
        raise QuantumDomainError(
            f"d2 needs a full-rank reference state; smallest eigenvalue is {lo:.3e}"
        )
    rho1 = np.asarray(rho1, dtype=complex)
    inv = (v / w) @ v.conj().T
    return float(math.log2(np.trace(rho1 @ rho1 @ inv).real))


def d2_to_maximally_mixed(rho: np.ndarray) -> float:
    """``N + log2(purity)``, the divergence against ``I / 2**N``."""
    rho = np.asarray(rho)
    n = int(rho.shape[0]).bit_length() - 1
    return n + math.log2(purity(rho))


def td_from_d2_bound(d2_value: float) -> float:
    """Upper bound ``sqrt(1 - 2**-D2)`` on the trace distance."""
    if d2_value < 0:
        raise QuantumDomainError(f"divergence must be non-negative, got {d2_value}")
    return math.sqrt(1.0 - 2.0 ** (-d2_value))


def divergence_bound(n_qubits: int, layers: int, sigma2: float) -> float:
    """``log2(1 + (2**N - 1) exp(-L sigma2))``: divergence ceiling of the
    expected encoded state after ``layers`` Gaussian encoding layers."""
    if layers < 0:
        raise QuantumDomainError("layers must be non-negative")
    if sigma2 <= 0:
        raise QuantumDomainError("sigma2 must be positive")
    return math.log2(1.0 + (2**n_qubits - 1) * math.exp(-layers * sigma2))


def layer_threshold(n_qubits: int, sigma2: float, eps: float) -> int:
    """Smallest integer ``L >= ((N + 2) ln 2 + 2 ln(1/eps)) / sigma2``."""
    if not 0 < eps < 1:
        raise QuantumDomainError(f"eps must lie in (0, 1), got {eps}")
    if sigma2 <= 0:
        raise QuantumDomainError("sigma2 must be positive")
    return math.ceil(((n_qubits + 2) * math.log(2) + 2 * math.log(1 / eps)) / sigma2)

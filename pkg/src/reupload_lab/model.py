"""Data re-uploading circuits: construction, evaluation, gradients, training.

A circuit with ``N`` qubits, ``L`` encoding layers padded to ``L_max`` total
layers and ``P`` repetitions applies, for ``p = 1..P`` and ``l = 1..L_max``:

1. an encoding layer, ``r3(x[l, n])`` on every qubit ``n`` (identity for
   ``l > L``, where the data slot is a zero vector),
2. a trainable layer, ``r3(theta[p, l, n])`` on every qubit, followed by the
   CNOT ring when ``entangler == "ring_cnot"`` and ``N >= 2``.

Data vectors have length ``3 * N * L`` and are read layer-major, then qubit,
then rotation component.  Parameters are arrays of shape ``(P, L_max, N, 3)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Literal

import numpy as np

from . import rng
from .qsim import (
    Observable,
    apply_1q,
    apply_perm,
    cnot_ring,
    cnot_ring_permutation,
    embed,
    r3_batch,
    r3_derivatives,
    reduced_outer,
)

log = logging.getLogger(__name__)

Task = Literal["classification", "regression"]
TIE_TOL = 1e-12


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    encoding_layers: int
    total_layers: int | None = None
    repetitions: int = 1
    entangler: Literal["ring_cnot", "none"] = "ring_cnot"

    def __post_init__(self):
        if self.total_layers is None:
            object.__setattr__(self, "total_layers", self.encoding_layers)
        if not 1 <= self.n_qubits <= 10:
            raise ValueError(f"n_qubits must be in [1, 10], got {self.n_qubits}")
        if self.encoding_layers < 0 or self.total_layers < self.encoding_layers:
            raise ValueError("need 0 <= encoding_layers <= total_layers")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.entangler not in ("ring_cnot", "none"):
            raise ValueError(f"unknown entangler {self.entangler!r}")

    @property
    def data_dim(self) -> int:
        return 3 * self.n_qubits * self.encoding_layers

    @property
    def theta_shape(self) -> tuple[int, int, int, int]:
        return (self.repetitions, self.total_layers, self.n_qubits, 3)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def has_ring(self) -> bool:
        return self.entangler == "ring_cnot" and self.n_qubits >= 2

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "encoding_layers": self.encoding_layers,
            "total_layers": self.total_layers,
            "repetitions": self.repetitions,
            "entangler": self.entangler,
        }


def check_theta(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != spec.theta_shape:
        raise ValueError(f"theta shape {theta.shape} != expected {spec.theta_shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite values")
    return theta


def init_theta(spec: CircuitSpec, seed: int) -> np.ndarray:
    """Standard-normal initial angles from the ``init`` stream of ``seed``."""
    return rng.normal(rng.stream(seed, "init"), spec.theta_shape)


def _check_data(spec: CircuitSpec, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.shape[1] != spec.data_dim:
        raise ValueError(f"data dimension {xs.shape[1]} != 3*N*L = {spec.data_dim}")
    return xs


# -- circuit walk ----------------------------------------------------------------


def _ops(spec: CircuitSpec) -> Iterator[tuple]:
    """Gate sequence in application order.

    Yields ``("enc", l, n)``, ``("par", p, l, n)`` and ``("ring",)``.
    """
    for p in range(spec.repetitions):
        for l in range(spec.total_layers):
            if l < spec.encoding_layers:
                for n in range(spec.n_qubits):
                    yield ("enc", l, n)
            for n in range(spec.n_qubits):
                yield ("par", p, l, n)
            if spec.has_ring:
                yield ("ring",)


def _encoding_gates(spec: CircuitSpec, xs: np.ndarray) -> np.ndarray:
    """``(batch, L, N, 2, 2)`` encoding rotations."""
    b = xs.shape[0]
    return r3_batch(xs.reshape(b, spec.encoding_layers, spec.n_qubits, 3))


def simulate(spec: CircuitSpec, xs: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Encoded pure states ``V(x, theta)|0...0>`` for a batch of inputs.

    Returns a ``(batch, 2**N)`` complex array.
    """
    xs = _check_data(spec, xs)
    theta = check_theta(spec, theta)
    enc = _encoding_gates(spec, xs)
    par = r3_batch(theta)
    perm = cnot_ring_permutation(spec.n_qubits) if spec.has_ring else None
    n = spec.n_qubits
    if not spec.has_ring:
        states = _qubit_states(spec, enc, par)
        out = states[:, 0]
        for q in range(1, n):
            out = np.einsum("bi,bj->bij", out, states[:, q]).reshape(len(xs), -1)
        return out
    states = np.zeros((xs.shape[0], spec.dim), dtype=complex)
    states[:, 0] = 1.0
    for op in _ops(spec):
        if op[0] == "enc":
            states = apply_1q(states, enc[:, op[1], op[2]], op[2], n)
        elif op[0] == "par":
            states = apply_1q(states, par[op[1], op[2], op[3]], op[3], n)
        else:
            states = apply_perm(states, perm)
    return states


def _mv(g: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Batched 2x2 gate times 2-vector; ``g`` is ``(2, 2)`` or ``(..., 2, 2)``."""
    return np.stack([g[..., 0, 0] * psi[..., 0] + g[..., 0, 1] * psi[..., 1],
                     g[..., 1, 0] * psi[..., 0] + g[..., 1, 1] * psi[..., 1]], axis=-1)


def _qubit_states(spec: CircuitSpec, enc: np.ndarray, par: np.ndarray) -> np.ndarray:
    """Per-qubit states ``(batch, N, 2)`` of an entangler-free circuit."""
    b = enc.shape[0]
    psi = np.zeros((b, spec.n_qubits, 2), dtype=complex)
    psi[..., 0] = 1.0
    for p in range(spec.repetitions):
        for l in range(spec.total_layers):
            if l < spec.encoding_layers:
                psi = _mv(enc[:, l], psi)
            psi = _mv(par[p, l], psi)
    return psi


def build_unitary(spec: CircuitSpec, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Full ``2**N x 2**N`` matrix of ``V(x, theta)`` for a single input."""
    xs = _check_data(spec, x)
    theta = check_theta(spec, theta)
    enc = _encoding_gates(spec, xs)[0]
    par = r3_batch(theta)
    n = spec.n_qubits
    ring = cnot_ring(n) if spec.has_ring else None
    u = np.eye(spec.dim, dtype=complex)
    for op in _ops(spec):
        if op[0] == "enc":
            u = embed(enc[op[1], op[2]], op[2], n) @ u
        elif op[0] == "par":
            u = embed(par[op[1], op[2], op[3]], op[3], n) @ u
        else:
            u = ring @ u
    return u


def encoding_layer_unitary(spec: CircuitSpec, chunk: np.ndarray) -> np.ndarray:
    """``R_l(x_[l])``: r3 rotations of one data chunk (length 3N) on all qubits."""
    gates = r3_batch(np.asarray(chunk, dtype=float).reshape(spec.n_qubits, 3))
    u = np.array([[1.0]], dtype=complex)
    for g in gates:
        u = np.kron(u, g)
    return u


def trainable_layer_unitary(spec: CircuitSpec, theta: np.ndarray, p: int, l: int) -> np.ndarray:
    """``U_l(theta_{p,l})``: per-qubit r3 rotations followed by the entangler."""
    gates = r3_batch(check_theta(spec, theta)[p, l])
    u = np.array([[1.0]], dtype=complex)
    for g in gates:
        u = np.kron(u, g)
    if spec.has_ring:
        u = cnot_ring(spec.n_qubits) @ u
    return u


# -- hypotheses and observables --------------------------------------------------


def observable_for(spec: CircuitSpec, task: Task, label: int | None = None) -> Observable:
    if task == "regression":
        return Observable.tensor_z(spec.n_qubits)
    if label == 0:
        return Observable.h0(spec.n_qubits)
    if label == 1:
        return Observable.h1(spec.n_qubits)
    raise ValueError(f"classification label must be 0 or 1, got {label!r}")


def _diag_table(spec: CircuitSpec, task: Task) -> np.ndarray:
    """Diagonals of the (diagonal) observables: row ``y`` for label ``y``."""
    if task == "regression":
        return observable_for(spec, task).diagonal[None, :]
    return np.stack([observable_for(spec, task, y).diagonal for y in (0, 1)])


def _obs_diagonals(spec: CircuitSpec, task: Task, ys: np.ndarray | None, batch: int) -> np.ndarray:
    table = _diag_table(spec, task)
    if task == "regression":
        return np.broadcast_to(table[0], (batch, spec.dim))
    ys = np.asarray(ys)
    if ys.shape != (batch,) or not np.all((ys == 0) | (ys == 1)):
        raise ValueError("classification labels must be 0/1, one per sample")
    return table[ys.astype(int)]


def _obs_factors(spec: CircuitSpec, task: Task, ys: np.ndarray | None, batch: int) -> np.ndarray:
    """Per-qubit diagonal factors ``(batch, N, 2)``; every observable used here
    is a tensor product of diagonal single-qubit operators."""
    f = np.ones((batch, spec.n_qubits, 2))
    if task == "regression":
        f[..., 1] = -1.0
        return f
    ys = np.asarray(ys)
    if ys.shape != (batch,) or not np.all((ys == 0) | (ys == 1)):
        raise ValueError("classification labels must be 0/1, one per sample")
    f[:, 0, 0] = ys == 0
    f[:, 0, 1] = ys == 1
    return f


def outputs(spec: CircuitSpec, xs: np.ndarray, theta: np.ndarray, task: Task,
            ys: np.ndarray | None = None) -> np.ndarray:
    """Measurement results ``h(x)`` for a batch.

    Classification uses ``H_y`` with the sample's own label; regression uses
    ``Z (x) ... (x) Z`` and ignores ``ys``.
    """
    states = simulate(spec, xs, theta)
    probs = np.abs(states) ** 2
    return np.sum(probs * _obs_diagonals(spec, task, ys, states.shape[0]), axis=1)


def class_probabilities(spec: CircuitSpec, xs: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``(batch, 2)`` array of ``(Tr[H0 rho], Tr[H1 rho])``."""
    states = simulate(spec, xs, theta)
    probs = np.abs(states) ** 2
    return probs @ _diag_table(spec, "classification").T


@dataclass(frozen=True)
class Hypothesis:
    spec: CircuitSpec
    theta: np.ndarray
    task: Task = "classification"

    def __post_init__(self):
        object.__setattr__(self, "theta", check_theta(self.spec, self.theta).copy())
        self.theta.setflags(write=False)

    def values(self, xs: np.ndarray, ys: np.ndarray | None = None) -> np.ndarray:
        return outputs(self.spec, xs, self.theta, self.task, ys)

    @property
    def h_mixed(self) -> float:
        """Output on the maximally mixed state."""
        return 0.5 if self.task == "classification" else 0.0


def hypothesis_value(h: Hypothesis, x: np.ndarray, label_or_target=None) -> float:
    ys = None if h.task == "regression" else np.array([int(label_or_target)])
    return float(h.values(np.asarray(x, dtype=float)[None, :], ys)[0])


def predict_from_probs(probs: np.ndarray) -> np.ndarray:
    """Class with the larger measurement result; near-ties go to class 0."""
    probs = np.atleast_2d(probs)
    return np.where(probs[:, 1] - probs[:, 0] > TIE_TOL, 1, 0)


def predict_class(h: Hypothesis, xs: np.ndarray) -> np.ndarray | int:
    if h.task != "classification":
        raise ValueError("predict_class needs a classification hypothesis")
    xs = np.asarray(xs, dtype=float)
    single = xs.ndim == 1
    pred = predict_from_probs(class_probabilities(h.spec, xs, h.theta))
    return int(pred[0]) if single else pred


# -- losses and error metrics ---------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    epochs: int = 1000
    batch_size: int = 200
    seed: int = 1
    loss: Literal["cross_entropy", "mse"] = "cross_entropy"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    prob_clip: float = 1e-7
    selection: Literal["lowest_training_error"] = "lowest_training_error"
    gradient_method: Literal["adjoint", "shift"] = "adjoint"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.prob_clip < 0.1:
            raise ValueError("prob_clip must lie in (0, 0.1)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss not in ("cross_entropy", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.gradient_method not in ("adjoint", "shift"):
            raise ValueError(f"unknown gradient method {self.gradient_method!r}")

    def replace(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


def _loss_and_dh(h: np.ndarray, targets: np.ndarray | None, config: TrainConfig):
    """Loss value and its derivative w.r.t. each output ``h_b``."""
    m = h.shape[0]
    if config.loss == "cross_entropy":
        lo, hi = config.prob_clip, 1.0 - config.prob_clip
        hc = np.clip(h, lo, hi)
        loss = -np.mean(np.log(hc))
        inside = (h > lo) & (h < hi)
        dh = np.where(inside, -1.0 / (m * hc), 0.0)
    else:
        r = targets - h
        loss = np.mean(r**2)
        dh = -2.0 * r / m
    return float(loss), dh


def _loss_targets(task: Task, ys: np.ndarray) -> np.ndarray | None:
    return np.asarray(ys, dtype=float) if task == "regression" else None


def loss(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
         config: TrainConfig, task: Task = "classification") -> float:
    if len(xs) == 0:
        raise ValueError("empty batch")
    h = outputs(spec, xs, theta, task, None if task == "regression" else ys)
    return _loss_and_dh(h, _loss_targets(task, ys), config)[0]


def classification_error(h_correct: np.ndarray) -> float:
    """``mean |1 - h_S(x)|`` with ``h_S`` the probability of the true class."""
    h_correct = np.asarray(h_correct, dtype=float)
    if h_correct.size == 0:
        raise ValueError("empty batch")
    return float(np.mean(np.abs(1.0 - h_correct)))


def regression_error(h: np.ndarray, targets: np.ndarray) -> float:
    """``mean |f(x) - h_S(x)|``."""
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        raise ValueError("empty batch")
    return float(np.mean(np.abs(np.asarray(targets, dtype=float) - h)))


def accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    pred = np.asarray(pred)
    if pred.size == 0:
        raise ValueError("empty batch")
    return float(np.mean(pred == np.asarray(labels)))


@dataclass(frozen=True)
class Metrics:
    error: float
    accuracy: float | None
    h_gap: float
    mean_h: float


def evaluate(h: Hypothesis, xs: np.ndarray, ys: np.ndarray, chunk: int = 4096) -> Metrics:
    """Error, accuracy and the output gap to the maximally mixed value.

    The gap is ``|mean_x h(x) - h_I|``, the quantity the concentration bound
    controls.  For classification it is taken per class on the ``H0`` output,
    ``|mean_{x in c} Tr[H0 rho(x)] - 1/2|``, then averaged over the classes
    present, because each class is its own input distribution.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys)
    if len(xs) == 0:
        raise ValueError("empty dataset")
    if h.task == "classification":
        probs = np.concatenate([class_probabilities(h.spec, xs[i:i + chunk], h.theta)
                                for i in range(0, len(xs), chunk)])
        labels = ys.astype(int)
        h_correct = probs[np.arange(len(xs)), labels]
        return Metrics(
            error=classification_error(h_correct),
            accuracy=accuracy(predict_from_probs(probs), labels),
            h_gap=float(np.mean([abs(probs[labels == c, 0].mean() - 0.5)
                                 for c in (0, 1) if np.any(labels == c)])),
            mean_h=float(np.mean(h_correct)),
        )
    vals = np.concatenate([h.values(xs[i:i + chunk]) for i in range(0, len(xs), chunk)])
    return Metrics(
        error=regression_error(vals, ys),
        accuracy=None,
        h_gap=float(abs(np.mean(vals))),
        mean_h=float(np.mean(vals)),
    )


# -- gradients -----------------------------------------------------------------------


def _factorized_gradient(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
                         config: TrainConfig, task: Task) -> tuple[float, np.ndarray]:
    """Adjoint gradient for entangler-free circuits, one qubit at a time.

    With a product state and a product observable, ``h = prod_q f_q`` where
    ``f_q`` is the single-qubit expectation, so each qubit is differentiated
    on its own and scaled by the other factors.
    """
    b = xs.shape[0]
    enc = _encoding_gates(spec, xs)
    par = r3_batch(theta)
    dpar = r3_derivatives(theta)
    psi = _qubit_states(spec, enc, par)
    fac = _obs_factors(spec, task, None if task == "regression" else ys, b)
    f = np.sum(np.abs(psi) ** 2 * fac, axis=2)
    h = np.prod(f, axis=1)
    value, dh = _loss_and_dh(h, _loss_targets(task, ys), config)
    others = np.empty_like(f)
    for q in range(spec.n_qubits):
        others[:, q] = np.prod(np.delete(f, q, axis=1), axis=1)
    lam = (dh[:, None] * others)[..., None] * fac * psi
    grad = np.zeros(spec.theta_shape)
    enc_dag = np.conj(np.swapaxes(enc, -1, -2))
    par_dag = np.conj(np.swapaxes(par, -1, -2))
    for p in reversed(range(spec.repetitions)):
        for l in reversed(range(spec.total_layers)):
            phi = _mv(par_dag[p, l], psi)
            # m[q, i, j] = sum_b conj(lam_i) phi_j
            m = np.einsum("bqi,bqj->qij", lam.conj(), phi)
            grad[p, l] = 2.0 * np.real(np.einsum("qij,qkij->qk", m, dpar[p, l]))
            psi = phi
            lam = _mv(par_dag[p, l], lam)
            if l < spec.encoding_layers:
                psi = _mv(enc_dag[:, l], psi)
                lam = _mv(enc_dag[:, l], lam)
    return value, grad


def _adjoint_gradient(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
                      config: TrainConfig, task: Task) -> tuple[float, np.ndarray]:
    """Reverse-mode gradient through the state vector.

    Runs the circuit forward once, seeds ``lambda = sum_b dL/dh_b H_b psi_b``
    and walks the gate list backwards, un-applying each gate to both the
    state and ``lambda``.  For a trainable gate ``G`` with input state ``phi``
    the contribution is ``2 Re <lambda| dG |phi>``.
    """
    n = spec.n_qubits
    enc = _encoding_gates(spec, xs)
    par = r3_batch(theta)
    dpar = r3_derivatives(theta)
    perm = cnot_ring_permutation(n) if spec.has_ring else None
    inv_perm = np.argsort(perm) if perm is not None else None

    psi = simulate(spec, xs, theta)
    diag = _obs_diagonals(spec, task, None if task == "regression" else ys, xs.shape[0])
    h = np.sum(np.abs(psi) ** 2 * diag, axis=1)
    value, dh = _loss_and_dh(h, _loss_targets(task, ys), config)
    lam = (dh[:, None] * diag) * psi

    grad = np.zeros(spec.theta_shape)
    for op in reversed(list(_ops(spec))):
        if op[0] == "ring":
            psi = apply_perm(psi, inv_perm)
            lam = apply_perm(lam, inv_perm)
            continue
        if op[0] == "enc":
            q = op[2]
            g_dag = np.conj(np.swapaxes(enc[:, op[1], q], -1, -2))
            psi = apply_1q(psi, g_dag, q, n)
            lam = apply_1q(lam, g_dag, q, n)
            continue
        _, p, l, q = op
        g_dag = par[p, l, q].conj().T
        phi = apply_1q(psi, g_dag, q, n)
        m = reduced_outer(lam, phi, q, n).sum(axis=0)
        # sum_ij M_ij dG_ij for each of the three derivative matrices
        grad[p, l, q] = 2.0 * np.real(np.einsum("ij,kij->k", m, dpar[p, l, q]))
        psi = phi
        lam = apply_1q(lam, g_dag, q, n)
    return value, grad


def _shift_gradient(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
                    config: TrainConfig, task: Task) -> tuple[float, np.ndarray]:
    """Parameter-shift rule: ``dh/dtheta_k = (h(theta_k + pi/2) - h(theta_k - pi/2)) / 2``."""
    label = None if task == "regression" else ys
    h = outputs(spec, xs, theta, task, label)
    value, dh = _loss_and_dh(h, _loss_targets(task, ys), config)
    grad = np.zeros(spec.theta_shape)
    shift = np.zeros(spec.theta_shape)
    for k in np.ndindex(*spec.theta_shape):
        shift[k] = math.pi / 2
        plus = outputs(spec, xs, theta + shift, task, label)
        minus = outputs(spec, xs, theta - shift, task, label)
        shift[k] = 0.0
        grad[k] = float(np.dot(dh, 0.5 * (plus - minus)))
    return value, grad


def value_and_gradient(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
                       config: TrainConfig, task: Task = "classification",
                       method: str | None = None) -> tuple[float, np.ndarray]:
    xs = _check_data(spec, xs)
    theta = check_theta(spec, theta)
    if len(xs) == 0:
        raise ValueError("empty batch")
    method = method or config.gradient_method
    if method == "shift":
        return _shift_gradient(spec, xs, ys, theta, config, task)
    if method == "adjoint" and not spec.has_ring:
        return _factorized_gradient(spec, xs, ys, theta, config, task)
    if method == "adjoint":
        return _adjoint_gradient(spec, xs, ys, theta, config, task)
    raise ValueError(f"unknown gradient method {method!r}")


def gradient(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
             config: TrainConfig, task: Task = "classification",
             method: str = "shift") -> np.ndarray:
    """Exact loss gradient shaped like ``theta`` (parameter-shift by default)."""
    return value_and_gradient(spec, xs, ys, theta, config, task, method)[1]


# -- optimisation ----------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0)


def adam_step(theta: np.ndarray, grad: np.ndarray, moments: AdamState, t: int,
              config: TrainConfig) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update.  Returns new arrays; inputs are untouched."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    b1, b2 = config.adam_beta1, config.adam_beta2
    m = b1 * moments.m + (1 - b1) * grad
    v = b2 * moments.v + (1 - b2) * grad * grad
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    new = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return new, AdamState(m, v, t)


@dataclass
class TrainResult:
    hypothesis: Hypothesis
    history: list[float] = field(default_factory=list)
    best_epoch: int | None = None
    initial_theta: np.ndarray | None = None


def training_error(spec: CircuitSpec, xs: np.ndarray, ys: np.ndarray, theta: np.ndarray,
                   task: Task) -> float:
    if task == "classification":
        return classification_error(outputs(spec, xs, theta, task, ys))
    return regression_error(outputs(spec, xs, theta, task), ys)


def train(xs: np.ndarray, ys: np.ndarray, spec: CircuitSpec, config: TrainConfig,
          task: Task = "classification") -> TrainResult:
    """Minibatch Adam training with lowest-training-error model selection.

    Initial angles come from the ``init`` stream and the per-epoch shuffles
    from the ``shuffle`` stream of ``config.seed``; identical inputs therefore
    reproduce the same parameters bit for bit.
    """
    xs = _check_data(spec, xs)
    ys = np.asarray(ys)
    if len(xs) == 0:
        raise ValueError("empty dataset")
    if len(ys) != len(xs):
        raise ValueError("features and labels differ in length")
    theta0 = init_theta(spec, config.seed)
    theta = theta0.copy()
    best_theta, best_err, best_epoch = theta0.copy(), math.inf, None
    moments = AdamState.zeros(spec.theta_shape)
    shuffler = rng.stream(config.seed, "shuffle")
    history: list[float] = []
    t = 0
    for epoch in range(config.epochs):
        order = shuffler.permutation(len(xs))
        for start in range(0, len(xs), config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grad = value_and_gradient(spec, xs[idx], ys[idx], theta, config, task)
            t += 1
            theta, moments = adam_step(theta, grad, moments, t, config)
        err = training_error(spec, xs, ys, theta, task)
        history.append(err)
        if err < best_err:
            best_err, best_theta, best_epoch = err, theta.copy(), epoch
        log.debug("epoch %d train error %.6f", epoch, err)
    return TrainResult(Hypothesis(spec, best_theta, task), history, best_epoch, theta0)

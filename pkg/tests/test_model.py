import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reupload_lab import data, model
from reupload_lab.model import CircuitSpec, Hypothesis, TrainConfig
from reupload_lab.qsim import cnot_ring, embed, r3


def rand_instance(seed, max_n=2, max_l=3, max_p=2):
    g = np.random.default_rng(seed)
    n = int(g.integers(1, max_n + 1))
    layers = int(g.integers(1, max_l + 1))
    spec = CircuitSpec(n, layers, layers + int(g.integers(0, 2)), int(g.integers(1, max_p + 1)),
                       "ring_cnot" if g.random() < 0.5 else "none")
    xs = g.uniform(-math.pi, math.pi, size=(5, spec.data_dim))
    theta = g.normal(size=spec.theta_shape)
    return spec, xs, theta, g


# -- circuit construction --------------------------------------------------------


def test_spec_validation():
    assert CircuitSpec(2, 3).total_layers == 3
    assert CircuitSpec(2, 3, 5).data_dim == 18
    assert CircuitSpec(2, 3, 5, 4).theta_shape == (4, 5, 2, 3)
    for bad in [dict(n_qubits=0, encoding_layers=1), dict(n_qubits=11, encoding_layers=1),
                dict(n_qubits=1, encoding_layers=3, total_layers=2),
                dict(n_qubits=1, encoding_layers=1, repetitions=0),
                dict(n_qubits=1, encoding_layers=1, entangler="cz")]:
        with pytest.raises(ValueError):
            CircuitSpec(**bad)


def test_build_unitary_examples():
    spec = CircuitSpec(2, 0, 2, entangler="none")
    assert np.allclose(model.build_unitary(spec, np.zeros(0), np.zeros(spec.theta_shape)), np.eye(4))

    x = np.array([0.3, -1.1, 2.0])
    spec = CircuitSpec(1, 1)
    assert np.allclose(model.build_unitary(spec, x, np.zeros(spec.theta_shape)), r3(*x))

    spec = CircuitSpec(1, 1, repetitions=2)
    theta = np.array([0.5, 0.2, -0.9, 1.4, -0.3, 0.8]).reshape(spec.theta_shape)
    expected = r3(*theta[1, 0, 0]) @ r3(*x) @ r3(*theta[0, 0, 0]) @ r3(*x)
    assert np.allclose(model.build_unitary(spec, x, theta), expected)


def test_build_unitary_two_qubit_layer_order():
    spec = CircuitSpec(2, 1, 2)
    g = np.random.default_rng(0)
    x = g.normal(size=6)
    theta = g.normal(size=spec.theta_shape)
    enc = np.kron(r3(*x[:3]), r3(*x[3:]))
    lay = [cnot_ring(2) @ np.kron(r3(*theta[0, l, 0]), r3(*theta[0, l, 1])) for l in range(2)]
    assert np.allclose(model.build_unitary(spec, x, theta), lay[1] @ lay[0] @ enc)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_simulate_matches_full_unitary(seed):
    spec, xs, theta, _ = rand_instance(seed, max_n=3)
    states = model.simulate(spec, xs, theta)
    for x, psi in zip(xs, states):
        assert np.allclose(psi, model.build_unitary(spec, x, theta)[:, 0], atol=1e-12)


def test_data_dimension_checked():
    spec = CircuitSpec(1, 2)
    with pytest.raises(ValueError):
        model.simulate(spec, np.zeros((3, 5)), np.zeros(spec.theta_shape))
    with pytest.raises(ValueError):
        model.check_theta(spec, np.zeros((1, 1, 1, 3)))


# -- hypotheses ----------------------------------------------------------------


def test_hypothesis_value_examples():
    spec = CircuitSpec(1, 1)
    h = Hypothesis(spec, np.zeros(spec.theta_shape))
    assert model.hypothesis_value(h, np.zeros(3), 0) == pytest.approx(1)
    for ty in (0.0, 0.9, 2.5):
        assert model.hypothesis_value(h, np.array([0, ty, 0]), 0) == pytest.approx(math.cos(ty / 2) ** 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_label_outputs_sum_to_one(seed):
    spec, xs, theta, _ = rand_instance(seed, max_n=3)
    h0 = model.outputs(spec, xs, theta, "classification", np.zeros(len(xs), int))
    h1 = model.outputs(spec, xs, theta, "classification", np.ones(len(xs), int))
    assert np.allclose(h0 + h1, 1, atol=1e-10)
    assert np.all((h0 >= -1e-12) & (h0 <= 1 + 1e-12))
    reg = model.outputs(spec, xs, theta, "regression")
    assert np.all(np.abs(reg) <= 1 + 1e-12)


def test_predict_class_examples():
    spec = CircuitSpec(1, 1)
    h = Hypothesis(spec, np.zeros(spec.theta_shape))
    assert model.predict_class(h, np.zeros(3)) == 0
    assert model.predict_class(h, np.array([0, math.pi, 0])) == 1
    assert model.predict_class(h, np.array([0, math.pi / 2, 0])) == 0  # exact tie


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20),
       st.floats(0.01, 100))
def test_prediction_invariant_under_common_rescaling(pairs, c):
    probs = np.array(pairs)
    assert np.array_equal(model.predict_from_probs(probs), model.predict_from_probs(c * probs)) or \
        np.any(np.abs(probs[:, 1] - probs[:, 0]) * max(c, 1) <= 1e-10)


def test_error_metric_examples():
    assert model.classification_error(np.ones(5)) == 0
    assert model.classification_error(np.full(4, 0.5)) == 0.5
    assert model.regression_error(np.zeros(3), np.full(3, 0.5)) == 0.5
    with pytest.raises(ValueError):
        model.classification_error(np.array([]))


def test_cross_entropy_and_mse():
    spec = CircuitSpec(1, 1)
    xs = np.array([[0, 0.8, 0], [0, 2.0, 0]])
    theta = np.zeros(spec.theta_shape)
    ys = np.array([0, 1])
    p0 = np.cos(np.array([0.8, 2.0]) / 2) ** 2
    h = np.array([p0[0], 1 - p0[1]])
    assert model.loss(spec, xs, ys, theta, TrainConfig()) == pytest.approx(-np.mean(np.log(h)))
    f = np.array([0.2, 0.9])
    z = 2 * p0 - 1
    mse = model.loss(spec, xs, f, theta, TrainConfig(loss="mse"), "regression")
    assert mse == pytest.approx(np.mean((f - z) ** 2))
    with pytest.raises(ValueError):
        model.loss(spec, np.zeros((0, 3)), np.zeros(0), theta, TrainConfig())


# -- gradients ------------------------------------------------------------------


def test_zero_gradient_in_clipped_region():
    # Identity circuit: h_S = 1 for label 0, above the clip, so the loss is flat.
    spec = CircuitSpec(1, 1)
    theta = np.zeros(spec.theta_shape)
    g = model.gradient(spec, np.zeros((2, 3)), np.array([0, 0]), theta, TrainConfig())
    assert np.all(g == 0)


def test_shift_rule_on_single_rotation():
    # Z expectation after ry(t) is cos t; MSE to target f has gradient 2 (f - cos t) sin t
    spec = CircuitSpec(1, 0, 1)
    cfg = TrainConfig(loss="mse")
    for t in (0.3, 1.7, -2.2):
        theta = np.array([0.0, t, 0.0]).reshape(spec.theta_shape)
        g = model.gradient(spec, np.zeros((1, 0)), np.array([0.25]), theta, cfg, "regression")
        assert g[0, 0, 0, 1] == pytest.approx(2 * (0.25 - math.cos(t)) * math.sin(t), abs=1e-12)
        assert g[0, 0, 0, 0] == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_shift_rule_matches_finite_difference(seed):
    spec, xs, theta, g = rand_instance(seed)
    ys = g.integers(0, 2, len(xs))
    cfg = TrainConfig()
    grad = model.gradient(spec, xs, ys, theta, cfg)
    flat = theta.ravel()
    h = 1e-6
    fd = np.empty_like(flat)
    for k in range(flat.size):
        e = np.zeros_like(flat)
        e[k] = h
        up = model.loss(spec, xs, ys, (flat + e).reshape(theta.shape), cfg)
        dn = model.loss(spec, xs, ys, (flat - e).reshape(theta.shape), cfg)
        fd[k] = (up - dn) / (2 * h)
    assert np.max(np.abs(grad.ravel() - fd)) <= 1e-4


@pytest.mark.parametrize("task", ["classification", "regression"])
@pytest.mark.parametrize("seed", range(6))
def test_adjoint_equals_shift(task, seed):
    spec, xs, theta, g = rand_instance(seed, max_n=3)
    ys = g.integers(0, 2, len(xs)) if task == "classification" else g.uniform(0, 1, len(xs))
    cfg = TrainConfig(loss="cross_entropy" if task == "classification" else "mse")
    v1, g1 = model.value_and_gradient(spec, xs, ys, theta, cfg, task, "shift")
    v2, g2 = model.value_and_gradient(spec, xs, ys, theta, cfg, task, "adjoint")
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert np.allclose(g1, g2, atol=1e-10)


def test_full_state_adjoint_on_entangler_free_circuit():
    spec, xs, theta, g = rand_instance(3, max_n=3)
    spec = CircuitSpec(3, 2, 2, 2, "none")
    xs = g.uniform(-3, 3, (4, spec.data_dim))
    theta = g.normal(size=spec.theta_shape)
    ys = np.array([0, 1, 1, 0])
    cfg = TrainConfig()
    fac = model._factorized_gradient(spec, xs, ys, theta, cfg, "classification")
    full = model._adjoint_gradient(spec, xs, ys, theta, cfg, "classification")
    assert fac[0] == pytest.approx(full[0])
    assert np.allclose(fac[1], full[1], atol=1e-12)


def test_entangler_free_circuit_factorizes():
    spec = CircuitSpec(3, 2, 2, 2, "none")
    g = np.random.default_rng(8)
    xs = g.uniform(-3, 3, (6, spec.data_dim))
    theta = g.normal(size=spec.theta_shape)
    base = model.class_probabilities(spec, xs, theta)
    bumped = theta.copy()
    bumped[:, :, 1:, :] += g.normal(size=bumped[:, :, 1:, :].shape)
    assert np.allclose(model.class_probabilities(spec, xs, bumped), base, atol=1e-12)


# -- optimiser -----------------------------------------------------------------


def test_adam_examples():
    cfg = TrainConfig(learning_rate=0.1)
    theta = np.array([1.0, -2.0, 0.5])
    st0 = model.AdamState.zeros(3)
    same, _ = model.adam_step(theta, np.zeros(3), st0, 1, cfg)
    assert np.array_equal(same, theta)
    grad = np.array([0.3, -4.0, 1e-3])
    new, st1 = model.adam_step(theta, grad, st0, 1, cfg)
    assert np.allclose(new, theta - 0.1 * grad / (np.abs(grad) + 1e-8))
    newer, _ = model.adam_step(new, grad, st1, 2, cfg)
    # identical gradients keep the bias-corrected step at lr * g/|g|
    assert np.allclose(newer - new, new - theta, atol=1e-9)
    with pytest.raises(ValueError):
        model.adam_step(theta, grad, st0, 0, cfg)


def test_adam_second_moment_growth_shrinks_step():
    cfg = TrainConfig(learning_rate=0.1)
    theta = np.zeros(1)
    st0 = model.AdamState.zeros(1)
    a, st1 = model.adam_step(theta, np.array([1.0]), st0, 1, cfg)
    b, _ = model.adam_step(a, np.array([0.5]), st1, 2, cfg)
    assert abs(b - a)[0] < abs(a - theta)[0]


def test_train_config_validation():
    for bad in [dict(learning_rate=0), dict(batch_size=0), dict(prob_clip=0.2), dict(epochs=-1),
                dict(loss="hinge"), dict(gradient_method="fd")]:
        with pytest.raises(ValueError):
            TrainConfig(**bad)


# -- training ------------------------------------------------------------------


def test_train_zero_epochs_returns_initial_parameters():
    spec = CircuitSpec(1, 1)
    ds = data.gen_linsep(3, 20, seed=1)
    res = model.train(ds.features, ds.labels, spec, TrainConfig(epochs=0, seed=4))
    assert res.history == []
    assert np.array_equal(res.hypothesis.theta, model.init_theta(spec, 4))


def test_train_low_depth_linsep_learns():
    spec = CircuitSpec(1, 1, repetitions=4)
    ds = data.gen_linsep(3, 400, seed=2)
    res = model.train(ds.features, ds.labels, spec, TrainConfig(epochs=300, seed=2))
    assert min(res.history) < 0.25
    m = model.evaluate(res.hypothesis, ds.features, ds.labels)
    assert m.error == pytest.approx(min(res.history), abs=1e-12)
    assert res.history[res.best_epoch] == min(res.history)


def test_train_is_bit_deterministic():
    spec = CircuitSpec(2, 1, 2, 2)
    ds = data.gen_linsep(6, 50, seed=3)
    cfg = TrainConfig(epochs=5, batch_size=16, seed=7)
    a = model.train(ds.features, ds.labels, spec, cfg)
    b = model.train(ds.features, ds.labels, spec, cfg)
    assert a.history == b.history
    assert np.array_equal(a.hypothesis.theta, b.hypothesis.theta)


def test_train_rejects_bad_input():
    spec = CircuitSpec(1, 1)
    with pytest.raises(ValueError):
        model.train(np.zeros((0, 3)), np.zeros(0), spec, TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        model.train(np.zeros((4, 6)), np.zeros(4), spec, TrainConfig(epochs=1))


def test_evaluate_gap_and_mean_h():
    spec = CircuitSpec(1, 1)
    h = Hypothesis(spec, np.zeros(spec.theta_shape))
    xs = np.array([[0, 0.4, 0], [0, 2.9, 0], [0, 1.0, 0], [0, 2.0, 0]])
    ys = np.array([0, 1, 0, 1])
    m = model.evaluate(h, xs, ys)
    p0 = np.cos(xs[:, 1] / 2) ** 2
    assert m.h_gap == pytest.approx(0.5 * (abs(p0[[0, 2]].mean() - 0.5) + abs(p0[[1, 3]].mean() - 0.5)))
    assert m.error == pytest.approx(1 - m.mean_h, abs=1e-12)
    assert m.accuracy == 1.0


def test_embed_consistency_of_observable():
    # H0 on qubit 0 of two qubits reads the leftmost factor
    spec = CircuitSpec(2, 1, entangler="none")
    xs = np.array([[0, math.pi, 0, 0, 0, 0]])
    probs = model.class_probabilities(spec, xs, np.zeros(spec.theta_shape))
    assert probs[0] == pytest.approx([0, 1], abs=1e-12)
    assert np.allclose(embed(np.diag([1, 0]), 0, 2), model.observable_for(spec, "classification", 0).matrix)

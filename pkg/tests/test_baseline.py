import numpy as np

from routewave.baseline import (AdamState, LinearModel, adam_step,
                                evaluate_baseline, features_for,
                                forward_loss_grad, input_attention,
                                predict_baseline, train_baseline)
from routewave.signals import encode_patch
from routewave.geometry import GridCoord
from routewave.training import FewShotSpec


def unit_rows(n, dim=10, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# --- input attention ----------------------------------------------------------

def test_attention_identical_patches_fixed_point():
    x = encode_patch(np.ones(9), GridCoord(0, 0)).components
    vectors = np.tile(x, (81, 1))
    feats = input_attention(vectors)
    assert feats.shape == (729,)
    assert np.allclose(feats, np.tile(x[1:], 81), atol=1e-12)


def test_attention_no_neighbors_passthrough():
    # mutually dissimilar unit vectors: every patch only averages with itself
    vectors = np.zeros((81, 10))
    for i in range(81):
        vectors[i, i % 10] = 1.0 if (i // 10) % 2 == 0 else -1.0
    feats = input_attention(vectors)
    assert np.allclose(feats, vectors[:, 1:].reshape(-1), atol=1e-12)


def test_attention_pair_plus_orthogonal():
    vectors = np.zeros((3, 10))
    vectors[0, 1] = vectors[1, 1] = 1.0   # identical pair
    vectors[2, 2] = 1.0                    # orthogonal to both
    sims = vectors @ vectors.T
    feats = (sims >= 0.7).astype(float) @ vectors
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    got = input_attention(vectors)
    assert np.allclose(got, feats[:, 1:].reshape(-1), atol=1e-12)
    assert np.allclose(got[:9], vectors[0, 1:], atol=1e-12)
    assert np.allclose(got[18:27], vectors[2, 1:], atol=1e-12)


# --- forward / gradients --------------------------------------------------------

def test_loss_zero_model_is_log4():
    model = LinearModel(np.zeros((4, 729)), np.zeros(4))
    features = unit_rows(1, 729)[0]
    loss, _ = forward_loss_grad(model, features, 2)
    assert np.isclose(loss, np.log(4.0), atol=1e-12)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    model = LinearModel(rng.normal(scale=0.1, size=(4, 729)),
                        rng.normal(scale=0.1, size=4))
    features = rng.normal(size=729)
    label = 3
    loss, (g_w, g_b) = forward_loss_grad(model, features, label)
    eps = 1e-6
    idx = [(0, 5), (1, 100), (2, 700), (3, 3)]
    for i, j in idx:
        pert = model.weights.copy()
        pert[i, j] += eps
        up, _ = forward_loss_grad(LinearModel(pert, model.bias), features, label)
        pert[i, j] -= 2 * eps
        dn, _ = forward_loss_grad(LinearModel(pert, model.bias), features, label)
        num = (up - dn) / (2 * eps)
        assert abs(num - g_w[i, j]) <= 1e-5 * max(1.0, abs(num))
    for i in range(4):
        pert = model.bias.copy()
        pert[i] += eps
        up, _ = forward_loss_grad(LinearModel(model.weights, pert), features, label)
        pert[i] -= 2 * eps
        dn, _ = forward_loss_grad(LinearModel(model.weights, pert), features, label)
        num = (up - dn) / (2 * eps)
        assert abs(num - g_b[i]) <= 1e-5 * max(1.0, abs(num))


def test_loss_saturates_with_separating_weights():
    features = np.zeros(729)
    features[0] = 1.0
    weights = np.zeros((4, 729))
    weights[1, 0] = 50.0
    model = LinearModel(weights, np.zeros(4))
    loss, _ = forward_loss_grad(model, features, 1)
    assert loss < 1e-8


# --- Adam ------------------------------------------------------------------------

def test_adam_zero_gradient_no_move():
    model = LinearModel(np.ones((4, 729)), np.ones(4))
    state = AdamState.for_model(model)
    adam_step(model, state, (np.zeros((4, 729)), np.zeros(4)))
    assert np.array_equal(model.weights, np.ones((4, 729)))
    assert np.array_equal(model.bias, np.ones(4))


def test_adam_first_step_is_sign_scaled():
    # bias corrections cancel on step one: update = -lr * g / (|g| + eps),
    # i.e. ~lr * sign(g) regardless of gradient magnitude
    model = LinearModel(np.zeros((4, 729)), np.zeros(4))
    state = AdamState.for_model(model, lr=1e-3)
    rng = np.random.default_rng(2)
    g_w = rng.normal(size=(4, 729))
    g_b = rng.normal(size=4)
    adam_step(model, state, (g_w, g_b))
    assert np.allclose(model.weights, -1e-3 * g_w / (np.abs(g_w) + 1e-8),
                       atol=1e-15)
    assert np.allclose(model.bias, -1e-3 * g_b / (np.abs(g_b) + 1e-8),
                       atol=1e-15)
    assert np.allclose(model.weights, -1e-3 * np.sign(g_w), atol=1e-6)


def test_adam_constant_gradient_monotone_drift():
    model = LinearModel(np.zeros((4, 729)), np.zeros(4))
    state = AdamState.for_model(model, lr=1e-3)
    g_w = np.full((4, 729), 0.3)
    g_b = np.full(4, -0.2)
    prev_w, prev_b = model.weights[0, 0], model.bias[0]
    for _ in range(20):
        adam_step(model, state, (g_w, g_b))
        assert model.weights[0, 0] < prev_w
        assert model.bias[0] > prev_b
        prev_w, prev_b = model.weights[0, 0], model.bias[0]


# --- training behavior -------------------------------------------------------------

def test_loss_decreases_over_epochs(mnist_train):
    spec = FewShotSpec(shots=5, epochs=3, schedule="mixed", seed=0)
    _, losses = train_baseline(spec, mnist_train, lr=1e-3)
    per_epoch = [np.mean(losses[i * 20:(i + 1) * 20]) for i in range(3)]
    assert per_epoch[-1] < per_epoch[0]


def test_baseline_deterministic(mnist_train):
    spec = FewShotSpec(shots=2, seed=5)
    m1, l1 = train_baseline(spec, mnist_train)
    m2, l2 = train_baseline(spec, mnist_train)
    assert np.array_equal(m1.weights, m2.weights)
    assert l1 == l2


def test_catastrophic_forgetting_direction(mnist_train, mnist_test):
    # first-trained class suffers under sequential blocks (seed-averaged)
    first_class = [im for im in mnist_test if im.label == 0][:60]
    accs = {"sequential": [], "mixed": []}
    for schedule in accs:
        for seed in range(5):
            spec = FewShotSpec(shots=5, schedule=schedule, seed=seed)
            model, _ = train_baseline(spec, mnist_train)
            accs[schedule].append(
                evaluate_baseline(model, first_class, limit_per_label=60))
    assert np.mean(accs["sequential"]) < np.mean(accs["mixed"])


def test_predict_baseline_maps_to_labels():
    model = LinearModel(np.zeros((4, 729)), np.array([0.0, 0.0, 1.0, 0.0]))
    assert predict_baseline(model, np.zeros(729)) == 2


def test_features_finite(mnist_train):
    f = features_for(mnist_train[0])
    assert f.shape == (729,)
    assert np.isfinite(f).all()

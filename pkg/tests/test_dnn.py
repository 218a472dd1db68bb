import json
import math

import numpy as np
import pytest

import oracles
from imugest import dnn
from imugest.dnn import DnnModel, Hyper, backprop, cost, forward, predict, sigmoid, train
from imugest.errors import TrainingDiverged


def _random_problem(rng, sizes, m, lam=0.0, seed=0):
    model = dnn.init_model(sizes, seed, Hyper(l2=lam))
    X = rng.normal(size=(m, sizes[0]))
    Y = dnn.one_hot(rng.integers(0, sizes[-1], m), sizes[-1])
    return model, X, Y


def test_sigmoid_basics(rng):
    assert sigmoid(0.0) == 0.5
    z = rng.normal(scale=20, size=1000)
    np.testing.assert_allclose(sigmoid(z) + sigmoid(-z), 1.0, atol=1e-15)
    with np.errstate(over="raise"):
        assert sigmoid(500.0) == 1.0
        assert sigmoid(-700.0) > 0.0
        assert sigmoid(700.0) == 1.0


def test_zero_weights_output_half():
    sizes = (10, 15, 15, 15, 6)
    model = DnnModel(sizes, [np.zeros((b, a + 1)) for a, b in zip(sizes[:-1], sizes[1:])])
    _, out = forward(model, np.arange(10.0))
    np.testing.assert_array_equal(out, 0.5)


def test_outputs_in_open_unit_interval(rng):
    model = dnn.init_model((10, 15, 15, 15, 6), 3)
    _, out = forward(model, rng.normal(scale=5, size=(1000, 10)))
    assert out.shape == (1000, 6)
    assert np.all((out > 0) & (out < 1))


def test_hand_computed_1_1_1_net():
    w1 = np.array([[0.5, -2.0]])
    w2 = np.array([[-1.0, 3.0]])
    model = DnnModel((1, 1, 1), [w1, w2])
    acts, out = forward(model, np.array([0.75]))
    hidden = 1 / (1 + math.exp(-(0.5 - 2.0 * 0.75)))
    expected = 1 / (1 + math.exp(-(-1.0 + 3.0 * hidden)))
    assert acts[1][0] == pytest.approx(hidden, rel=1e-15)
    assert out[0] == pytest.approx(expected, rel=1e-15)


def test_cost_zero_for_perfect_prediction():
    # saturate the outputs so h is 0/1 to machine precision
    model = DnnModel((1, 2), [np.array([[800.0, 0.0], [-800.0, 0.0]])])
    assert cost(model, [[0.0]], [[1.0, 0.0]]) == pytest.approx(0.0, abs=1e-10)


def test_cost_analytic_two_ln_two():
    model = DnnModel((1, 2), [np.zeros((2, 2))])
    assert cost(model, [[3.0]], [[1.0, 0.0]]) == pytest.approx(2 * math.log(2), rel=1e-15)


@pytest.mark.parametrize("lam", [0.0, 0.3])
def test_cost_matches_scalar_loop_oracle(rng, lam):
    model, X, Y = _random_problem(rng, (4, 5, 3), 7, lam)
    expected = float(oracles.dnn_cost(model.weights, X, Y, lam))
    assert cost(model, X, Y) == pytest.approx(expected, rel=1e-12)


def test_cost_invariant_under_example_permutation(rng):
    model, X, Y = _random_problem(rng, (5, 6, 4), 12)
    perm = rng.permutation(12)
    assert cost(model, X[perm], Y[perm]) == pytest.approx(cost(model, X, Y), rel=1e-14)


def test_cost_label_permutation_equivariance(rng):
    model, X, Y = _random_problem(rng, (5, 6, 4), 12)
    perm = np.array([2, 0, 3, 1])
    w = list(model.weights)
    w[-1] = w[-1][perm]
    permuted = model.with_weights(w)
    assert cost(permuted, X, Y[:, perm]) == pytest.approx(cost(model, X, Y), rel=1e-14)


def test_output_delta_example():
    # single output, a = 0.9 and y = 1: output delta = -0.1 so the bias gradient is -0.1
    z = math.log(0.9 / 0.1)
    model = DnnModel((1, 1), [np.array([[z, 0.0]])])
    grads = backprop(model, [[0.0]], [[1.0]])
    assert grads[0][0, 0] == pytest.approx(-0.1, rel=1e-12)


def test_perfect_predictions_leave_only_penalty_gradient():
    w = np.array([[800.0, 0.5], [-800.0, -0.25]])
    model = DnnModel((1, 2), [w], hyper=Hyper(l2=0.4))
    grads = backprop(model, [[0.0]], [[1.0, 0.0]])
    np.testing.assert_allclose(grads[0][:, 0], 0.0, atol=1e-12)
    np.testing.assert_allclose(grads[0][:, 1], 0.4 * w[:, 1], rtol=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.2])
def test_gradient_check_default_architecture(rng, lam):
    model, X, Y = _random_problem(rng, (10, 15, 15, 15, 6), 8, lam)
    fd = oracles.finite_difference_grads(model.weights, X, Y, lam)
    for g, f in zip(backprop(model, X, Y), fd):
        assert oracles.max_relative_error(g, f) < 1e-6


def test_train_zero_iterations_returns_initial_model(rng):
    X = rng.normal(size=(12, 4))
    y = np.arange(12) % 3
    model, trace = train(X, y, (4, 5, 3), Hyper(iterations=0), seed=9)
    init = dnn.init_model((4, 5, 3), 9)
    for a, b in zip(model.weights, init.weights):
        np.testing.assert_array_equal(a, b)
    assert trace.cost_per_iteration == []


def test_train_is_deterministic(rng):
    X = rng.normal(size=(20, 6))
    y = np.arange(20) % 4
    a, ta = train(X, y, (6, 7, 7, 4), Hyper(iterations=30), seed=5)
    b, tb = train(X, y, (6, 7, 7, 4), Hyper(iterations=30), seed=5)
    assert all(wa.tobytes() == wb.tobytes() for wa, wb in zip(a.weights, b.weights))
    assert ta.cost_per_iteration == tb.cost_per_iteration


def test_cost_decreases_on_separable_problem():
    rng = np.random.default_rng(0)
    centers = np.array([[3, 0], [-3, 0], [0, 3]])
    y = np.repeat(np.arange(3), 10)
    X = centers[y] + 0.3 * rng.normal(size=(30, 2))
    _, trace = train(X, y, (2, 15, 15, 15, 3), Hyper(learning_rate=0.01, iterations=20), seed=1)
    costs = [trace.initial_cost] + trace.cost_per_iteration
    assert all(b < a for a, b in zip(costs, costs[1:]))


def test_train_invariant_under_example_permutation():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(16, 3))
    y = np.arange(16) % 2
    perm = rng.permutation(16)
    a, _ = train(X, y, (3, 4, 2), Hyper(iterations=25), seed=3)
    b, _ = train(X[perm], y[perm], (3, 4, 2), Hyper(iterations=25), seed=3)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_allclose(wa, wb, rtol=1e-10, atol=1e-12)


def test_divergence_reports_iteration(monkeypatch, rng):
    real_cost = dnn.cost
    calls = []

    def flaky_cost(model, X, Y):
        calls.append(1)
        # initial cost plus two good iterations, then a blow-up
        return float("inf") if len(calls) == 4 else real_cost(model, X, Y)

    monkeypatch.setattr(dnn, "cost", flaky_cost)
    with pytest.raises(TrainingDiverged) as err:
        train(rng.normal(size=(6, 2)), [0, 1] * 3, (2, 3, 2), Hyper(iterations=10), seed=0)
    assert err.value.iteration == 3
    assert "iteration 3" in str(err.value)


def test_checkpoint_accuracy(rng):
    X = rng.normal(size=(12, 3))
    _, trace = train(X, np.arange(12) % 2, (3, 4, 2), Hyper(iterations=10), checkpoint_every=5)
    assert [it for it, _ in trace.accuracy_per_checkpoint] == [5, 10]
    assert all(0 <= acc <= 1 for _, acc in trace.accuracy_per_checkpoint)


def test_predict_argmax_and_ties():
    w = np.zeros((4, 2))
    w[:, 0] = [math.log(0.1 / 0.9), math.log(9.0), math.log(0.2 / 0.8), -5]
    assert predict(DnnModel((1, 4), [w]), [0.0])[0] == 1
    assert predict(DnnModel((1, 4), [np.zeros((4, 2))]), [1.0])[0] == 0


def test_predict_matches_forward(rng):
    model = dnn.init_model((10, 15, 15, 15, 6), 11)
    for x in rng.normal(size=(50, 10)):
        label, out = predict(model, x)
        _, ref = forward(model, x)
        assert label == int(np.argmax(ref))
        np.testing.assert_array_equal(out, ref)


def test_serialization_is_bit_faithful(rng):
    model, X, _ = _random_problem(rng, (10, 15, 15, 15, 6), 4, 0.1, seed=8)
    back = DnnModel.from_dict(json.loads(json.dumps(model.to_dict())))
    assert back.layer_sizes == model.layer_sizes and back.hyper == model.hyper
    assert all(a.tobytes() == b.tobytes() for a, b in zip(back.weights, model.weights))


def test_shape_validation():
    with pytest.raises(ValueError):
        DnnModel((2, 3), [np.zeros((3, 2))])
    with pytest.raises(ValueError):
        DnnModel((1, 1), [np.array([[np.nan, 0.0]])])

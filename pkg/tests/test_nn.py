import numpy as np
import pytest

from helpers import layer_gradcheck, numeric_grad, relerr
from vhcm.nn import (Adam, CnnModel, ConvLayer, DenseLayer, Flatten, MaxPool, TrainConfig,
                     bce_loss, clone, conv_forward, evaluate_loss, maxpool_forward, predict_labels,
                     shape_chain, sigmoid, train)


def test_shape_chains():
    assert shape_chain(257)[-1] == (30, 128)
    assert shape_chain(33)[-1] == (2, 128)
    assert CnnModel.build(257, 257).pre_flatten_shape() == (30, 128)
    assert CnnModel.build(33, 1).pre_flatten_shape() == (2, 128)
    with pytest.raises(ValueError):
        shape_chain(9)


def test_conv_matches_naive_loop():
    gen = np.random.default_rng(0)
    layer = ConvLayer(gen.standard_normal((4, 2, 3)), gen.standard_normal(4))
    x = gen.standard_normal((10, 2))
    y = conv_forward(x, layer)
    ref = np.zeros((8, 4))
    for i in range(8):
        for o in range(4):
            ref[i, o] = max(0.0, np.sum(layer.kernels[o] * x[i:i + 3].T) + layer.biases[o])
    assert np.allclose(y, ref)


def test_maxpool_example_and_ties():
    y, arg = maxpool_forward(np.array([[1.0], [3.0], [2.0], [2.0], [7.0]]))
    assert y[:, 0].tolist() == [3.0, 2.0]
    assert arg[:, 0].tolist() == [1, 0]


@pytest.mark.parametrize("seed", range(10))
def test_conv_gradients(seed):
    gen = np.random.default_rng(seed)
    layer = ConvLayer(gen.standard_normal((3, 2, 3)), gen.standard_normal(3) * 0.1)
    x = gen.standard_normal((2, 9, 2))
    assert layer_gradcheck(layer, x, gen) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_maxpool_gradients(seed):
    gen = np.random.default_rng(seed)
    assert layer_gradcheck(MaxPool(), gen.standard_normal((2, 9, 3)), gen) < 1e-4


@pytest.mark.parametrize("activation", ["relu", "sigmoid", "none"])
@pytest.mark.parametrize("seed", range(10))
def test_dense_gradients(seed, activation):
    gen = np.random.default_rng(seed)
    layer = DenseLayer(gen.standard_normal((4, 6)), gen.standard_normal(4) * 0.1, activation)
    assert layer_gradcheck(layer, gen.standard_normal((3, 6)), gen) < 1e-4


def test_flatten_gradients():
    gen = np.random.default_rng(0)
    assert layer_gradcheck(Flatten(), gen.standard_normal((2, 3, 4)), gen) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_full_model_gradient_with_bce(seed):
    gen = np.random.default_rng(seed)
    model = CnnModel.build(33, 2, seed=seed, filters=(2, 3, 2), hidden=4)
    # zero biases can park a dead unit exactly on the ReLU kink
    for p in model.params[1::2]:
        p[...] = gen.uniform(0.05, 0.2, p.shape)
    x = gen.standard_normal((3, 33))
    t = gen.integers(0, 2, (3, 2)).astype(float)

    def obj():
        return bce_loss(model.forward(x)[0], t)[0]

    pred, caches = model.forward(x)
    grads = model.backward(caches, bce_loss(pred, t)[1])
    for p, g in zip(model.params, grads):
        assert relerr(g, numeric_grad(obj, p)) < 1e-4


def test_bce_values_and_gradient():
    loss, grad = bce_loss(np.array([[0.9, 0.2]]), np.array([[1.0, 0.0]]))
    assert loss == pytest.approx(-(np.log(0.9) + np.log(0.8)) / 2)
    assert grad == pytest.approx(np.array([[-1 / 0.9 / 2, 1 / 0.8 / 2]]))
    loss0, g0 = bce_loss(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert 0 < loss0 < 1e-6
    assert np.all(g0 == 0)


def test_sigmoid_stable():
    z = np.array([-800.0, 0.0, 800.0])
    assert np.array_equal(sigmoid(z), [0.0, 0.5, 1.0])


def test_adam_zero_gradient_is_noop():
    p = [np.array([1.0, -2.0])]
    opt = Adam(p)
    for _ in range(3):
        opt.step([np.zeros(2)])
    assert np.array_equal(p[0], [1.0, -2.0])


def test_adam_first_step_is_lr_times_sign():
    p = [np.array([1.0, 1.0])]
    Adam(p, lr=0.01).step([np.array([3.0, -0.5])])
    assert np.allclose(p[0], [0.99, 1.01], atol=1e-8)


def _toy(seed=0, n=64):
    gen = np.random.default_rng(seed)
    x = gen.standard_normal((n, 33))
    y = (x[:, 16] > 0).astype(float)[:, None]
    return x, y


def test_train_is_deterministic_and_learns():
    x, y = _toy()
    vx, vy = _toy(1, 32)
    cfg = TrainConfig(max_epochs=6, patience=3, batch_size=16, learning_rate=0.01, seed=4)
    m1, h1 = train(CnnModel.build(33, 1, seed=4, filters=(4, 4, 4), hidden=8), x, y, vx, vy, cfg)
    m2, h2 = train(CnnModel.build(33, 1, seed=4, filters=(4, 4, 4), hidden=8), x, y, vx, vy, cfg)
    assert h1.to_csv() == h2.to_csv()
    assert all(np.array_equal(a, b) for a, b in zip(m1.params, m2.params))
    assert h1.train_loss[-1] < h1.train_loss[0]


def test_early_stopping_restores_best():
    x, y = _toy()
    vx, vy = _toy(1, 32)
    cfg = TrainConfig(max_epochs=40, patience=2, batch_size=16, learning_rate=0.05, seed=0)
    model, hist = train(CnnModel.build(33, 1, seed=0, filters=(4, 4, 4), hidden=8), x, y, vx, vy, cfg)
    assert len(hist.train_loss) <= hist.best_epoch + cfg.patience
    assert evaluate_loss(model, vx, vy) == pytest.approx(min(hist.val_loss), rel=1e-12)


def test_predict_threshold_is_strict():
    model = CnnModel([Flatten(), DenseLayer(np.zeros((2, 4)), np.array([0.0, 5.0]), "sigmoid")], 4, 2)
    assert predict_labels(model, np.ones((1, 4))).tolist() == [[0, 1]]
    m2 = CnnModel([Flatten(), DenseLayer(np.zeros((2, 4)), np.log([1 / 9, 9.0]), "sigmoid")], 4, 2)
    assert predict_labels(m2, np.ones((1, 4))).tolist() == [[0, 1]]


def test_clone_is_independent():
    m = CnnModel.build(33, 1, seed=0)
    c = clone(m)
    c.params[0][...] = 0
    assert np.any(m.params[0] != 0)


def test_build_seeded():
    a, b = CnnModel.build(33, 1, seed=5), CnnModel.build(33, 1, seed=5)
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
    assert not np.array_equal(a.params[0], CnnModel.build(33, 1, seed=6).params[0])
    assert all(np.all(p == 0) for p in a.params[1::2])

"""Small 1D convolutional classifier written directly in numpy.

Tensors are ``(batch, length, channels)`` float64 arrays. Each layer
exposes ``forward(x) -> (y, cache)`` and ``backward(dy, cache) -> (dx, grads)``
where ``grads`` lines up with ``layer.params``.
"""

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from . import rng

log = logging.getLogger(__name__)

KERNEL = 3
CLAMP = 1e-7


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class ConvLayer:
    """Valid 1D correlation with width-3 kernels followed by ReLU."""

    def __init__(self, kernels, biases):
        self.kernels = np.asarray(kernels, dtype=float)   # (out, in, 3)
        self.biases = np.asarray(biases, dtype=float)     # (out,)
        if self.kernels.ndim != 3 or self.kernels.shape[2] != KERNEL:
            raise ValueError(f"kernels must be (out, in, {KERNEL}), got {self.kernels.shape}")

    @property
    def params(self):
        return [self.kernels, self.biases]

    def out_length(self, length):
        return length - KERNEL + 1

    def _matrix(self):
        cout, cin, _ = self.kernels.shape
        return self.kernels.transpose(2, 1, 0).reshape(KERNEL * cin, cout)

    def forward(self, x):
        B, L, C = x.shape
        if L < KERNEL:
            raise ValueError(f"input length {L} is shorter than the kernel")
        if C != self.kernels.shape[1]:
            raise ValueError(f"expected {self.kernels.shape[1]} channels, got {C}")
        Lout = L - KERNEL + 1
        cols = np.stack([x[:, d:d + Lout, :] for d in range(KERNEL)], axis=2)
        cols = cols.reshape(B * Lout, KERNEL * C)
        z = cols @ self._matrix() + self.biases
        return relu(z).reshape(B, Lout, -1), (cols, z, x.shape)

    def backward(self, dy, cache):
        cols, z, (B, L, C) = cache
        Lout = L - KERNEL + 1
        dz = dy.reshape(B * Lout, -1) * (z > 0)
        cout, cin, _ = self.kernels.shape
        dW = cols.T @ dz
        dK = dW.reshape(KERNEL, cin, cout).transpose(2, 1, 0)
        db = dz.sum(axis=0)
        dcols = (dz @ self._matrix().T).reshape(B, Lout, KERNEL, C)
        dx = np.zeros((B, L, C))
        for d in range(KERNEL):
            dx[:, d:d + Lout, :] += dcols[:, :, d, :]
        return dx, [dK, db]


class MaxPool:
    """Non-overlapping max over pairs; a trailing odd element is dropped."""

    params = []

    def out_length(self, length):
        return length // 2

    def forward(self, x):
        B, L, C = x.shape
        Lp = L // 2
        xr = x[:, :2 * Lp, :].reshape(B, Lp, 2, C)
        arg = np.argmax(xr, axis=2)     # ties -> first element
        y = np.take_along_axis(xr, arg[:, :, None, :], axis=2)[:, :, 0, :]
        return y, (arg, x.shape)

    def backward(self, dy, cache):
        arg, (B, L, C) = cache
        Lp = L // 2
        dxr = np.zeros((B, Lp, 2, C))
        np.put_along_axis(dxr, arg[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros((B, L, C))
        dx[:, :2 * Lp, :] = dxr.reshape(B, 2 * Lp, C)
        return dx, []


class Flatten:
    params = []

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, shape):
        return dy.reshape(shape), []


class DenseLayer:
    """``activation(z @ G.T + v)`` with G of shape (out, in)."""

    def __init__(self, weights, bias, activation="relu"):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        if activation not in ("relu", "sigmoid", "none"):
            raise ValueError(f"unknown activation {activation}")
        self.activation = activation

    @property
    def params(self):
        return [self.weights, self.bias]

    def forward(self, x):
        z = x @ self.weights.T + self.bias
        if self.activation == "relu":
            y = relu(z)
        elif self.activation == "sigmoid":
            y = sigmoid(z)
        else:
            y = z
        return y, (x, z, y)

    def backward(self, dy, cache):
        x, z, y = cache
        if self.activation == "relu":
            dz = dy * (z > 0)
        elif self.activation == "sigmoid":
            dz = dy * y * (1.0 - y)
        else:
            dz = dy
        return dz @ self.weights, [dz.T @ x, dz.sum(axis=0)]


def conv_forward(x, layer: ConvLayer):
    """Single-sample convenience: ``x`` is (length, channels)."""
    return layer.forward(np.asarray(x, dtype=float)[None])[0][0]


def maxpool_forward(x):
    y, (arg, _) = MaxPool().forward(np.asarray(x, dtype=float)[None])
    return y[0], arg[0]


FILTERS = (32, 64, 128)
HIDDEN = 64


def shape_chain(input_length: int, filters=FILTERS):
    """(length, channels) after each conv and pool; raises if the input is too short."""
    chain = [(input_length, 1)]
    L = input_length
    for f in filters:
        L -= KERNEL - 1
        if L < 1:
            raise ValueError(f"input length {input_length} too short for {len(filters)} conv blocks")
        chain.append((L, f))
        L //= 2
        if L < 1:
            raise ValueError(f"input length {input_length} too short for {len(filters)} conv blocks")
        chain.append((L, f))
    return chain


class CnnModel:
    """conv(32)-pool-conv(64)-pool-conv(128)-pool-flatten-dense(64)-dense(out, sigmoid)."""

    def __init__(self, layers, input_length: int, output_size: int):
        self.layers = layers
        self.input_length = input_length
        self.output_size = output_size

    @classmethod
    def build(cls, input_length: int, output_size: int, seed: int = 0,
              filters=FILTERS, hidden: int = HIDDEN) -> "CnnModel":
        chain = shape_chain(input_length, filters)
        gen = rng.stream(seed, "init")
        layers = []
        cin = 1
        for f in filters:
            fan_in = cin * KERNEL
            lim = np.sqrt(6.0 / fan_in)
            layers += [ConvLayer(gen.uniform(-lim, lim, (f, cin, KERNEL)), np.zeros(f)), MaxPool()]
            cin = f
        flat = chain[-1][0] * chain[-1][1]
        lim = np.sqrt(6.0 / flat)
        layers += [Flatten(), DenseLayer(gen.uniform(-lim, lim, (hidden, flat)), np.zeros(hidden), "relu")]
        lim = np.sqrt(3.0 / hidden)
        layers.append(DenseLayer(gen.uniform(-lim, lim, (output_size, hidden)), np.zeros(output_size), "sigmoid"))
        return cls(layers, input_length, output_size)

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    def pre_flatten_shape(self):
        return shape_chain(self.input_length, tuple(l.kernels.shape[0] for l in self.layers
                                                    if isinstance(l, ConvLayer)))[-1]

    def forward(self, x):
        """Predictions for a batch ``(B, L)`` or ``(B, L, 1)``; returns ``(y, caches)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None]
        if x.ndim == 2:
            x = x[:, :, None]
        if x.shape[1] != self.input_length:
            raise ValueError(f"model expects length {self.input_length}, got {x.shape[1]}")
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, loss_grad):
        grads = []
        dy = loss_grad
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            dy, g = layer.backward(dy, cache)
            grads = g + grads
        return grads

    def predict(self, x, batch_size: int = 1024):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None]
        out = [self.forward(x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.output_size))

    def copy_params(self):
        return [p.copy() for p in self.params]

    def set_params(self, values):
        for p, v in zip(self.params, values):
            p[...] = v


def bce_loss(pred, target):
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].

    Returns ``(loss, d loss / d pred)``.
    """
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float).reshape(p.shape)
    pc = np.clip(p, CLAMP, 1.0 - CLAMP)
    loss = float(np.mean(-(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))))
    inside = (p > CLAMP) & (p < 1.0 - CLAMP)
    grad = np.where(inside, (-t / pc + (1.0 - t) / (1.0 - pc)) / p.size, 0.0)
    return loss, grad


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self.t
        corr2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss"]
        rows += [f"{i + 1},{a:.17g},{b:.17g}" for i, (a, b) in enumerate(zip(self.train_loss, self.val_loss))]
        return "\n".join(rows) + "\n"


def evaluate_loss(model: CnnModel, x, y, batch_size: int = 1024) -> float:
    total = 0.0
    for i in range(0, len(x), batch_size):
        pred = model.forward(x[i:i + batch_size])[0]
        loss, _ = bce_loss(pred, y[i:i + batch_size])
        total += loss * len(pred)
    return total / len(x)


def train(model: CnnModel, train_x, train_y, val_x, val_y, config: TrainConfig = None):
    """Mini-batch Adam with early stopping on validation loss.

    Training stops after `patience` epochs without improvement (or at
    `max_epochs`) and the parameters of the best validation epoch are
    restored. Returns ``(model, history)``.
    """
    config = config or TrainConfig()
    train_x, val_x = np.asarray(train_x, dtype=float), np.asarray(val_x, dtype=float)
    train_y = np.asarray(train_y, dtype=float).reshape(len(train_x), -1)
    val_y = np.asarray(val_y, dtype=float).reshape(len(val_x), -1)
    if len(train_x) == 0 or len(val_x) == 0:
        raise ValueError("training and validation sets must be non-empty")
    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.eps_adam)
    shuffle = rng.stream(config.seed, "shuffle")
    hist = History()
    best, best_params, wait = np.inf, model.copy_params(), 0
    for epoch in range(config.max_epochs):
        order = shuffle.permutation(len(train_x))
        total = 0.0
        for i in range(0, len(order), config.batch_size):
            idx = order[i:i + config.batch_size]
            pred, caches = model.forward(train_x[idx])
            loss, grad = bce_loss(pred, train_y[idx])
            opt.step(model.backward(caches, grad))
            total += loss * len(idx)
        hist.train_loss.append(total / len(order))
        val = evaluate_loss(model, val_x, val_y)
        hist.val_loss.append(val)
        log.info("epoch %d train %.5f val %.5f", epoch + 1, hist.train_loss[-1], val)
        if val < best:
            best, best_params, wait = val, model.copy_params(), 0
            hist.best_epoch = epoch + 1
        else:
            wait += 1
            if wait >= config.patience:
                break
    model.set_params(best_params)
    return model, hist


def predict_labels(model: CnnModel, x) -> np.ndarray:
    """1 (NLM) where the sigmoid output is strictly above 0.5."""
    return (model.predict(x) > 0.5).astype(np.int8)


def clone(model: CnnModel) -> CnnModel:
    return copy.deepcopy(model)

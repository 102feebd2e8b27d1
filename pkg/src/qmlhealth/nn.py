"""Small dense softmax classifier trained by mini-batch SGD on cross-entropy."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

PROB_FLOOR = 1e-12


@dataclass
class DenseNet:
    """Weights are ``(fan_out, fan_in)``; hidden layers use ReLU, the last softmax."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValidationError("need one bias vector per weight matrix")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValidationError(f"layer {k}: weight {W.shape} / bias {b.shape} mismatch")
            if k and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ValidationError(
                    f"layer {k} expects {W.shape[1]} inputs but layer {k - 1} emits "
                    f"{self.weights[k - 1].shape[0]}"
                )

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def copy(self) -> "DenseNet":
        return DenseNet([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def params(self):
        for W, b in zip(self.weights, self.biases):
            yield W
            yield b


def init_dense_net(sizes, seed: int = 0) -> DenseNet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValidationError(f"layer sizes must be >= 1 and at least two, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_all(net: DenseNet, X: np.ndarray):
    activations = [X]
    h = X
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W.T + b
        h = softmax(z) if k == last else np.maximum(z, 0.0)
        activations.append(h)
    return activations


def _check_inputs(net: DenseNet, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != net.sizes[0]:
        raise ValidationError(f"input length {X.shape[-1]} does not match net input {net.sizes[0]}")
    return X


def forward(net: DenseNet, x) -> np.ndarray:
    """Class probabilities for one flattened input (or a batch of them)."""
    X = _check_inputs(net, x)
    return _forward_all(net, np.atleast_2d(X))[-1].reshape(X.shape[:-1] + (net.sizes[-1],))


def cross_entropy(probs, label: int) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise ValidationError(f"label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def mean_loss_and_accuracy(net: DenseNet, X, y) -> tuple[float, float]:
    probs = forward(net, X)
    y = np.asarray(y, dtype=np.int64)
    picked = np.maximum(probs[np.arange(y.size), y], PROB_FLOOR)
    return float(-np.log(picked).mean()), float((probs.argmax(1) == y).mean())


def backprop(net: DenseNet, X, y) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the batch-mean cross-entropy w.r.t. every weight and bias."""
    X = np.atleast_2d(_check_inputs(net, X))
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    acts = _forward_all(net, X)
    delta = acts[-1].copy()
    delta[np.arange(y.size), y] -= 1.0
    delta /= y.size
    gW = [None] * len(net.weights)
    gb = [None] * len(net.weights)
    for k in range(len(net.weights) - 1, -1, -1):
        gW[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ net.weights[k]) * (acts[k] > 0.0)
    return gW, gb


def gradient_check(net: DenseNet, sample, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    ``sample`` is ``(x, label)``.  Relative error per parameter is
    ``|g_bp - g_fd| / max(1e-8, |g_bp| + |g_fd|)``.
    """
    x, label = sample
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    gW, gb = backprop(net, x, [label])
    analytic = []
    for a, b in zip(gW, gb):
        analytic.extend([a, b])
    probe = net.copy()

    def loss():
        return cross_entropy(forward(probe, x[0]), label)

    worst = 0.0
    for param, grad in zip(probe.params(), analytic):
        flat = param.reshape(-1)
        g_flat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = loss()
            flat[idx] = orig - epsilon
            down = loss()
            flat[idx] = orig
            fd = (up - down) / (2.0 * epsilon)
            err = abs(g_flat[idx] - fd) / max(1e-8, abs(g_flat[idx]) + abs(fd))
            worst = max(worst, err)
    return worst


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    HEADER = ("epoch", "train_loss", "train_acc", "test_loss", "test_acc")

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.HEADER)
            for r in self.records:
                writer.writerow([r.epoch] + [f"{v:.6f}" for v in
                                             (r.train_loss, r.train_acc, r.test_loss, r.test_acc)])

    @classmethod
    def from_csv(cls, path) -> "TrainLog":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls([EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["train_acc"]),
                                float(r["test_loss"]), float(r["test_acc"])) for r in rows])


def train_sgd(net: DenseNet, train, test, lr: float = 0.01, epochs: int = 10,
              batch_size: int = 4, seed: int = 0) -> tuple[DenseNet, TrainLog]:
    """Mini-batch SGD; ``train``/``test`` are ``(X, y)`` with integer class labels.

    The input net is not modified.  Shuffling uses ``numpy.random.default_rng(seed)``,
    so two runs with the same seed visit samples in the same order.
    """
    X, y = (np.asarray(a) for a in train)
    Xt, yt = (np.asarray(a) for a in test)
    if X.shape[0] == 0 or Xt.shape[0] == 0:
        raise ValidationError("training and test sets must be non-empty")
    X = _check_inputs(net, X.reshape(X.shape[0], -1))
    Xt = _check_inputs(net, Xt.reshape(Xt.shape[0], -1))
    y = y.astype(np.int64)
    yt = yt.astype(np.int64)
    n_out = net.sizes[-1]
    if y.max() >= n_out or yt.max() >= n_out or min(y.min(), yt.min()) < 0:
        raise ValidationError(f"labels must be in [0, {n_out})")
    if lr < 0 or epochs < 0 or batch_size < 1:
        raise ValidationError("need lr >= 0, epochs >= 0, batch_size >= 1")

    net = net.copy()
    rng = np.random.default_rng(seed)
    log = TrainLog()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(X.shape[0])
        for start in range(0, order.size, batch_size):
            batch = order[start:start + batch_size]
            gW, gb = backprop(net, X[batch], y[batch])
            for k in range(len(net.weights)):
                net.weights[k] -= lr * gW[k]
                net.biases[k] -= lr * gb[k]
        tr_loss, tr_acc = mean_loss_and_accuracy(net, X, y)
        te_loss, te_acc = mean_loss_and_accuracy(net, Xt, yt)
        log.records.append(EpochRecord(epoch, tr_loss, tr_acc, te_loss, te_acc))
    return net, log

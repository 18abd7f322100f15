"""Linear comparators used by the evaluation harness (not product surfaces)."""

from __future__ import annotations

import numpy as np

from .nn import AdamState, adam_step, sigmoid, softmax
from .records import LabeledSentence
from .textproc import tokenize


class BowSoftmaxClassifier:
    """Bag-of-words (binary presence) multinomial logistic regression."""

    def __init__(self, vocab: list[str], w: np.ndarray, b: np.ndarray):
        self.vocab = vocab
        self.index = {t: i for i, t in enumerate(vocab)}
        self.w = w
        self.b = b

    def _features(self, tokens) -> np.ndarray:
        x = np.zeros(len(self.vocab))
        for t in tokens:
            i = self.index.get(t)
            if i is not None:
                x[i] = 1.0
        return x

    def predict(self, text: str) -> int:
        x = self._features(tokenize(text))
        return int(np.argmax(x @ self.w + self.b))

    def accuracy(self, dataset: list[LabeledSentence]) -> float:
        hits = sum(1 for s in dataset if self.predict(s.text) == int(s.template))
        return hits / len(dataset)


def train_bow_softmax(
    dataset: list[LabeledSentence],
    n_classes: int = 7,
    lr: float = 0.01,
    epochs: int = 120,
    batch_size: int = 256,
    seed: int = 0,
) -> BowSoftmaxClassifier:
    if not dataset:
        raise ValueError("training dataset is empty")
    rng = np.random.default_rng(seed)
    token_lists = [tokenize(s.text) for s in dataset]
    vocab = sorted({t for toks in token_lists for t in toks})
    index = {t: i for i, t in enumerate(vocab)}
    n, d = len(dataset), len(vocab)

    X = np.zeros((n, d))
    for i, toks in enumerate(token_lists):
        for t in toks:
            X[i, index[t]] = 1.0
    y = np.array([int(s.template) for s in dataset], dtype=np.int64)

    w = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    params = {"w": w, "b": b}
    state = AdamState.for_params(params)
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = perm[start: start + batch_size]
            xb, yb = X[batch], y[batch]
            probs = softmax(xb @ w + b)
            probs[np.arange(len(batch)), yb] -= 1.0
            probs /= len(batch)
            grads = {"w": xb.T @ probs, "b": probs.sum(axis=0)}
            adam_step(params, grads, state, lr)
    return BowSoftmaxClassifier(vocab, w, b)


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    lr: float = 0.1,
    epochs: int = 500,
) -> tuple[np.ndarray, float]:
    """Full-batch binary logistic regression; returns (weights, bias)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    params = {"w": w, "b": np.zeros(1)}
    state = AdamState.for_params(params)
    for _ in range(epochs):
        p = sigmoid(X @ params["w"] + params["b"][0])
        err = (p - y) / len(y)
        grads = {"w": X.T @ err, "b": np.array([err.sum()])}
        adam_step(params, grads, state, lr)
    return params["w"], float(params["b"][0])


def logistic_scores(X: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    return sigmoid(np.asarray(X, dtype=np.float64) @ w + b)

"""Sentence intent classification.

A deep-averaging encoder (mean token embedding -> two ReLU layers) feeds an
MLP softmax head over the 7 intent classes. Everything is float64 numpy with
hand-written backprop so gradients can be checked against finite differences,
and training is bitwise deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .modelio import load_npz_model, save_npz_model
from .nn import AdamState, adam_step, relu, softmax, xavier_uniform
from .records import LabeledSentence, Template
from .textproc import EmbeddingTable, tokenize

N_CLASSES = 7
LOSS_CLAMP = 1e-12


class EmptySentenceError(ValueError):
    """Raised when a sentence has no tokens to encode."""


@dataclass(frozen=True)
class TcHyper:
    lr: float = 1e-3
    batch_size: int = 256
    dropout: float = 0.4
    epochs: int = 100
    mlp_depth: int = 3
    seed: int = 0
    emb_dim: int = 64
    hidden1: int = 64
    hidden2: int = 64
    mlp_hidden: int = 64
    buckets: int = 4096
    max_tokens: int = 64
    class_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must be in [0, 1)")
        if self.mlp_depth < 1:
            raise ValueError("mlp_depth must be >= 1")


class DanTcModel:
    """Embedding table + averaging encoder + MLP head. Immutable at inference."""

    def __init__(self, emb: EmbeddingTable, w1, b1, w2, b2,
                 mlp: list[tuple[np.ndarray, np.ndarray]],
                 dropout: float = 0.0, max_tokens: int = 64):
        self.emb = emb
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        self.mlp = [(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
                    for w, b in mlp]
        self.dropout = float(dropout)
        self.max_tokens = int(max_tokens)
        if self.w1.shape[0] != emb.dim or self.w1.shape[1] != self.b1.shape[0]:
            raise ValueError("encoder layer-1 shapes do not chain")
        if self.w2.shape[0] != self.w1.shape[1] or self.w2.shape[1] != self.b2.shape[0]:
            raise ValueError("encoder layer-2 shapes do not chain")
        width = self.w2.shape[1]
        for w, b in self.mlp:
            if w.shape[0] != width or w.shape[1] != b.shape[0]:
                raise ValueError("mlp layer shapes do not chain")
            width = w.shape[1]
        if width != N_CLASSES:
            raise ValueError(f"final layer must emit {N_CLASSES} logits, got {width}")

    @classmethod
    def init_random(cls, vocab, hyper: TcHyper, rng: np.random.Generator,
                    emb: EmbeddingTable | None = None) -> "DanTcModel":
        if emb is None:
            emb = EmbeddingTable.random(vocab, dim=hyper.emb_dim, buckets=hyper.buckets, rng=rng)
        elif emb.dim != hyper.emb_dim:
            raise ValueError(
                f"pretrained embeddings have dim {emb.dim}, hyper wants {hyper.emb_dim}"
            )
        w1 = xavier_uniform(rng, hyper.emb_dim, hyper.hidden1)
        b1 = np.zeros(hyper.hidden1)
        w2 = xavier_uniform(rng, hyper.hidden1, hyper.hidden2)
        b2 = np.zeros(hyper.hidden2)
        mlp = []
        width = hyper.hidden2
        for _ in range(hyper.mlp_depth - 1):
            mlp.append((xavier_uniform(rng, width, hyper.mlp_hidden), np.zeros(hyper.mlp_hidden)))
            width = hyper.mlp_hidden
        mlp.append((xavier_uniform(rng, width, N_CLASSES), np.zeros(N_CLASSES)))
        return cls(emb, w1, b1, w2, b2, mlp, dropout=hyper.dropout, max_tokens=hyper.max_tokens)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {"emb": self.emb.matrix, "w1": self.w1, "b1": self.b1,
                  "w2": self.w2, "b2": self.b2}
        for i, (w, b) in enumerate(self.mlp):
            params[f"mlp{i}_w"] = w
            params[f"mlp{i}_b"] = b
        return params

    def token_rows(self, tokens) -> list[int]:
        return [self.emb.row_index(t) for t in tokens[: self.max_tokens]]


def dan_encode(model: DanTcModel, tokens) -> np.ndarray:
    """Encode a token sequence: relu(relu(mean(emb) W1 + b1) W2 + b2)."""
    if not tokens:
        raise EmptySentenceError("cannot encode a sentence with no tokens")
    rows = model.token_rows(tokens)
    xbar = model.emb.matrix[rows].mean(axis=0)
    h1 = relu(xbar @ model.w1 + model.b1)
    return relu(h1 @ model.w2 + model.b2)


def tc_forward(model: DanTcModel, z_sent: np.ndarray) -> np.ndarray:
    """Class probabilities from a sentence encoding (dropout always off here)."""
    z_sent = np.asarray(z_sent, dtype=np.float64)
    if z_sent.shape[-1] != model.w2.shape[1]:
        raise ValueError(
            f"encoding has dimension {z_sent.shape[-1]}, expected {model.w2.shape[1]}"
        )
    a = z_sent
    for w, b in model.mlp[:-1]:
        a = relu(a @ w + b)
    w, b = model.mlp[-1]
    return softmax(a @ w + b)


def tc_predict(model: DanTcModel, sentence) -> Template:
    """Most probable template; ties resolve to the lowest class index."""
    tokens = sentence if isinstance(sentence, (list, tuple)) else tokenize(str(sentence))
    probs = tc_forward(model, dan_encode(model, tokens))
    return Template(int(np.argmax(probs)))


def tc_loss(gold: np.ndarray, predicted: np.ndarray) -> float:
    """Cross entropy -sum(p * log p_hat), with p_hat clamped at 1e-12."""
    gold = np.asarray(gold, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if gold.shape != predicted.shape:
        raise ValueError(f"shape mismatch: {gold.shape} vs {predicted.shape}")
    return float(-(gold * np.log(np.maximum(predicted, LOSS_CLAMP))).sum())


def _flatten_batch(idx_lists: list[list[int]]):
    lens = np.array([len(r) for r in idx_lists], dtype=np.int64)
    flat = np.concatenate([np.asarray(r, dtype=np.int64) for r in idx_lists])
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    return flat, lens, starts


def loss_and_grads(
    model: DanTcModel,
    idx_lists: list[list[int]],
    gold: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
    class_weights: np.ndarray | None = None,
):
    """Mean cross-entropy over a batch plus gradients for every parameter.

    ``idx_lists`` holds embedding-row indices per sentence; ``gold`` the class
    index per sentence. Dropout is applied only when ``dropout_rng`` is given.
    """
    flat, lens, starts = _flatten_batch(idx_lists)
    bsz = len(idx_lists)
    emb = model.emb.matrix
    sums = np.add.reduceat(emb[flat], starts, axis=0)
    xbar = sums / lens[:, None]

    keep = 1.0 - model.dropout
    use_dropout = dropout_rng is not None and model.dropout > 0.0

    def drop_mask(shape):
        return (dropout_rng.random(shape) < keep).astype(np.float64) / keep

    pre1 = xbar @ model.w1 + model.b1
    h1 = relu(pre1)
    m1 = drop_mask(h1.shape) if use_dropout else None
    h1d = h1 * m1 if use_dropout else h1

    pre2 = h1d @ model.w2 + model.b2
    z = relu(pre2)
    m2 = drop_mask(z.shape) if use_dropout else None
    a = z * m2 if use_dropout else z

    acts = [a]          # dropout-adjusted inputs to each mlp layer
    pres = []
    masks = []
    for w, b in model.mlp[:-1]:
        pre = acts[-1] @ w + b
        h = relu(pre)
        m = drop_mask(h.shape) if use_dropout else None
        pres.append(pre)
        masks.append(m)
        acts.append(h * m if use_dropout else h)
    w_last, b_last = model.mlp[-1]
    logits = acts[-1] @ w_last + b_last
    probs = softmax(logits)

    if class_weights is None:
        weights = np.ones(bsz)
    else:
        weights = np.asarray(class_weights, dtype=np.float64)[gold]
    wsum = weights.sum()
    per_ex = -np.log(np.maximum(probs[np.arange(bsz), gold], LOSS_CLAMP))
    loss = float((weights * per_ex).sum() / wsum)

    grads: dict[str, np.ndarray] = {}
    onehot = np.zeros_like(probs)
    onehot[np.arange(bsz), gold] = 1.0
    dlogits = (probs - onehot) * (weights / wsum)[:, None]

    grads[f"mlp{len(model.mlp) - 1}_w"] = acts[-1].T @ dlogits
    grads[f"mlp{len(model.mlp) - 1}_b"] = dlogits.sum(axis=0)
    da = dlogits @ w_last.T
    for i in range(len(model.mlp) - 2, -1, -1):
        if use_dropout:
            da = da * masks[i]
        dpre = da * (pres[i] > 0)
        grads[f"mlp{i}_w"] = acts[i].T @ dpre
        grads[f"mlp{i}_b"] = dpre.sum(axis=0)
        da = dpre @ model.mlp[i][0].T

    if use_dropout:
        da = da * m2
    dpre2 = da * (pre2 > 0)
    grads["w2"] = h1d.T @ dpre2
    grads["b2"] = dpre2.sum(axis=0)
    dh1 = dpre2 @ model.w2.T
    if use_dropout:
        dh1 = dh1 * m1
    dpre1 = dh1 * (pre1 > 0)
    grads["w1"] = xbar.T @ dpre1
    grads["b1"] = dpre1.sum(axis=0)
    dxbar = dpre1 @ model.w1.T

    demb = np.zeros_like(emb)
    np.add.at(demb, flat, np.repeat(dxbar / lens[:, None], lens, axis=0))
    grads["emb"] = demb

    return loss, probs, grads


def tc_train(
    dataset: list[LabeledSentence],
    hyper: TcHyper,
    vocab: list[str] | None = None,
    embeddings: EmbeddingTable | None = None,
) -> tuple[DanTcModel, list[float]]:
    """Train the classifier; returns the model and the per-epoch mean loss history.

    ``embeddings`` is the pretraining hook: when given, the table initializes
    the model (a copy: fine-tuning mutates it) instead of random vectors.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    rng = np.random.default_rng(hyper.seed)

    token_lists = [tokenize(s.text) for s in dataset]
    for i, toks in enumerate(token_lists):
        if not toks:
            raise EmptySentenceError(f"training sentence {i} has no tokens")
    if embeddings is not None:
        emb = EmbeddingTable(list(embeddings.vocab), embeddings.matrix.copy(),
                             embeddings.buckets)
        model = DanTcModel.init_random(emb.vocab, hyper, rng, emb=emb)
    else:
        if vocab is None:
            vocab = sorted({t for toks in token_lists for t in toks})
        model = DanTcModel.init_random(vocab, hyper, rng)

    idx_lists = [model.token_rows(toks) for toks in token_lists]
    gold = np.array([int(s.template) for s in dataset], dtype=np.int64)
    weights = (np.asarray(hyper.class_weights, dtype=np.float64)
               if hyper.class_weights is not None else None)

    params = model.parameters()
    state = AdamState.for_params(params)
    n = len(dataset)
    history: list[float] = []
    for _ in range(hyper.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            batch = perm[start: start + hyper.batch_size]
            loss, _, grads = loss_and_grads(
                model,
                [idx_lists[i] for i in batch],
                gold[batch],
                dropout_rng=rng if hyper.dropout > 0 else None,
                class_weights=weights,
            )
            adam_step(params, grads, state, hyper.lr)
            total += loss * len(batch)
        history.append(total / n)
    return model, history


def tc_accuracy(model: DanTcModel, dataset: list[LabeledSentence]) -> float:
    hits = sum(1 for s in dataset if tc_predict(model, s.text) == s.template)
    return hits / len(dataset)


MODEL_KIND = "dan_tc"


def save_tc_model(model: DanTcModel, path) -> None:
    meta = {
        "vocab": model.emb.vocab,
        "buckets": model.emb.buckets,
        "dropout": model.dropout,
        "max_tokens": model.max_tokens,
        "mlp_layers": len(model.mlp),
    }
    arrays = {"emb": model.emb.matrix, "w1": model.w1, "b1": model.b1,
              "w2": model.w2, "b2": model.b2}
    for i, (w, b) in enumerate(model.mlp):
        arrays[f"mlp{i}_w"] = w
        arrays[f"mlp{i}_b"] = b
    save_npz_model(path, MODEL_KIND, meta, arrays)


def load_tc_model(path) -> DanTcModel:
    meta, arrays = load_npz_model(path, MODEL_KIND)
    emb = EmbeddingTable(meta["vocab"], arrays["emb"], meta["buckets"])
    mlp = [(arrays[f"mlp{i}_w"], arrays[f"mlp{i}_b"]) for i in range(meta["mlp_layers"])]
    return DanTcModel(emb, arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"],
                      mlp, dropout=meta["dropout"], max_tokens=meta["max_tokens"])

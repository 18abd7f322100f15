"""Gradient-boosted decision trees, built from first/second-order loss statistics.

Exact greedy split search (every feature, every midpoint between consecutive
distinct values), Newton leaf weights -G/(H+lambda) shrunk by eta at install
time, and two objectives: pointwise logistic, and a pairwise objective whose
per-pair weights are the NDCG change of swapping the pair inside its group.
Missing feature values (NaN) always route left. Training is deterministic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .modelio import load_json_model, save_json_model
from .nn import sigmoid


@dataclass(frozen=True)
class GbdtParams:
    trees: int = 100
    max_depth: int = 5
    eta: float = 0.7
    gamma: float = 0.0
    lam: float = 1.0
    min_leaf: int = 1
    base_margin: float = 0.0
    objective: str = "pointwise"  # or "pairwise"
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError("trees must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must be in (0, 1]")
        if self.gamma < 0 or self.lam < 0:
            raise ValueError("gamma and lam must be >= 0")
        if self.objective not in ("pointwise", "pairwise"):
            raise ValueError(f"unknown objective: {self.objective!r}")


def leaf_weight(G: float, H: float, lam: float) -> float:
    """Newton-optimal leaf value -G/(H+lam)."""
    denom = H + lam
    if denom <= 0:
        raise ValueError(f"H + lam must be > 0, got {denom}")
    return -G / denom


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def find_best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    lam: float = 1.0,
    gamma: float = 0.0,
    min_leaf: int = 1,
) -> Split | None:
    """Best (feature, threshold) by second-order gain, or None if no split helps.

    Gain = 1/2 [GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)] - gamma, maximized
    over all features and midpoints between consecutive distinct sorted values;
    ties break toward the lower feature index, then the lower threshold. NaN
    rows count toward the left side of every candidate.
    """
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        return None

    best: Split | None = None
    for j in range(X.shape[1]):
        col = X[:, j]
        nan_mask = np.isnan(col)
        vals = col[~nan_mask]
        if vals.size < 1:
            continue
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cg = np.cumsum(g[~nan_mask][order])
        ch = np.cumsum(h[~nan_mask][order])
        g_nan = float(np.sum(g[nan_mask])) if nan_mask.any() else 0.0
        h_nan = float(np.sum(h[nan_mask])) if nan_mask.any() else 0.0
        n_nan = int(nan_mask.sum())
        G = float(cg[-1]) + g_nan
        H = float(ch[-1]) + h_nan

        cut = np.nonzero(sv[:-1] < sv[1:])[0]
        if cut.size == 0:
            continue
        thresholds = (sv[cut] + sv[cut + 1]) / 2.0
        GL = cg[cut] + g_nan
        HL = ch[cut] + h_nan
        nL = cut + 1 + n_nan
        GR = G - GL
        HR = H - HL
        nR = n - nL
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam)) - gamma
        valid = (nL >= min_leaf) & (nR >= min_leaf) & np.isfinite(gains)
        if not valid.any():
            continue
        gains = np.where(valid, gains, -np.inf)
        k = int(np.argmax(gains))  # first max -> lowest threshold on ties
        if best is None or gains[k] > best.gain:
            best = Split(feature=j, threshold=float(thresholds[k]), gain=float(gains[k]))

    if best is None or best.gain <= 0.0:
        return None
    return best


class Tree:
    """Binary tree over parallel node arrays; feature == -1 marks a leaf."""

    def __init__(self, feature, threshold, left, right, weight, gain):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)

    @classmethod
    def single_leaf(cls, weight: float) -> "Tree":
        return cls([-1], [0.0], [-1], [-1], [weight], [0.0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        pos = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[pos]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            node = pos[rows]
            xv = X[rows, feat[rows]]
            go_left = np.isnan(xv) | (xv < self.threshold[node])
            pos[rows] = np.where(go_left, self.left[node], self.right[node])
        return self.weight[pos]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "weight": self.weight.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["weight"], d["gain"])


def _build_tree(X, g, h, params: GbdtParams) -> Tree | None:
    """Greedy tree for the current gradients; None when the root cannot split."""
    feature, threshold, left, right, weight, gain = [], [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        gain.append(0.0)
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        split = None
        if depth < params.max_depth and idx.size >= 2:
            split = find_best_split(X[idx], g[idx], h[idx],
                                    lam=params.lam, gamma=params.gamma,
                                    min_leaf=params.min_leaf)
        if split is None:
            G = float(np.sum(g[idx]))
            H = float(np.sum(h[idx]))
            weight[node] = params.eta * leaf_weight(G, H, params.lam)
            return node
        col = X[idx, split.feature]
        go_left = np.isnan(col) | (col < split.threshold)
        feature[node] = split.feature
        threshold[node] = split.threshold
        gain[node] = split.gain
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    if feature[0] == -1:  # root never split: discard the tree
        return None
    return Tree(feature, threshold, left, right, weight, gain)


def pairwise_grads(
    margins: np.ndarray,
    y: np.ndarray,
    group_slices: Sequence[tuple[int, int]],
) -> tuple[np.ndarray, np.ndarray]:
    """Lambda gradients/hessians: each positive/negative pair contributes
    sigmoid(s_neg - s_pos) weighted by the |NDCG delta| of swapping the pair,
    with symmetric +/- shares so every group's lambdas sum to zero.
    """
    g = np.zeros_like(margins)
    h = np.zeros_like(margins)
    for start, end in group_slices:
        if end <= start:
            raise ValueError("pairwise group of size 0")
        s = margins[start:end]
        ys = y[start:end]
        pos = np.nonzero(ys == 1)[0]
        neg = np.nonzero(ys == 0)[0]
        if pos.size == 0 or neg.size == 0:
            continue
        m = end - start
        order = np.lexsort((np.arange(m), -s))
        ranks = np.empty(m, dtype=np.int64)
        ranks[order] = np.arange(1, m + 1)
        disc = 1.0 / np.log2(ranks + 1.0)
        ideal = float(np.sum(1.0 / np.log2(np.arange(2, pos.size + 2))))
        rho = sigmoid(s[neg][None, :] - s[pos][:, None])          # (P, N)
        delta = np.abs(disc[pos][:, None] - disc[neg][None, :]) / ideal
        lam = rho * delta
        kappa = rho * (1.0 - rho) * delta
        g[start + pos] -= lam.sum(axis=1)
        g[start + neg] += lam.sum(axis=0)
        h[start + pos] += kappa.sum(axis=1)
        h[start + neg] += kappa.sum(axis=0)
    return g, h


class GbdtEnsemble:
    def __init__(self, params: GbdtParams, trees: list[Tree], n_features: int,
                 base_margin: float | None = None):
        self.params = params
        self.trees = trees
        self.n_features = int(n_features)
        self.base_margin = params.base_margin if base_margin is None else base_margin

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected feature matrix with {self.n_features} columns, got {X.shape}"
            )
        out = np.full(X.shape[0], self.base_margin, dtype=np.float64)
        for tree in self.trees:
            out += tree.predict(X)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.predict_margin(X))

    def staged_margins(self, X: np.ndarray):
        """Margins after each boosting round (used by monotonicity checks)."""
        X = np.asarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.base_margin, dtype=np.float64)
        for tree in self.trees:
            out = out + tree.predict(X)
            yield out


def gbdt_predict(ensemble: GbdtEnsemble, x: np.ndarray) -> float:
    """Margin for a single feature vector (probability = sigmoid(margin))."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != ensemble.n_features:
        raise ValueError(f"expected {ensemble.n_features} features, got shape {x.shape}")
    return float(ensemble.predict_margin(x[None, :])[0])


def gbdt_train(
    X: np.ndarray,
    y: np.ndarray,
    params: GbdtParams,
    groups: Sequence[tuple[int, int]] | None = None,
) -> GbdtEnsemble:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data is empty")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be binary (0/1)")
    if params.objective == "pairwise":
        if groups is None:
            raise ValueError("pairwise objective requires group slices")
        for start, end in groups:
            if end <= start:
                raise ValueError("pairwise group of size 0")

    margins = np.full(X.shape[0], params.base_margin, dtype=np.float64)
    trees: list[Tree] = []
    for _ in range(params.trees):
        if params.objective == "pointwise":
            p = sigmoid(margins)
            g = p - y
            h = p * (1.0 - p)
        else:
            g, h = pairwise_grads(margins, y, groups)
        tree = _build_tree(X, g, h, params)
        if tree is None:
            # Nothing splits at the root; further rounds would repeat identically.
            break
        trees.append(tree)
        margins += tree.predict(X)
    return GbdtEnsemble(params, trees, n_features=X.shape[1])


def feature_importance(ensemble: GbdtEnsemble) -> dict[int, float]:
    """Share of total split gain per feature; empty when the ensemble never split."""
    totals: dict[int, float] = {}
    for tree in ensemble.trees:
        for feat, gain in zip(tree.feature, tree.gain):
            if feat >= 0:
                totals[int(feat)] = totals.get(int(feat), 0.0) + float(gain)
    grand = sum(totals.values())
    if grand <= 0:
        return {}
    return {f: v / grand for f, v in sorted(totals.items())}


ENSEMBLE_KIND = "gbdt_ensemble"


def save_ensemble(ensemble: GbdtEnsemble, path) -> None:
    save_json_model(path, ENSEMBLE_KIND, {
        "params": asdict(ensemble.params),
        "n_features": ensemble.n_features,
        "base_margin": ensemble.base_margin,
        "trees": [t.to_dict() for t in ensemble.trees],
    })


def load_ensemble(path) -> GbdtEnsemble:
    payload = load_json_model(path, ENSEMBLE_KIND)
    params = GbdtParams(**payload["params"])
    trees = [Tree.from_dict(d) for d in payload["trees"]]
    return GbdtEnsemble(params, trees, payload["n_features"], payload["base_margin"])

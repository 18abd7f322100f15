"""Offline evaluation: ranking metrics, classification report, ablation harness."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .gbdt import GbdtParams, gbdt_train
from .records import Template
from .ranker import RankSchema


def _ranks_with_ties(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing the average rank."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i: j + 1]] = avg
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUROC; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs at least one positive and one negative")
    ranks = _ranks_with_ties(scores)
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auprc(scores, labels) -> float:
    """Step-interpolated area under the precision-recall curve."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("AUPRC needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = (labels[order] == 1).astype(np.float64)
    tp = np.cumsum(sorted_labels)
    counts = np.arange(1, len(labels) + 1)
    # Evaluate P/R only at the end of each distinct-score block.
    block_end = np.nonzero(
        np.concatenate([sorted_scores[1:] != sorted_scores[:-1], [True]])
    )[0]
    area = 0.0
    prev_recall = 0.0
    for idx in block_end:
        precision = tp[idx] / counts[idx]
        recall = tp[idx] / n_pos
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def _ranked_relevance(scores, labels) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if len(scores) == 0:
        raise ValueError("empty group")
    order = np.argsort(-scores, kind="mergesort")  # stable: ties keep input order
    return labels[order]


def precision_at_k(scores, labels, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = _ranked_relevance(scores, labels)
    return float(ranked[:k].sum() / k)


def recall_at_k(scores, labels, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = _ranked_relevance(scores, labels)
    total = ranked.sum()
    if total == 0:
        return 0.0
    return float(ranked[:k].sum() / total)


def ndcg_at_k(scores, labels, k: int) -> float:
    """Binary-gain NDCG@k, discount 1/log2(rank+1); 0 when nothing is relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = _ranked_relevance(scores, labels)
    n_rel = int(ranked.sum())
    if n_rel == 0:
        return 0.0
    discounts = 1.0 / np.log2(np.arange(2, len(ranked) + 2))
    dcg = float((ranked[:k] * discounts[:k]).sum())
    ideal = float(discounts[: min(k, n_rel)].sum())
    return dcg / ideal


def macro_at_k(groups, k: int):
    """Mean P@k / R@k / NDCG@k over (scores, labels) groups."""
    if not groups:
        raise ValueError("no groups")
    p = float(np.mean([precision_at_k(s, l, k) for s, l in groups]))
    r = float(np.mean([recall_at_k(s, l, k) for s, l in groups]))
    n = float(np.mean([ndcg_at_k(s, l, k) for s, l in groups]))
    return p, r, n


@dataclass(frozen=True)
class ClassStats:
    precision: float | None
    recall: float | None
    support: int


def classification_report(gold, predicted) -> dict:
    """Overall accuracy plus per-class precision/recall.

    Precision is None for classes never predicted; recall is None for classes
    absent from the gold labels.
    """
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted lengths differ")
    if not gold:
        raise ValueError("empty run")
    correct = sum(1 for g, p in zip(gold, predicted) if g == p)
    per_class: dict[Template, ClassStats] = {}
    for cls in Template:
        tp = sum(1 for g, p in zip(gold, predicted) if g == cls and p == cls)
        n_pred = sum(1 for p in predicted if p == cls)
        n_gold = sum(1 for g in gold if g == cls)
        if n_pred == 0 and n_gold == 0:
            continue
        per_class[cls] = ClassStats(
            precision=(tp / n_pred) if n_pred else None,
            recall=(tp / n_gold) if n_gold else None,
            support=n_gold,
        )
    return {"accuracy": correct / len(gold), "per_class": per_class}


FEATURE_GROUPS = ("job", "question", "interaction")


def ablation_run(
    drop_groups,
    train: tuple[np.ndarray, np.ndarray, list[tuple[int, int]]],
    test: tuple[np.ndarray, np.ndarray, list[tuple[int, int]]],
    params: GbdtParams,
    schema: RankSchema,
) -> dict:
    """Retrain with the given feature groups removed and report ranking metrics."""
    drop = set(drop_groups)
    unknown = drop - set(FEATURE_GROUPS)
    if unknown:
        raise ValueError(f"unknown feature groups: {sorted(unknown)}")
    keep = [g for g in FEATURE_GROUPS if g not in drop]
    if not keep:
        raise ValueError("cannot drop every feature group")
    cols = schema.group_columns(keep)

    X_train, y_train, g_train = train
    X_test, y_test, g_test = test
    ensemble = gbdt_train(X_train[:, cols], y_train, params, groups=g_train)
    scores = ensemble.predict_proba(X_test[:, cols])

    groups = [(scores[a:b], y_test[a:b]) for a, b in g_test]
    metrics = {
        "dropped": sorted(drop),
        "auroc": auroc(scores, y_test),
        "auprc": auprc(scores, y_test),
    }
    for k in (1, 3):
        p, r, n = macro_at_k(groups, k)
        metrics[f"precision@{k}"] = p
        metrics[f"recall@{k}"] = r
        metrics[f"ndcg@{k}"] = n
    return metrics


def format_metric_table(rows: list[dict], columns: list[str]) -> str:
    """Aligned-column text rendering of metric records."""
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        if isinstance(v, (list, tuple)):
            return ",".join(str(x) for x in v) or "-"
        return str(v)

    cells = [[fmt(row.get(c, "")) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def write_metric_records(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")

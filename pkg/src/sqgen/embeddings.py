"""Local embedding pretraining: PPMI co-occurrence factorization.

Token vectors come from the truncated SVD of the positive-PMI co-occurrence
matrix over a (large, unlabeled) sentence sample. Tokens that share contexts,
like tool names appearing in the same requirement frames and lists, end up
clustered, which is what lets the sentence classifier generalize to entities
it never saw a label for. Fully deterministic.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .textproc import EmbeddingTable, tokenize


def ppmi_svd_embeddings(
    sentences: list[str],
    dim: int = 64,
    window: int = 3,
    min_count: int = 2,
    buckets: int = 4096,
    smoothing: float = 0.75,
    seed: int = 0,
) -> EmbeddingTable:
    """Pretrain an embedding table from raw sentences.

    PPMI(w, c) = max(0, log(P(w,c) / (P(w) P_s(c)))) with context-distribution
    smoothing P_s(c) proportional to count(c)^smoothing; vectors are
    U_k sqrt(S_k) from the dense SVD. OOV hash-bucket rows are random
    (seeded) like the random-init table.
    """
    token_lists = [tokenize(s) for s in sentences]
    counts = Counter(t for toks in token_lists for t in toks)
    vocab = sorted(t for t, c in counts.items() if c >= min_count)
    if not vocab:
        raise ValueError("no tokens meet min_count; corpus too small")
    index = {t: i for i, t in enumerate(vocab)}
    v = len(vocab)

    cooc = np.zeros((v, v))
    for toks in token_lists:
        ids = [index.get(t, -1) for t in toks]
        for i, wi in enumerate(ids):
            if wi < 0:
                continue
            lo = max(0, i - window)
            hi = min(len(ids), i + window + 1)
            for j in range(lo, hi):
                wj = ids[j]
                if j == i or wj < 0:
                    continue
                cooc[wi, wj] += 1.0

    total = cooc.sum()
    if total == 0:
        raise ValueError("no co-occurrences; need sentences with >= 2 tokens")
    word_freq = cooc.sum(axis=1)
    ctx_freq = cooc.sum(axis=0) ** smoothing
    ctx_freq /= ctx_freq.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log((cooc / total) / np.outer(word_freq / total, ctx_freq))
    ppmi = np.where(np.isfinite(pmi) & (pmi > 0), pmi, 0.0)

    u, s, _ = np.linalg.svd(ppmi, full_matrices=False)
    k = min(dim, len(s))
    vectors = u[:, :k] * np.sqrt(s[:k])
    if k < dim:
        vectors = np.pad(vectors, ((0, 0), (0, dim - k)))
    # Keep vector norms in the same ballpark as the random init so the
    # downstream encoder sees comparable scales.
    scale = np.sqrt(1.0 / 3.0) / max(np.abs(vectors).mean(), 1e-12)
    vectors = vectors * scale / np.sqrt(dim)

    rng = np.random.default_rng(seed)
    oov = rng.uniform(-1.0 / np.sqrt(dim), 1.0 / np.sqrt(dim), size=(buckets, dim))
    matrix = np.vstack([vectors, oov])
    return EmbeddingTable(vocab, matrix, buckets)

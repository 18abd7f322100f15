"""Template parameter extraction.

Surface-form mentions from the taxonomy matcher are filtered two ways: the
template/entity-type compatibility table, and a logistic scorer over contextual
features that rejects false-positive mentions ("bachelor" in a sentence about
party supplies is not a degree).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .modelio import load_json_model, save_json_model
from .nn import AdamState, adam_step, sigmoid
from .records import EntityType, LabeledSentence, Template
from .textproc import EmbeddingTable, MentionSpan, SurfaceMatcher, Taxonomy, fnv1a64, tokenize

# Template -> required parameter entity type (None: the question takes no parameter).
COMPATIBILITY: dict[Template, EntityType | None] = {
    Template.WorkAuth: None,
    Template.Sponsorship: None,
    Template.Education: EntityType.Degree,
    Template.Language: EntityType.SpokenLanguage,
    Template.Credential: EntityType.Credential,
    Template.Tools: EntityType.ToolSkill,
}

NGRAM_SLOTS = 256
CONTEXT_WINDOW = 3
FEATURE_DIM = 1 + 3 + NGRAM_SLOTS + 1  # log-freq, pos one-hot, n-gram slots, cosine

_FUNCTION_WORDS = frozenset(
    """a an the and or of in on at to for with without we you our your is are be been
    was were will shall must may can could should would have has had do does did not
    no this that these those it its they them their as by from into than then if but
    so such per all any each every more most other some only own same both very s t
    d ll m o re ve y ain don aren couldn didn doesn hadn hasn haven isn mustn needn
    shan shouldn wasn weren won wouldn""".split()
)

_VERB_SUFFIXES = ("ing", "ed", "ize", "ise", "ify", "ate")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ship", "ism", "er", "or",
                  "ist", "ware", "base", "cy", "age")


def coarse_pos(token: str) -> str:
    """Lexicon + suffix heuristic: 'noun', 'verb', or 'other'."""
    if token in _FUNCTION_WORDS or not token[:1].isalpha():
        return "other"
    if token.endswith(_VERB_SUFFIXES) and not token.endswith(_NOUN_SUFFIXES):
        return "verb"
    return "noun"


_POS_INDEX = {"noun": 0, "verb": 1, "other": 2}


def mention_features(
    tokens,
    span: MentionSpan | tuple[int, int],
    embeddings: EmbeddingTable,
    freq_table: dict[str, int],
) -> np.ndarray:
    """Feature vector for one mention occurrence inside a tokenized sentence."""
    start, end = (span.start, span.end) if isinstance(span, MentionSpan) else span
    if not (0 <= start < end <= len(tokens)):
        raise ValueError(f"span ({start}, {end}) out of range for {len(tokens)} tokens")

    x = np.zeros(FEATURE_DIM)
    mention_tokens = list(tokens[start:end])
    surface = " ".join(mention_tokens)
    x[0] = np.log1p(freq_table.get(surface, 0))
    x[1 + _POS_INDEX[coarse_pos(mention_tokens[-1])]] = 1.0

    before = list(tokens[max(0, start - CONTEXT_WINDOW): start])
    after = list(tokens[end: end + CONTEXT_WINDOW])
    grams = before + after
    grams += [f"{a} {b}" for a, b in zip(before, before[1:])]
    grams += [f"{a} {b}" for a, b in zip(after, after[1:])]
    for gram in grams:
        x[4 + fnv1a64(gram) % NGRAM_SLOTS] = 1.0

    context_tokens = list(tokens[:start]) + list(tokens[end:])
    mention_vec = embeddings.mean_vector(mention_tokens)
    context_vec = embeddings.mean_vector(context_tokens)
    x[-1] = _cosine(mention_vec, context_vec)
    return x


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


@dataclass
class MentionScorer:
    weights: np.ndarray
    bias: float
    threshold: float = 0.5
    freq_table: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (FEATURE_DIM,):
            raise ValueError(
                f"weight vector must have length {FEATURE_DIM}, got {self.weights.shape}"
            )


def score_mention(scorer: MentionScorer, features: np.ndarray) -> float:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != scorer.weights.shape:
        raise ValueError(
            f"feature length {features.shape} does not match scorer schema "
            f"{scorer.weights.shape}"
        )
    return float(sigmoid(features @ scorer.weights + scorer.bias))


class ParameterExtractor:
    """Bundles the matcher, scorer, and embeddings behind one extract call."""

    def __init__(self, taxonomy: Taxonomy, matcher: SurfaceMatcher,
                 scorer: MentionScorer, embeddings: EmbeddingTable):
        self.taxonomy = taxonomy
        self.matcher = matcher
        self.scorer = scorer
        self.embeddings = embeddings

    def extract_scored(self, tokens, template: Template) -> list[tuple[str, float]]:
        """(entity id, confidence) pairs in first-occurrence order, deduplicated.

        Confidence is the max scorer probability over the entity's qualifying
        mentions. Parameter-free templates return [].
        """
        if template == Template.NULL:
            raise ValueError("NULL template has no parameters")
        required = COMPATIBILITY[template]
        if required is None:
            return []
        order: list[str] = []
        best: dict[str, float] = {}
        for span in self.matcher.find(tokens):
            entity = self.taxonomy.by_id[span.entity_id]
            if entity.etype != required:
                continue
            feats = mention_features(tokens, span, self.embeddings, self.scorer.freq_table)
            prob = score_mention(self.scorer, feats)
            if prob < self.scorer.threshold:
                continue
            if span.entity_id not in best:
                order.append(span.entity_id)
                best[span.entity_id] = prob
            else:
                best[span.entity_id] = max(best[span.entity_id], prob)
        return [(eid, best[eid]) for eid in order]


def extract_parameters(sentence, template: Template, extractor: ParameterExtractor) -> list[str]:
    """Entity ids usable as parameters of `template` in `sentence`."""
    tokens = sentence if isinstance(sentence, (list, tuple)) else tokenize(str(sentence))
    return [eid for eid, _ in extractor.extract_scored(tokens, template)]


def build_mention_training_set(
    sentences: list[LabeledSentence],
    taxonomy: Taxonomy,
    matcher: SurfaceMatcher,
    embeddings: EmbeddingTable,
) -> tuple[np.ndarray, np.ndarray, dict[str, int]]:
    """Mention feature matrix + labels from labeled sentences.

    A mention is positive when its entity type matches the sentence's gold
    template requirement; mentions in NULL or incompatible sentences are
    negatives. The returned frequency table counts mention surfaces over the
    whole set and is the one the scorer should keep for inference.
    """
    occurrences = []
    freq_table: dict[str, int] = {}
    for sent in sentences:
        tokens = tokenize(sent.text)
        required = COMPATIBILITY.get(sent.template)
        for span in matcher.find(tokens):
            surface = " ".join(tokens[span.start: span.end])
            freq_table[surface] = freq_table.get(surface, 0) + 1
            entity = taxonomy.by_id[span.entity_id]
            label = 1.0 if (required is not None and entity.etype == required) else 0.0
            occurrences.append((tokens, span, label))
    if not occurrences:
        raise ValueError("no taxonomy mentions found in the given sentences")
    X = np.stack([
        mention_features(tokens, span, embeddings, freq_table)
        for tokens, span, _ in occurrences
    ])
    y = np.array([label for _, _, label in occurrences])
    return X, y, freq_table


def train_mention_scorer(
    sentences: list[LabeledSentence],
    taxonomy: Taxonomy,
    matcher: SurfaceMatcher,
    embeddings: EmbeddingTable,
    threshold: float = 0.5,
    lr: float = 0.05,
    epochs: int = 300,
    seed: int = 0,
) -> MentionScorer:
    """Logistic regression over mention features, trained with Adam."""
    X, y, freq_table = build_mention_training_set(sentences, taxonomy, matcher, embeddings)
    rng = np.random.default_rng(seed)
    n = len(y)
    params = {"w": np.zeros(FEATURE_DIM), "b": np.zeros(1)}
    state = AdamState.for_params(params)
    batch = 256
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            idx = perm[start: start + batch]
            xb, yb = X[idx], y[idx]
            p = sigmoid(xb @ params["w"] + params["b"][0])
            err = (p - yb) / len(idx)
            adam_step(params, {"w": xb.T @ err, "b": np.array([err.sum()])}, state, lr)
    return MentionScorer(params["w"], float(params["b"][0]), threshold, freq_table)


SCORER_KIND = "mention_scorer"


def save_mention_scorer(scorer: MentionScorer, path) -> None:
    save_json_model(path, SCORER_KIND, {
        "weights": scorer.weights.tolist(),
        "bias": scorer.bias,
        "threshold": scorer.threshold,
        "freq_table": scorer.freq_table,
    })


def load_mention_scorer(path) -> MentionScorer:
    payload = load_json_model(path, SCORER_KIND)
    return MentionScorer(
        np.array(payload["weights"]),
        payload["bias"],
        payload["threshold"],
        dict(payload["freq_table"]),
    )

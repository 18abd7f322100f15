"""Text processing: sentence splitting, tokenization, embeddings, surface matching.

Job postings are list-heavy and noisy, so the splitter treats newlines and
sentence punctuation followed by whitespace as boundaries, and the tokenizer
keeps the intra-token punctuation that matters for skills ("c++", "f#",
"node.js", "bachelor's") while dropping everything else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .records import EntityType

# Maximal alphanumeric runs; '+' '#' '.' ''' glue runs together when flanked by
# alphanumerics, and '+'/'#' may also trail a run ("c++", "f#").
_TOKEN_RE = re.compile(r"[^\W_]+(?:['.#+][^\W_]+|[+#]+)*")

_BOUNDARY_CHARS = frozenset(".!?;")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Sentence:
    job_id: str
    index: int
    text: str
    tokens: tuple[str, ...]


def split_sentences(body: str, job_id: str = "") -> list[Sentence]:
    """Split a posting body into sentences.

    Boundaries: newlines, and '.', '!', '?', ';' when followed by whitespace
    (the punctuation stays with its sentence). Leading/trailing whitespace is
    stripped; empty segments are dropped.
    """
    segments: list[str] = []
    buf: list[str] = []

    def flush():
        text = "".join(buf).strip()
        buf.clear()
        if text:
            segments.append(text)

    n = len(body)
    for i, ch in enumerate(body):
        if ch == "\n":
            flush()
            continue
        buf.append(ch)
        if ch in _BOUNDARY_CHARS and i + 1 < n and body[i + 1].isspace():
            flush()
    flush()

    return [
        Sentence(job_id=job_id, index=i, text=text, tokens=tuple(tokenize(text)))
        for i, text in enumerate(segments)
    ]


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: str | bytes) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of `data`."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _FNV_MASK
    return h


class EmbeddingTable:
    """Token embeddings: a dense in-vocabulary block plus hash buckets for OOV tokens.

    Rows live in one (V + B, d) matrix so training can scatter gradients into a
    single array; OOV tokens map to row V + fnv1a64(token) % B, a pure function
    of the token bytes.
    """

    hash_name = "fnv1a64"

    def __init__(self, vocab: list[str], matrix: np.ndarray, buckets: int):
        if matrix.shape[0] != len(vocab) + buckets:
            raise ValueError("matrix rows must equal len(vocab) + buckets")
        self.vocab = list(vocab)
        self.index = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise ValueError("vocabulary contains duplicate tokens")
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self.buckets = int(buckets)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def random(cls, vocab, dim: int = 64, buckets: int = 4096, seed: int = 0,
               rng: np.random.Generator | None = None) -> "EmbeddingTable":
        vocab = sorted(set(vocab))
        if rng is None:
            rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(dim)
        matrix = rng.uniform(-scale, scale, size=(len(vocab) + buckets, dim))
        return cls(vocab, matrix, buckets)

    def row_index(self, token: str) -> int:
        idx = self.index.get(token)
        if idx is not None:
            return idx
        return len(self.vocab) + fnv1a64(token) % self.buckets

    def lookup(self, token: str) -> np.ndarray:
        return self.matrix[self.row_index(token)]

    def mean_vector(self, tokens) -> np.ndarray:
        """Mean embedding of a token sequence; zero vector for an empty sequence."""
        if not tokens:
            return np.zeros(self.dim)
        rows = self.matrix[[self.row_index(t) for t in tokens]]
        return rows.mean(axis=0)


@dataclass(frozen=True)
class TaxonomyEntity:
    id: str
    etype: EntityType
    name: str
    surfaces: tuple[tuple[str, ...], ...]  # tokenized, lower-cased


@dataclass(frozen=True)
class Taxonomy:
    entities: tuple[TaxonomyEntity, ...]
    by_id: dict[str, TaxonomyEntity] = field(init=False, repr=False)

    def __post_init__(self):
        by_id = {}
        for e in self.entities:
            if e.id in by_id:
                raise ValueError(f"duplicate entity id: {e.id}")
            if not e.surfaces or any(len(s) == 0 for s in e.surfaces):
                raise ValueError(f"entity {e.id} has an empty surface form")
            by_id[e.id] = e
        object.__setattr__(self, "by_id", by_id)

    def of_type(self, etype: EntityType) -> list[TaxonomyEntity]:
        return [e for e in self.entities if e.etype == etype]


def load_taxonomy(path) -> Taxonomy:
    """Parse the taxonomy file: one entity per line,
    ``id<TAB>type<TAB>canonical name<TAB>surface|surface|...``.
    """
    entities = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            eid, etype_name, name, surfaces_raw = parts
            try:
                etype = EntityType.from_name(etype_name)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            surfaces = tuple(
                tuple(tokenize(s)) for s in surfaces_raw.split("|") if s.strip()
            )
            if not surfaces:
                raise ValueError(f"{path}:{lineno}: entity {eid} has no surface forms")
            entities.append(TaxonomyEntity(eid, etype, name, surfaces))
    return Taxonomy(tuple(entities))


def write_taxonomy(taxonomy: Taxonomy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in taxonomy.entities:
            surfaces = "|".join(" ".join(s) for s in e.surfaces)
            fh.write(f"{e.id}\t{e.etype.name}\t{e.name}\t{surfaces}\n")


@dataclass(frozen=True)
class MentionSpan:
    entity_id: str
    start: int
    end: int  # exclusive


_TERMINAL = "\x00"


class SurfaceMatcher:
    """Leftmost-longest, non-overlapping surface-form matcher over token sequences.

    A token trie over all surface forms; at each position the longest match wins
    and the scan resumes past it. When several entities share the winning
    surface, one span per entity is emitted in sorted-id order.
    """

    def __init__(self, taxonomy: Taxonomy):
        root: dict = {}
        for ent in taxonomy.entities:
            for surf in ent.surfaces:
                node = root
                for tok in surf:
                    node = node.setdefault(tok, {})
                node.setdefault(_TERMINAL, set()).add(ent.id)
        self._root = root

    def find(self, tokens) -> list[MentionSpan]:
        out: list[MentionSpan] = []
        n = len(tokens)
        i = 0
        while i < n:
            node = self._root
            best_end = -1
            best_ids: set[str] | None = None
            j = i
            while j < n:
                node = node.get(tokens[j])
                if node is None:
                    break
                j += 1
                ids = node.get(_TERMINAL)
                if ids:
                    best_end = j
                    best_ids = ids
            if best_ids is None:
                i += 1
            else:
                for eid in sorted(best_ids):
                    out.append(MentionSpan(eid, i, best_end))
                i = best_end
        return out


def build_matcher(taxonomy: Taxonomy) -> SurfaceMatcher:
    return SurfaceMatcher(taxonomy)


def match_mentions(matcher: SurfaceMatcher, tokens) -> list[MentionSpan]:
    return matcher.find(tokens)

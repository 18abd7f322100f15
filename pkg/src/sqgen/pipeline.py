"""End-to-end orchestration: split -> classify -> extract -> rank.

One template per sentence (the classifier's argmax), parameters expanded per
sentence, candidates deduplicated keeping the highest classifier confidence,
then ranked by the boosted-tree scorer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gbdt import GbdtEnsemble, load_ensemble, save_ensemble
from .params import (
    COMPATIBILITY,
    MentionScorer,
    ParameterExtractor,
    load_mention_scorer,
    save_mention_scorer,
)
from .ranker import (
    PmiTable,
    QuestionFeatures,
    RankSchema,
    RankedQuestion,
    load_pmi_table,
    load_schema,
    rank_questions,
    save_pmi_table,
    save_schema,
)
from .records import FeedbackTriple, JobPosting, Template
from .tc import DanTcModel, dan_encode, load_tc_model, save_tc_model, tc_forward, tc_predict
from .textproc import SurfaceMatcher, Taxonomy, load_taxonomy, split_sentences, write_taxonomy
from .modelio import load_json_model, save_json_model


@dataclass
class SqgModels:
    tc_model: DanTcModel
    taxonomy: Taxonomy
    extractor: ParameterExtractor
    ensemble: GbdtEnsemble
    pmi_table: PmiTable
    schema: RankSchema
    k: int = 5
    null_margin: float = 0.0


def collect_candidates(job: JobPosting, models: SqgModels) -> dict[tuple, QuestionFeatures]:
    """Candidate questions keyed by (template, parameter).

    Each sentence contributes its argmax template (skipped when NULL or when
    the top-vs-NULL probability margin is below the configured margin); the
    dedup rule keeps the highest classifier confidence per candidate.
    """
    candidates: dict[tuple, QuestionFeatures] = {}
    for sentence in split_sentences(job.body, job.id):
        if not sentence.tokens:
            continue
        probs = tc_forward(models.tc_model, dan_encode(models.tc_model, list(sentence.tokens)))
        template = Template(int(np.argmax(probs)))
        if template == Template.NULL:
            continue
        if probs[template] - probs[Template.NULL] < models.null_margin:
            continue
        tc_score = float(probs[template])
        if COMPATIBILITY[template] is None:
            found = [(None, 1.0)]
        else:
            found = models.extractor.extract_scored(list(sentence.tokens), template)
        for param, linker_score in found:
            key = (template, param)
            q = QuestionFeatures(template, param, tc_score, 1, float(linker_score))
            existing = candidates.get(key)
            if existing is None or q.tc_score > existing.tc_score:
                candidates[key] = q
    return candidates


def generate_questions(job: JobPosting, models: SqgModels) -> list[RankedQuestion]:
    candidates = list(collect_candidates(job, models).values())
    return rank_questions(job, candidates, models.ensemble, models.pmi_table,
                          models.schema, models.k)


def pipeline_score_provider(models: SqgModels):
    """Question-side scores for ranker training, recomputed from the pipeline.

    Feedback triples the current models would not have suggested fall back to
    (0, rank 7, 0): the model never proposed them, and the features say so.
    """
    cache: dict[str, dict[tuple, QuestionFeatures]] = {}

    def provider(job: JobPosting, triple: FeedbackTriple):
        if job.id not in cache:
            cache[job.id] = collect_candidates(job, models)
        q = cache[job.id].get((triple.template, triple.parameter))
        if q is None:
            return 0.0, 7, 0.0
        return q.tc_score, q.tc_rank, q.linker_score

    return provider


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    p50_ms: float
    p95_ms: float
    samples: int


def measure_latency(models: SqgModels, sentences, repetitions: int = 1) -> LatencyStats:
    """Wall-clock per-sentence classifier inference on the calling thread."""
    if not sentences:
        raise ValueError("need at least one sentence to measure")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    token_lists = [
        list(s.tokens) if hasattr(s, "tokens") else list(s) for s in sentences
    ]
    samples = []
    for _ in range(repetitions):
        for tokens in token_lists:
            t0 = time.perf_counter()
            tc_predict(models.tc_model, tokens)
            samples.append((time.perf_counter() - t0) * 1000.0)
    arr = np.asarray(samples)
    return LatencyStats(
        mean_ms=float(arr.mean()),
        p50_ms=float(np.percentile(arr, 50)),
        p95_ms=float(np.percentile(arr, 95)),
        samples=len(samples),
    )


BUNDLE_KIND = "sqg_bundle"


def save_bundle(models: SqgModels, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_tc_model(models.tc_model, out / "tc.npz")
    save_mention_scorer(models.extractor.scorer, out / "scorer.json")
    save_ensemble(models.ensemble, out / "ranker.json")
    save_pmi_table(models.pmi_table, out / "pmi.json")
    save_schema(models.schema, out / "schema.json")
    write_taxonomy(models.taxonomy, out / "taxonomy.tsv")
    save_json_model(out / "bundle.json", BUNDLE_KIND,
                    {"k": models.k, "null_margin": models.null_margin})


def load_bundle(bundle_dir) -> SqgModels:
    path = Path(bundle_dir)
    config = load_json_model(path / "bundle.json", BUNDLE_KIND)
    tc_model = load_tc_model(path / "tc.npz")
    taxonomy = load_taxonomy(path / "taxonomy.tsv")
    scorer = load_mention_scorer(path / "scorer.json")
    extractor = ParameterExtractor(taxonomy, SurfaceMatcher(taxonomy), scorer, tc_model.emb)
    return SqgModels(
        tc_model=tc_model,
        taxonomy=taxonomy,
        extractor=extractor,
        ensemble=load_ensemble(path / "ranker.json"),
        pmi_table=load_pmi_table(path / "pmi.json"),
        schema=load_schema(path / "schema.json"),
        k=config["k"],
        null_margin=config["null_margin"],
    )

"""Question ranking: PMI interaction features, feature assembly, top-k ordering.

A candidate question for a job is scored by the boosted-tree model over three
feature groups: one-hot job attributes, question-side features (template,
hashed parameter, confidence scores), and a PMI block measuring how strongly
each (job attribute value, question attribute value) pair co-occurred in the
accepted-feedback history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gbdt import GbdtEnsemble
from .modelio import load_json_model, save_json_model
from .nn import sigmoid
from .records import FeedbackTriple, JobPosting, ScreeningQuestion, Template
from .textproc import fnv1a64

PMI_CLAMP = 20.0
_NO_PARAM = "<none>"

# Question-side categorical features entering the PMI block.
QUESTION_CATEGORICALS = ("template", "parameter")


class SchemaError(KeyError):
    pass


@dataclass(frozen=True)
class QuestionFeatures:
    """The five question-side features of one candidate."""

    template: Template
    parameter: str | None
    tc_score: float
    tc_rank: int
    linker_score: float

    def __post_init__(self):
        if not (0.0 <= self.tc_score <= 1.0) or not (0.0 <= self.linker_score <= 1.0):
            raise ValueError("confidence scores must lie in [0, 1]")

    def question(self) -> ScreeningQuestion:
        return ScreeningQuestion(self.template, self.parameter)

    def param_value(self) -> str:
        return self.parameter if self.parameter is not None else _NO_PARAM


@dataclass(frozen=True)
class RankedQuestion:
    question: ScreeningQuestion
    score: float


class PmiTable:
    """Count statistics over accepted feedback, queried as smoothed PMI values.

    PMI(a; b) = log[(joint+a)/(N+aV)] - log[(c_a+a)/(N+aV_a)] - log[(c_b+a)/(N+aV_b)],
    evaluated as a single log of a product ratio (so exact independence gives
    exactly 0 at alpha=0) and clamped to [-20, 20]. Smoothing supports are the
    distinct value counts observed at build time, floored at 1.
    """

    def __init__(self, alpha: float = 0.5):
        self.alpha = float(alpha)
        self.n = 0
        self.job_marginals: dict[str, dict[str, int]] = {}
        self.q_marginals: dict[str, dict[str, int]] = {}
        self.joints: dict[tuple[str, str], dict[tuple[str, str], int]] = {}

    def _add(self, job_values: dict[str, str], q_values: dict[str, str]) -> None:
        self.n += 1
        for name, value in job_values.items():
            bucket = self.job_marginals.setdefault(name, {})
            bucket[value] = bucket.get(value, 0) + 1
        for name, value in q_values.items():
            bucket = self.q_marginals.setdefault(name, {})
            bucket[value] = bucket.get(value, 0) + 1
        for jname, jvalue in job_values.items():
            for qname, qvalue in q_values.items():
                bucket = self.joints.setdefault((jname, qname), {})
                key = (jvalue, qvalue)
                bucket[key] = bucket.get(key, 0) + 1

    def _support(self, counts: dict) -> int:
        return max(1, len(counts))

    def value(self, jname: str, jvalue: str, qname: str, qvalue: str) -> float:
        alpha = self.alpha
        n = self.n
        jm = self.job_marginals.get(jname, {})
        qm = self.q_marginals.get(qname, {})
        joint = self.joints.get((jname, qname), {})
        c_joint = joint.get((jvalue, qvalue), 0)
        c_j = jm.get(jvalue, 0)
        c_q = qm.get(qvalue, 0)
        num = (c_joint + alpha) * (n + alpha * self._support(jm)) * (n + alpha * self._support(qm))
        den = (n + alpha * self._support(joint)) * (c_j + alpha) * (c_q + alpha)
        if num == 0.0 and den == 0.0:
            return 0.0
        if num == 0.0:
            return -PMI_CLAMP
        if den == 0.0:
            return PMI_CLAMP
        return float(min(PMI_CLAMP, max(-PMI_CLAMP, math.log(num / den))))


def build_pmi_table(
    triples: list[FeedbackTriple],
    jobs: dict[str, JobPosting],
    job_feature_names: list[str],
    alpha: float = 0.5,
) -> PmiTable:
    """Accumulate PMI counts from accepted triples only."""
    table = PmiTable(alpha=alpha)
    for triple in triples:
        if not triple.accepted:
            continue
        job = jobs.get(triple.job_id)
        if job is None:
            raise KeyError(f"feedback references unknown job id {triple.job_id!r}")
        job_values = {}
        for name in job_feature_names:
            if name not in job.job_features:
                raise SchemaError(name)
            job_values[name] = job.job_features[name]
        q_values = {
            "template": triple.template.name,
            "parameter": triple.parameter if triple.parameter is not None else _NO_PARAM,
        }
        table._add(job_values, q_values)
    return table


def pmi(table: PmiTable, name_a: str, value_a: str, name_b: str, value_b: str) -> float:
    """Symmetric PMI lookup; argument order (job side vs question side) is free."""
    a_is_q = name_a in QUESTION_CATEGORICALS
    b_is_q = name_b in QUESTION_CATEGORICALS
    if a_is_q == b_is_q:
        raise ValueError("pmi needs one job-side and one question-side feature")
    if a_is_q:
        return table.value(name_b, value_b, name_a, value_a)
    return table.value(name_a, value_a, name_b, value_b)


@dataclass(frozen=True)
class RankSchema:
    """Fixed feature layout shared by ranker training and scoring."""

    job_features: tuple[tuple[str, tuple[str, ...]], ...]
    param_buckets: int = 16

    @classmethod
    def from_mapping(cls, schema: dict[str, list[str]], param_buckets: int = 16) -> "RankSchema":
        return cls(
            tuple((name, tuple(values)) for name, values in schema.items()),
            param_buckets=param_buckets,
        )

    @property
    def job_feature_names(self) -> list[str]:
        return [name for name, _ in self.job_features]

    @property
    def n_templates(self) -> int:
        return len(Template) - 1  # non-NULL templates

    @property
    def job_arity(self) -> int:
        return sum(len(values) for _, values in self.job_features)

    @property
    def question_arity(self) -> int:
        return self.n_templates + self.param_buckets + 3

    @property
    def interaction_arity(self) -> int:
        return len(QUESTION_CATEGORICALS) * len(self.job_features)

    @property
    def arity(self) -> int:
        return self.job_arity + self.question_arity + self.interaction_arity

    def group_slices(self) -> dict[str, slice]:
        a, b = self.job_arity, self.job_arity + self.question_arity
        return {
            "job": slice(0, a),
            "question": slice(a, b),
            "interaction": slice(b, b + self.interaction_arity),
        }

    def group_columns(self, keep_groups) -> np.ndarray:
        slices = self.group_slices()
        cols: list[int] = []
        for name in ("job", "question", "interaction"):
            if name in keep_groups:
                cols.extend(range(slices[name].start, slices[name].stop))
        return np.asarray(cols, dtype=np.int64)

    def to_payload(self) -> dict:
        return {
            "job_features": [[name, list(values)] for name, values in self.job_features],
            "param_buckets": self.param_buckets,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "RankSchema":
        return cls(
            tuple((name, tuple(values)) for name, values in payload["job_features"]),
            param_buckets=payload["param_buckets"],
        )


def assemble_features(
    job: JobPosting,
    q: QuestionFeatures,
    pmi_table: PmiTable,
    schema: RankSchema,
) -> np.ndarray:
    """Deterministic feature vector of length schema.arity for one candidate."""
    x = np.zeros(schema.arity)
    offset = 0
    for name, values in schema.job_features:
        if name not in job.job_features:
            raise SchemaError(name)
        value = job.job_features[name]
        for i, v in enumerate(values):
            if v == value:
                x[offset + i] = 1.0
                break
        offset += len(values)

    x[offset + int(q.template) - 1] = 1.0
    offset += schema.n_templates
    if q.parameter is not None:
        x[offset + fnv1a64(q.parameter) % schema.param_buckets] = 1.0
    offset += schema.param_buckets
    x[offset] = q.tc_score
    x[offset + 1] = float(q.tc_rank)
    x[offset + 2] = q.linker_score
    offset += 3

    q_values = {"template": q.template.name, "parameter": q.param_value()}
    for qname in QUESTION_CATEGORICALS:
        for jname, _ in schema.job_features:
            x[offset] = pmi_table.value(jname, job.job_features[jname], qname, q_values[qname])
            offset += 1
    return x


def rank_questions(
    job: JobPosting,
    candidates: list[QuestionFeatures],
    ensemble: GbdtEnsemble,
    pmi_table: PmiTable,
    schema: RankSchema,
    k: int,
) -> list[RankedQuestion]:
    """Top-k candidates by sigmoid(margin), ties broken by (template, parameter)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not candidates or k == 0:
        return []
    X = np.stack([assemble_features(job, q, pmi_table, schema) for q in candidates])
    scores = sigmoid(ensemble.predict_margin(X))
    ordered = sorted(
        zip(candidates, scores),
        key=lambda cs: (-cs[1], int(cs[0].template), cs[0].parameter or ""),
    )
    return [RankedQuestion(q.question(), float(s)) for q, s in ordered[:k]]


def build_ranking_dataset(
    triples: list[FeedbackTriple],
    jobs: dict[str, JobPosting],
    pmi_table: PmiTable,
    schema: RankSchema,
    score_provider,
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """Feature matrix, binary labels, and per-job group slices from feedback.

    ``score_provider(job, triple) -> (tc_score, tc_rank, linker_score)`` fills
    the question-side confidence features. Triples are grouped by job id in
    sorted order; rows within a group keep file order.
    """
    by_job: dict[str, list[FeedbackTriple]] = {}
    for t in triples:
        if t.job_id not in jobs:
            raise KeyError(f"feedback references unknown job id {t.job_id!r}")
        by_job.setdefault(t.job_id, []).append(t)

    rows, labels, slices = [], [], []
    cursor = 0
    for job_id in sorted(by_job):
        job = jobs[job_id]
        group = by_job[job_id]
        for t in group:
            tc_score, tc_rank, linker_score = score_provider(job, t)
            q = QuestionFeatures(t.template, t.parameter, tc_score, tc_rank, linker_score)
            rows.append(assemble_features(job, q, pmi_table, schema))
            labels.append(1.0 if t.accepted else 0.0)
        slices.append((cursor, cursor + len(group)))
        cursor += len(group)
    if not rows:
        raise ValueError("no feedback triples to build a dataset from")
    return np.stack(rows), np.array(labels), slices


SCHEMA_KIND = "rank_schema"
PMI_KIND = "pmi_table"


def save_schema(schema: RankSchema, path) -> None:
    save_json_model(path, SCHEMA_KIND, schema.to_payload())


def load_schema(path) -> RankSchema:
    return RankSchema.from_payload(load_json_model(path, SCHEMA_KIND))


def save_pmi_table(table: PmiTable, path) -> None:
    save_json_model(path, PMI_KIND, {
        "alpha": table.alpha,
        "n": table.n,
        "job_marginals": table.job_marginals,
        "q_marginals": table.q_marginals,
        "joints": {
            f"{jname}\t{qname}": [[jv, qv, c] for (jv, qv), c in bucket.items()]
            for (jname, qname), bucket in table.joints.items()
        },
    })


def load_pmi_table(path) -> PmiTable:
    payload = load_json_model(path, PMI_KIND)
    table = PmiTable(alpha=payload["alpha"])
    table.n = payload["n"]
    table.job_marginals = {k: dict(v) for k, v in payload["job_marginals"].items()}
    table.q_marginals = {k: dict(v) for k, v in payload["q_marginals"].items()}
    table.joints = {}
    for key, items in payload["joints"].items():
        jname, qname = key.split("\t")
        table.joints[(jname, qname)] = {(jv, qv): c for jv, qv, c in items}
    return table

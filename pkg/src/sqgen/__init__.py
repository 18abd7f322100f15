"""Screening-question generation from job-posting text.

Pipeline: split the posting into sentences, classify each sentence's intent
with a deep-averaging network, extract taxonomy-entity parameters with a
confidence-scored surface matcher, and rank the resulting (template, parameter)
candidates with a gradient-boosted tree model trained on poster feedback.
"""

from .records import (
    EntityType,
    FeedbackTriple,
    JobPosting,
    LabeledSentence,
    PARAMETRIC_TEMPLATES,
    ScreeningQuestion,
    Template,
    dedup_feedback,
)
from .textproc import (
    EmbeddingTable,
    MentionSpan,
    Sentence,
    SurfaceMatcher,
    Taxonomy,
    TaxonomyEntity,
    build_matcher,
    fnv1a64,
    load_taxonomy,
    match_mentions,
    split_sentences,
    tokenize,
    write_taxonomy,
)
from .tc import (
    DanTcModel,
    EmptySentenceError,
    TcHyper,
    dan_encode,
    load_tc_model,
    save_tc_model,
    tc_forward,
    tc_loss,
    tc_predict,
    tc_train,
)
from .nn import AdamState, adam_step, sigmoid, softmax
from .params import (
    COMPATIBILITY,
    MentionScorer,
    ParameterExtractor,
    extract_parameters,
    mention_features,
    score_mention,
    train_mention_scorer,
)
from .gbdt import (
    GbdtEnsemble,
    GbdtParams,
    Tree,
    feature_importance,
    find_best_split,
    gbdt_predict,
    gbdt_train,
    leaf_weight,
)
from .ranker import (
    PmiTable,
    QuestionFeatures,
    RankSchema,
    RankedQuestion,
    assemble_features,
    build_pmi_table,
    build_ranking_dataset,
    pmi,
    rank_questions,
)
from .corpus import (
    CorpusBundle,
    DatasetError,
    SplitSpec,
    SynthConfig,
    bundled_taxonomy,
    gen_synthetic_corpus,
    load_dataset,
    write_dataset,
)
from .evaluation import (
    ablation_run,
    auprc,
    auroc,
    classification_report,
    macro_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)
from .pipeline import (
    LatencyStats,
    SqgModels,
    generate_questions,
    load_bundle,
    measure_latency,
    save_bundle,
)

__version__ = "0.1.0"

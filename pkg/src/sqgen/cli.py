"""Operator CLI: corpus generation, training, evaluation, benchmarks, serving.

Every stochastic command takes --seed. SQGEN_CONFIG may point to a JSON file
providing default paths ("data_dir", "bundle_dir", "feedback_file", "port").
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_mod
from .baselines import train_bow_softmax
from .corpus import (
    CorpusBundle,
    SplitSpec,
    SynthConfig,
    gen_synthetic_corpus,
    load_dataset,
    write_corpus_dir,
)
from .evaluation import (
    FEATURE_GROUPS,
    ablation_run,
    auprc,
    auroc,
    classification_report,
    format_metric_table,
    macro_at_k,
    write_metric_records,
)
from .gbdt import GbdtParams, gbdt_train, save_ensemble
from .params import ParameterExtractor, save_mention_scorer, train_mention_scorer
from .pipeline import (
    LatencyStats,
    SqgModels,
    generate_questions,
    load_bundle,
    measure_latency,
    pipeline_score_provider,
    save_bundle,
)
from .ranker import RankSchema, build_pmi_table, build_ranking_dataset
from .ranker_providers import hashed_score_provider
from .records import Template, dedup_feedback
from .tc import TcHyper, load_tc_model, save_tc_model, tc_accuracy, tc_train
from .textproc import EmbeddingTable, SurfaceMatcher, load_taxonomy, tokenize


def _config_defaults() -> dict:
    path = os.environ.get("SQGEN_CONFIG")
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@click.group()
@click.pass_context
def main(ctx):
    ctx.obj = _config_defaults()


def _default(ctx, key, fallback):
    return ctx.obj.get(key, fallback) if ctx.obj else fallback


@main.command("gen-corpus")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--train-sentences", default=700, show_default=True,
              help="Sentences per template in the train split.")
@click.option("--test-sentences", default=200, show_default=True)
@click.option("--val-sentences", default=100, show_default=True)
@click.option("--train-jobs", default=420, show_default=True)
@click.option("--test-jobs", default=120, show_default=True)
@click.option("--val-jobs", default=60, show_default=True)
def gen_corpus(out_dir, seed, train_sentences, test_sentences, val_sentences,
               train_jobs, test_jobs, val_jobs):
    """Generate the synthetic corpus (jobs, sentences, feedback, taxonomy)."""
    config = SynthConfig(seed=seed, splits={
        "train": SplitSpec(train_sentences, train_jobs),
        "test": SplitSpec(test_sentences, test_jobs),
        "val": SplitSpec(val_sentences, val_jobs),
    })
    bundle = gen_synthetic_corpus(config)
    write_corpus_dir(bundle, out_dir)
    for split in bundle.labeled_sentences:
        click.echo(
            f"{split}: {len(bundle.labeled_sentences[split])} sentences, "
            f"{len(bundle.jobs[split])} jobs, "
            f"{len(bundle.feedback_triples[split])} feedback triples"
        )


@main.command("train-tc")
@click.option("--sentences", "sentences_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--lr", default=1e-3, show_default=True, type=float)
@click.option("--batch-size", default=256, show_default=True, type=int)
@click.option("--dropout", default=0.4, show_default=True, type=float)
@click.option("--epochs", default=100, show_default=True, type=int)
@click.option("--mlp-depth", default=3, show_default=True, type=int)
def train_tc(sentences_path, out_path, seed, lr, batch_size, dropout, epochs, mlp_depth):
    """Train the sentence intent classifier."""
    dataset = load_dataset(sentences_path, "sentences")
    hyper = TcHyper(lr=lr, batch_size=batch_size, dropout=dropout, epochs=epochs,
                    mlp_depth=mlp_depth, seed=seed)
    t0 = time.perf_counter()
    model, history = tc_train(dataset, hyper)
    elapsed = time.perf_counter() - t0
    save_tc_model(model, out_path)
    click.echo(f"trained on {len(dataset)} sentences in {elapsed:.1f}s; "
               f"loss {history[0]:.4f} -> {history[-1]:.4f}; saved to {out_path}")


@main.command("train-scorer")
@click.option("--sentences", "sentences_path", required=True, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--tc-model", "tc_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--threshold", default=0.5, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def train_scorer(sentences_path, taxonomy_path, tc_path, out_path, threshold, seed):
    """Train the mention confidence scorer used by parameter extraction."""
    sentences = load_dataset(sentences_path, "sentences")
    taxonomy = load_taxonomy(taxonomy_path)
    tc_model = load_tc_model(tc_path)
    scorer = train_mention_scorer(
        sentences, taxonomy, SurfaceMatcher(taxonomy), tc_model.emb,
        threshold=threshold, seed=seed,
    )
    save_mention_scorer(scorer, out_path)
    click.echo(f"scorer trained; saved to {out_path}")


def _load_ranking_inputs(feedback_path, jobs_path):
    triples = dedup_feedback(load_dataset(feedback_path, "feedback"))
    jobs = {j.id: j for j in load_dataset(jobs_path, "jobs")}
    return triples, jobs


@main.command("train-ranker")
@click.option("--feedback", "feedback_path", required=True, type=click.Path(exists=True))
@click.option("--jobs", "jobs_path", required=True, type=click.Path(exists=True))
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(),
              help="Bundle directory holding tc.npz/scorer.json/taxonomy.tsv; "
                   "ranker artifacts are written here.")
@click.option("--objective", default="pairwise", show_default=True,
              type=click.Choice(["pointwise", "pairwise"]))
@click.option("--trees", default=100, show_default=True, type=int)
@click.option("--depth", default=5, show_default=True, type=int)
@click.option("--eta", default=0.7, show_default=True, type=float)
@click.option("--gamma", default=0.0, show_default=True, type=float)
@click.option("--lam", default=1.0, show_default=True, type=float)
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--null-margin", default=0.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--synthetic-scores", is_flag=True,
              help="Use hashed question-side scores instead of running the pipeline.")
def train_ranker(feedback_path, jobs_path, bundle_dir, objective, trees, depth, eta,
                 gamma, lam, k, null_margin, seed, synthetic_scores):
    """Build the PMI table and train the ranking ensemble; completes the bundle."""
    bundle_dir = Path(bundle_dir)
    triples, jobs = _load_ranking_inputs(feedback_path, jobs_path)
    taxonomy = load_taxonomy(bundle_dir / "taxonomy.tsv")
    tc_model = load_tc_model(bundle_dir / "tc.npz")
    from .params import load_mention_scorer

    scorer = load_mention_scorer(bundle_dir / "scorer.json")
    extractor = ParameterExtractor(taxonomy, SurfaceMatcher(taxonomy), scorer, tc_model.emb)

    schema = RankSchema.from_mapping(corpus_mod.DEFAULT_JOB_FEATURE_SCHEMA)
    accepted = [t for t in triples if t.accepted]
    pmi_table = build_pmi_table(accepted, jobs, schema.job_feature_names)

    partial = SqgModels(tc_model, taxonomy, extractor,
                        ensemble=None, pmi_table=pmi_table, schema=schema,
                        k=k, null_margin=null_margin)
    provider = hashed_score_provider() if synthetic_scores else pipeline_score_provider(partial)
    X, y, groups = build_ranking_dataset(triples, jobs, pmi_table, schema, provider)
    params = GbdtParams(trees=trees, max_depth=depth, eta=eta, gamma=gamma, lam=lam,
                        objective=objective, seed=seed)
    ensemble = gbdt_train(X, y, params, groups=groups)
    partial.ensemble = ensemble
    save_bundle(partial, bundle_dir)
    click.echo(f"ranker trained on {len(y)} triples "
               f"({len(groups)} jobs, {objective}); bundle at {bundle_dir}")


@main.command("eval-tc")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--sentences", "sentences_path", required=True, type=click.Path(exists=True))
@click.option("--bow-baseline", is_flag=True, help="Also train/evaluate the BOW baseline.")
@click.option("--train-sentences", "train_path", type=click.Path(exists=True),
              help="Train split for the BOW baseline.")
@click.option("--json-out", type=click.Path(), default=None)
@click.option("--seed", default=0, show_default=True, type=int)
def eval_tc(model_path, sentences_path, bow_baseline, train_path, json_out, seed):
    """Classification report for the intent classifier on a labeled split."""
    from .tc import tc_predict

    model = load_tc_model(model_path)
    dataset = load_dataset(sentences_path, "sentences")
    gold = [s.template for s in dataset]
    pred = [tc_predict(model, s.text) for s in dataset]
    report = classification_report(gold, pred)
    rows = []
    for cls, stats in report["per_class"].items():
        rows.append({
            "class": cls.name,
            "precision": "-" if stats.precision is None else stats.precision,
            "recall": "-" if stats.recall is None else stats.recall,
            "support": stats.support,
        })
    click.echo(f"overall accuracy: {report['accuracy']:.4f}")
    click.echo(format_metric_table(rows, ["class", "precision", "recall", "support"]))
    if bow_baseline:
        if not train_path:
            raise click.UsageError("--bow-baseline requires --train-sentences")
        bow = train_bow_softmax(load_dataset(train_path, "sentences"), seed=seed)
        click.echo(f"bow baseline accuracy: {bow.accuracy(dataset):.4f}")
    if json_out:
        write_metric_records(
            [{"class": r["class"],
              "precision": None if r["precision"] == "-" else r["precision"],
              "recall": None if r["recall"] == "-" else r["recall"],
              "support": r["support"]} for r in rows],
            json_out,
        )


def _ranking_eval_sets(train_feedback, train_jobs, test_feedback, test_jobs, provider):
    schema = RankSchema.from_mapping(corpus_mod.DEFAULT_JOB_FEATURE_SCHEMA)
    train_triples, train_job_map = _load_ranking_inputs(train_feedback, train_jobs)
    test_triples, test_job_map = _load_ranking_inputs(test_feedback, test_jobs)
    accepted = [t for t in train_triples if t.accepted]
    pmi_table = build_pmi_table(accepted, train_job_map, schema.job_feature_names)
    train = build_ranking_dataset(train_triples, train_job_map, pmi_table, schema, provider)
    test = build_ranking_dataset(test_triples, test_job_map, pmi_table, schema, provider)
    return schema, train, test


@main.command("eval-ranker")
@click.option("--train-feedback", required=True, type=click.Path(exists=True))
@click.option("--train-jobs", required=True, type=click.Path(exists=True))
@click.option("--test-feedback", required=True, type=click.Path(exists=True))
@click.option("--test-jobs", required=True, type=click.Path(exists=True))
@click.option("--objective", default="pairwise", show_default=True,
              type=click.Choice(["pointwise", "pairwise"]))
@click.option("--trees", default=100, show_default=True, type=int)
@click.option("--depth", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--json-out", type=click.Path(), default=None)
def eval_ranker(train_feedback, train_jobs, test_feedback, test_jobs, objective,
                trees, depth, seed, json_out):
    """Train on the train split and report ranking metrics on the test split."""
    provider = hashed_score_provider()
    schema, train, test = _ranking_eval_sets(
        train_feedback, train_jobs, test_feedback, test_jobs, provider)
    params = GbdtParams(trees=trees, max_depth=depth, objective=objective, seed=seed)
    metrics = ablation_run([], train, test, params, schema)
    metrics["model"] = objective
    cols = ["model", "auroc", "auprc", "precision@1", "recall@1", "ndcg@1",
            "precision@3", "recall@3", "ndcg@3"]
    click.echo(format_metric_table([metrics], cols))
    if json_out:
        write_metric_records([metrics], json_out)


@main.command("ablate")
@click.option("--train-feedback", required=True, type=click.Path(exists=True))
@click.option("--train-jobs", required=True, type=click.Path(exists=True))
@click.option("--test-feedback", required=True, type=click.Path(exists=True))
@click.option("--test-jobs", required=True, type=click.Path(exists=True))
@click.option("--objective", default="pairwise", show_default=True,
              type=click.Choice(["pointwise", "pairwise"]))
@click.option("--trees", default=100, show_default=True, type=int)
@click.option("--depth", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--json-out", type=click.Path(), default=None)
def ablate(train_feedback, train_jobs, test_feedback, test_jobs, objective, trees,
           depth, seed, json_out):
    """Feature-group ablation: retrain with each group removed and compare."""
    provider = hashed_score_provider()
    schema, train, test = _ranking_eval_sets(
        train_feedback, train_jobs, test_feedback, test_jobs, provider)
    params = GbdtParams(trees=trees, max_depth=depth, objective=objective, seed=seed)
    rows = [ablation_run([], train, test, params, schema)]
    for group in FEATURE_GROUPS:
        rows.append(ablation_run([group], train, test, params, schema))
    for row in rows:
        row["variant"] = "all" if not row["dropped"] else f"-{','.join(row['dropped'])}"
    cols = ["variant", "auroc", "auprc", "precision@1", "recall@1", "ndcg@1",
            "precision@3", "recall@3", "ndcg@3"]
    click.echo(format_metric_table(rows, cols))
    if json_out:
        write_metric_records(rows, json_out)


@main.command("sweep")
@click.option("--train-sentences", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test-sentences", "test_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=30, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--json-out", type=click.Path(), default=None)
def sweep(train_path, test_path, epochs, seed, json_out):
    """One-at-a-time hyper-parameter sensitivity grid for the classifier."""
    train = load_dataset(train_path, "sentences")
    test = load_dataset(test_path, "sentences")
    grid = {
        "lr": [3e-4, 1e-3, 3e-3],
        "dropout": [0.0, 0.2, 0.4, 0.6],
        "batch_size": [64, 256, 1024],
        "mlp_depth": [1, 2, 3, 4],
    }
    rows = []
    for name, values in grid.items():
        for value in values:
            hyper = TcHyper(epochs=epochs, seed=seed, **{name: value})
            model, _ = tc_train(train, hyper)
            rows.append({"param": name, "value": value,
                         "test_accuracy": tc_accuracy(model, test)})
            click.echo(f"{name}={value}: accuracy {rows[-1]['test_accuracy']:.4f}")
    click.echo(format_metric_table(rows, ["param", "value", "test_accuracy"]))
    if json_out:
        write_metric_records(rows, json_out)


@main.command("suggest")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--jobs", "jobs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--k", default=None, type=int, help="Override the bundle's top-k.")
def suggest(bundle_dir, jobs_path, out_path, k):
    """Batch mode: read a jobs file, write ranked questions per job (JSONL)."""
    models = load_bundle(bundle_dir)
    if k is not None:
        models.k = k
    jobs = load_dataset(jobs_path, "jobs")
    with open(out_path, "w", encoding="utf-8") as fh:
        for job in jobs:
            ranked = generate_questions(job, models)
            fh.write(json.dumps({
                "job_id": job.id,
                "questions": [
                    {"template": rq.question.template.name,
                     "parameter": rq.question.parameter,
                     "score": rq.score}
                    for rq in ranked
                ],
            }) + "\n")
    click.echo(f"wrote suggestions for {len(jobs)} jobs to {out_path}")


@main.command("bench-latency")
@click.option("--bundle", "bundle_dir", type=click.Path(exists=True), default=None,
              help="Measure a trained bundle; omit to benchmark a fresh model.")
@click.option("--vocab", default=50_000, show_default=True, type=int)
@click.option("--dim", default=64, show_default=True, type=int)
@click.option("--tokens", "n_tokens", default=32, show_default=True, type=int)
@click.option("--sentences", "n_sentences", default=200, show_default=True, type=int)
@click.option("--reps", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def bench_latency(bundle_dir, vocab, dim, n_tokens, n_sentences, reps, seed):
    """Per-sentence classifier inference latency (mean/p50/p95, single thread)."""
    stats = run_latency_benchmark(bundle_dir, vocab, dim, n_tokens, n_sentences, reps, seed)
    click.echo(
        f"sentences={n_sentences} reps={reps} "
        f"mean={stats.mean_ms:.3f}ms p50={stats.p50_ms:.3f}ms p95={stats.p95_ms:.3f}ms"
    )


def run_latency_benchmark(bundle_dir=None, vocab: int = 50_000, dim: int = 64,
                          n_tokens: int = 32, n_sentences: int = 200, reps: int = 5,
                          seed: int = 0) -> LatencyStats:
    rng = np.random.default_rng(seed)
    if bundle_dir:
        models = load_bundle(bundle_dir)
        tc_model = models.tc_model
        words = tc_model.emb.vocab or [f"w{i}" for i in range(1000)]
    else:
        from .tc import DanTcModel

        words = [f"w{i:06d}" for i in range(vocab)]
        hyper = TcHyper(emb_dim=dim, hidden1=dim, hidden2=dim, mlp_hidden=dim, seed=seed)
        tc_model = DanTcModel.init_random(words, hyper, rng)
    sentences = [
        [words[rng.integers(len(words))] for _ in range(n_tokens)]
        for _ in range(n_sentences)
    ]

    class _Holder:
        pass

    holder = _Holder()
    holder.tc_model = tc_model
    return measure_latency(holder, sentences, repetitions=reps)


@main.command("serve")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--jobs", "jobs_path", required=True, type=click.Path(exists=True))
@click.option("--feedback", "feedback_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8808, show_default=True, type=int)
def serve(bundle_dir, jobs_path, feedback_path, host, port):
    """Run the suggestion + feedback HTTP service."""
    import uvicorn

    from .service import FeedbackStore, create_app

    models = load_bundle(bundle_dir)
    jobs = load_dataset(jobs_path, "jobs")
    app = create_app(models, jobs, FeedbackStore(feedback_path))
    click.echo(f"serving {len(jobs)} jobs on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()

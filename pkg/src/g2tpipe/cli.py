"""Command-line entry points for every pipeline stage and utility.

Exit codes: 0 success, 2 config error, 3 stage failure, 4 resume conflict.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import analytics, evalsheets, metrics as metrics_mod, records, scoring
from .data_files import load_wordlist_file
from .extraction import (
    OpenAIChatClient,
    ReplayClient,
    RetryPolicy,
    SamplingParams,
    extract_corpus,
    load_template,
)
from .filtering import (
    FilterConfig,
    MixedBackendError,
    classify_rejection,
    filter_by_threshold,
    mix_curated_noise,
    single_backend,
)
from .ingest import IngestConfig, SourceSentence, ingest_stream, read_articles_jsonl, read_articles_textdir
from .pipeline import (
    STAGES,
    ConfigError,
    PipelineRun,
    ResumeConflict,
    linearize_for_training,
    load_config,
    split_dataset,
)
from .records import ScoredPair

EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_RESUME = 4


def pipeline_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ResumeConflict as exc:
            click.echo(f"resume conflict: {exc}", err=True)
            sys.exit(EXIT_RESUME)
        except (ConfigError, MixedBackendError, ValueError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except click.ClickException:
            raise
        except Exception as exc:
            click.echo(f"stage failure: {exc}", err=True)
            sys.exit(EXIT_STAGE)

    return wrapper


@click.group()
def main():
    """Synthesize graph-to-text datasets from raw article text."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "input_format", type=click.Choice(["jsonl", "textdir"]), default="jsonl")
@click.option("--min-len", default=10, show_default=True)
@click.option("--max-len", default=500, show_default=True)
@click.option("--pronoun-list", type=click.Path(exists=True), default=None)
@click.option("--abbreviation-list", type=click.Path(exists=True), default=None)
@click.option("--no-abbreviation-guard", is_flag=True, default=False)
@click.option("--out", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@pipeline_errors
def ingest(input_path, input_format, min_len, max_len, pronoun_list, abbreviation_list, no_abbreviation_guard, out, report_path):
    """Collect constrained first sentences from an article dump."""
    kwargs = {"min_len": min_len, "max_len": max_len, "abbreviation_guard": not no_abbreviation_guard}
    if pronoun_list:
        kwargs["blocked_pronouns"] = load_wordlist_file(pronoun_list)
    if abbreviation_list:
        kwargs["abbreviations"] = load_wordlist_file(abbreviation_list)
    articles = read_articles_jsonl(input_path) if input_format == "jsonl" else read_articles_textdir(input_path)
    stream, report = ingest_stream(articles, IngestConfig(**kwargs))
    count = records.write_jsonl(out, (s.to_record() for s in stream))
    if report_path:
        records.write_json(report_path, report.to_dict())
    click.echo(f"emitted {count} sentences from {report.articles_seen} articles")
    for reason, n in sorted(report.rejections.items()):
        click.echo(f"  rejected {reason}: {n}")


@main.command()
@click.option("--sentences", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default=None, help="OpenAI-compatible base URL")
@click.option("--replay", default=None, type=click.Path(exists=True), help="sentence_id -> completion fixture")
@click.option("--model", default="stub", show_default=True)
@click.option("--temperature", default=0.5, show_default=True)
@click.option("--top-p", default=0.9, show_default=True)
@click.option("--max-tokens", default=512, show_default=True)
@click.option("--shard-size", default=100_000, show_default=True)
@click.option("--parallelism", default=1, show_default=True)
@click.option("--max-attempts", default=3, show_default=True)
@click.option("--resample-on-parse-error", is_flag=True, default=False)
@click.option("--template", "template_path", type=click.Path(exists=True), default=None)
@click.option("--out-dir", required=True, type=click.Path())
@pipeline_errors
def extract(sentences, endpoint, replay, model, temperature, top_p, max_tokens, shard_size, parallelism, max_attempts, resample_on_parse_error, template_path, out_dir):
    """Extract triplet graphs for every sentence, shard by shard."""
    if (endpoint is None) == (replay is None):
        raise ConfigError("provide exactly one of --endpoint or --replay")
    client = ReplayClient.from_file(replay) if replay else OpenAIChatClient(endpoint)
    sentence_list = [SourceSentence.from_record(r) for r in records.iter_jsonl(sentences)]
    params = SamplingParams(temperature=temperature, top_p=top_p, max_tokens=max_tokens, model_name=model)
    policy = RetryPolicy(max_attempts=max_attempts, resample_on_parse_error=resample_on_parse_error)
    template = load_template(template_path) if template_path else None
    reports = extract_corpus(
        sentence_list, client, params, out_dir,
        shard_size=shard_size, parallelism=parallelism, template=template, policy=policy,
    )
    pairs = sum(r.n_pairs for r in reports)
    failures = sum(r.n_failures for r in reports)
    click.echo(f"extracted {pairs} pairs, {failures} failures over {len(reports)} shard(s)")


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["lexical", "remote"]), default="lexical", show_default=True)
@click.option("--endpoint", default="", help="scoring service base URL (remote backend)")
@click.option("--batch-size", default=64, show_default=True)
@click.option("--timeout", default=30.0, show_default=True)
@click.option("--stopword-list", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@pipeline_errors
def score(input_path, backend, endpoint, batch_size, timeout, stopword_list, out):
    """Attach a referenceless consistency score to every pair."""
    kwargs = {"backend": backend, "endpoint": endpoint, "batch_size": batch_size, "timeout": timeout}
    if stopword_list:
        kwargs["stopwords"] = load_wordlist_file(stopword_list)
    config = scoring.ScorerConfig(**kwargs)
    pairs = [records.pair_from_record(r) for r in records.iter_jsonl(input_path)]
    scores = scoring.score_pairs(pairs, config)
    records.write_jsonl(
        out,
        (ScoredPair(p, s.value, s.backend).to_record() for p, s in zip(pairs, scores)),
    )
    click.echo(f"scored {len(pairs)} pairs with backend {scores[0].backend if scores else backend}")


@main.command("filter")
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", default=0.3, show_default=True)
@click.option("--out-curated", required=True, type=click.Path())
@click.option("--out-noise", required=True, type=click.Path())
@click.option("--diagnostics", "diagnostics_path", type=click.Path(), default=None)
@pipeline_errors
def filter_cmd(input_path, threshold, out_curated, out_noise, diagnostics_path):
    """Split scored pairs into curated and noise at the threshold."""
    scored = [ScoredPair.from_record(r) for r in records.iter_jsonl(input_path)]
    curated, noise = filter_by_threshold(scored, FilterConfig(threshold=threshold))
    records.write_jsonl(out_curated, (s.to_record() for s in curated.pairs))
    records.write_jsonl(out_noise, (s.to_record() for s in noise))
    if diagnostics_path:
        records.write_jsonl(diagnostics_path, (classify_rejection(s.pair).to_record() for s in noise))
    click.echo(f"curated {curated.n_prime}, noise {len(noise)} (threshold {threshold})")


@main.command()
@click.option("--curated", "curated_path", required=True, type=click.Path(exists=True))
@click.option("--noise", "noise_path", required=True, type=click.Path(exists=True))
@click.option("--pct", required=True, type=float, help="percent of the split drawn from the curated pool")
@click.option("--total", default=50_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@pipeline_errors
def mix(curated_path, noise_path, pct, total, seed, out):
    """Mix a fixed-size training split from curated and noise pools."""
    curated = [ScoredPair.from_record(r) for r in records.iter_jsonl(curated_path)]
    noise = [ScoredPair.from_record(r) for r in records.iter_jsonl(noise_path)]
    single_backend(curated + noise)
    split = mix_curated_noise(curated, noise, pct, total, seed)
    records.write_jsonl(out, (s.to_record() for s in split))
    click.echo(f"mixed {total} pairs at {pct}% curated (seed {seed})")


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "input_format", type=click.Choice(sorted(analytics.PAIR_READERS)), default="native", show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--dist", "dist_path", type=click.Path(), default=None)
@pipeline_errors
def stats(input_path, input_format, report_path, dist_path):
    """Dataset statistics and normalized distributions."""
    pairs = list(analytics.PAIR_READERS[input_format](input_path))
    dataset_stats = analytics.compute_stats(pairs)
    distributions = analytics.build_distributions(pairs)
    records.write_json(report_path, {"stats": dataset_stats.to_dict(), "distributions": distributions.to_dict()})
    if dist_path:
        analytics.write_distribution_csv(distributions, dist_path)
    click.echo(json.dumps(dataset_stats.to_dict()))


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--quota", default=6, show_default=True, help="items per stratum")
@click.option("--seed", default=0, show_default=True)
@click.option("--dataset-id", default="dataset", show_default=True)
@click.option("--out", required=True, type=click.Path())
@pipeline_errors
def sheet(input_path, quota, seed, dataset_id, out):
    """Emit a stratified qualitative-evaluation sheet."""
    pairs = [records.pair_from_record(r) for r in records.iter_jsonl(input_path)]
    result = evalsheets.stratified_sample(pairs, quota, seed, dataset_id)
    evalsheets.write_sheet_csv(result, out)
    click.echo(f"sheet of {len(result.items)} items -> {out}")


@main.command("judge-prompts")
@click.option("--sheet", "sheet_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@pipeline_errors
def judge_prompts(sheet_path, out):
    """Render one validation prompt per sheet item."""
    loaded = evalsheets.read_sheet_csv(sheet_path)
    records.write_jsonl(
        out,
        (
            {"item_id": item.item_id, "prompt": evalsheets.build_judge_prompt(item)}
            for item in loaded.items
        ),
    )
    click.echo(f"wrote {len(loaded.items)} prompts")


@main.command()
@click.option("--sheet", "sheet_path", required=True, type=click.Path(exists=True))
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--text-unit", type=click.Choice(["chars", "words"]), default="chars", show_default=True)
@pipeline_errors
def aggregate(sheet_path, annotations_path, report_path, text_unit):
    """Aggregate annotations into unused/unguessable ratios."""
    loaded = evalsheets.read_sheet_csv(sheet_path)
    annotations = evalsheets.read_annotations_csv(annotations_path)
    report = evalsheets.aggregate_annotations(annotations, loaded, text_unit)
    records.write_json(report_path, report.to_dict())
    payload = report.to_dict()
    click.echo(
        f"unused triplets: {payload['unused_triplet_mean']} ± {payload['unused_triplet_std']} | "
        f"unguessable text: {payload['unguessable_text_mean']} ± {payload['unguessable_text_std']}"
    )


@main.command()
@click.option("--hyp", required=True, type=click.Path(exists=True))
@click.option("--ref", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--tokenizer", type=click.Choice(["international", "whitespace"]), default="international", show_default=True)
@pipeline_errors
def metrics(hyp, ref, report_path, tokenizer):
    """Deterministic surface metrics over aligned line files."""
    hypotheses = Path(hyp).read_text(encoding="utf-8").splitlines()
    references = Path(ref).read_text(encoding="utf-8").splitlines()
    report = metrics_mod.compute_report(hypotheses, references, tokenizer)
    records.write_json(report_path, report.to_dict())
    click.echo(json.dumps(report.to_dict()))


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--source", "source_path", required=True, type=click.Path())
@click.option("--target", "target_path", required=True, type=click.Path())
@pipeline_errors
def linearize(input_path, source_path, target_path):
    """Write aligned source/target training files from curated pairs."""
    raw = records.read_jsonl(input_path)
    pairs = [
        (ScoredPair.from_record(r).pair if "score" in r else records.pair_from_record(r))
        for r in raw
    ]
    count = linearize_for_training(pairs, source_path, target_path)
    click.echo(f"linearized {count} pairs")


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--train", "train_n", required=True, type=int)
@click.option("--test", "test_n", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--train-out", required=True, type=click.Path())
@click.option("--test-out", required=True, type=click.Path())
@pipeline_errors
def split(input_path, train_n, test_n, seed, train_out, test_out):
    """Seeded disjoint train/test split of a record file."""
    items = records.read_jsonl(input_path)
    train_items, test_items = split_dataset(items, train_n, test_n, seed)
    records.write_jsonl(train_out, train_items)
    records.write_jsonl(test_out, test_items)
    click.echo(f"split {len(items)} records into {train_n} train / {test_n} test")


@main.group()
def pipeline():
    """Run the staged pipeline under a manifest."""


@pipeline.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--stage", "stage_name", type=click.Choice(STAGES), default=None, help="run one stage instead of all remaining")
@pipeline_errors
def pipeline_run(config_path, stage_name):
    config = load_config(config_path)
    run = PipelineRun(config)
    if stage_name:
        record = run.run_stage(stage_name)
        click.echo(f"stage {stage_name}: in={record['input_count']} out={record['output_count']}")
    else:
        run.run_all()
        for name in STAGES:
            record = run.manifest.stages[name]
            click.echo(f"stage {name}: in={record['input_count']} out={record['output_count']}")
    click.echo(f"manifest: {run.manifest_path} (n={run.manifest.n}, n'={run.manifest.n_prime})")


if __name__ == "__main__":
    main()

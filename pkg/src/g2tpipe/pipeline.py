"""Resumable stage orchestration over JSONL artifacts with a manifest.

Stages run in a fixed order (ingest, extract, score, filter, stats,
linearize); each stage's outputs are durable before the manifest advances,
a completed stage reruns as a no-op, and a config edit mid-run is refused
with the changed keys named.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import analytics, records, scoring
from .extraction import (
    OpenAIChatClient,
    ReplayClient,
    RetryPolicy,
    SamplingParams,
    extract_corpus,
    load_template,
)
from .filtering import FilterConfig, classify_rejection, filter_by_threshold
from .graphs import linearize
from .ingest import (
    IngestConfig,
    SourceSentence,
    ingest_stream,
    read_articles_jsonl,
    read_articles_textdir,
)
from .data_files import load_wordlist_file
from .records import ScoredPair

logger = logging.getLogger(__name__)

STAGES = ("ingest", "extract", "score", "filter", "stats", "linearize")

ENV_PREFIX = "G2TPIPE__"


class ConfigError(ValueError):
    """Invalid or unreadable pipeline configuration (exit code 2)."""


class StageError(RuntimeError):
    """A stage failed; the message names the stage (exit code 3)."""


class ResumeConflict(RuntimeError):
    """Config changed under a resumed run (exit code 4)."""


def _coerce(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def load_config(path: str | Path, env: dict[str, str] | None = None) -> dict:
    """Read a TOML config and apply G2TPIPE__section__key env overrides."""
    try:
        with open(path, "rb") as fh:
            config = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    env = os.environ if env is None else env
    for key, value in sorted(env.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = key[len(ENV_PREFIX) :].split("__")
        if len(parts) != 2:
            raise ConfigError(f"malformed override {key}; expected {ENV_PREFIX}section__key")
        section, option = (p.lower() for p in parts)
        config.setdefault(section, {})[option] = _coerce(value)
    return config


def canonical_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _flatten(config: dict, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in config.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def changed_keys(old: dict, new: dict) -> list[str]:
    old_flat, new_flat = _flatten(old), _flatten(new)
    return sorted(
        key
        for key in set(old_flat) | set(new_flat)
        if old_flat.get(key, "<absent>") != new_flat.get(key, "<absent>")
    )


@dataclass
class Manifest:
    run_id: str
    config: dict
    config_hash: str
    stages: dict
    n: int | None = None
    n_prime: int | None = None

    @staticmethod
    def fresh(config: dict) -> "Manifest":
        digest = canonical_hash(config)
        return Manifest(run_id=digest[:12], config=config, config_hash=digest, stages={})

    @staticmethod
    def load(path: Path) -> "Manifest":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return Manifest(
            payload["run_id"],
            payload["config"],
            payload["config_hash"],
            payload["stages"],
            payload.get("n"),
            payload.get("n_prime"),
        )

    def save(self, path: Path) -> None:
        records.write_json(
            path,
            {
                "run_id": self.run_id,
                "config": self.config,
                "config_hash": self.config_hash,
                "stages": self.stages,
                "n": self.n,
                "n_prime": self.n_prime,
            },
        )

    def stage_complete(self, name: str) -> bool:
        return name in self.stages and self.stages[name].get("finished_at") is not None


class PipelineRun:
    """One pipeline run rooted at an output directory.

    Artifacts: sentences.jsonl, pairs.jsonl, failures.jsonl, scored.jsonl,
    curated.jsonl, noise.jsonl, diagnostics.jsonl, stats.json, dist.csv,
    train.source, train.target, and manifest.json (run metadata; the only
    artifact carrying wall-clock timestamps).
    """

    def __init__(self, config: dict, client=None, clock: Callable[[], float] = time.time):
        try:
            self.out_dir = Path(config["run"]["out_dir"])
        except KeyError as exc:
            raise ConfigError("config needs [run] out_dir") from exc
        self.config = config
        self.client = client
        self.clock = clock
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out_dir / "manifest.json"
        if self.manifest_path.exists():
            self.manifest = Manifest.load(self.manifest_path)
            if self.manifest.config_hash != canonical_hash(config):
                diff = changed_keys(self.manifest.config, config)
                raise ResumeConflict(
                    "config changed for resumed run; differing keys: " + ", ".join(diff)
                )
        else:
            self.manifest = Manifest.fresh(config)
            self.manifest.save(self.manifest_path)

    # -- stage plumbing ----------------------------------------------------

    def _artifact(self, name: str) -> Path:
        return self.out_dir / name

    def run_stage(self, name: str) -> dict:
        if name not in STAGES:
            raise ConfigError(f"unknown stage {name!r}; stages are {', '.join(STAGES)}")
        if self.manifest.stage_complete(name):
            return self.manifest.stages[name]
        position = STAGES.index(name)
        if position > 0:
            previous = STAGES[position - 1]
            if not self.manifest.stage_complete(previous):
                raise StageError(f"stage {name} requires completed stage {previous}")
        started = self.clock()
        runner = getattr(self, f"_stage_{name}")
        try:
            input_count, output_count = runner()
        except (ConfigError, ResumeConflict):
            raise
        except Exception as exc:
            raise StageError(f"stage {name} failed: {exc}") from exc
        record = {
            "input_count": input_count,
            "output_count": output_count,
            "config_hash": self.manifest.config_hash,
            "started_at": started,
            "finished_at": self.clock(),
        }
        self.manifest.stages[name] = record
        if name == "ingest":
            self.manifest.n = output_count
        if name == "filter":
            self.manifest.n_prime = output_count
        self.manifest.save(self.manifest_path)
        return record

    def run_all(self) -> None:
        for name in STAGES:
            self.run_stage(name)

    # -- stages --------------------------------------------------------------

    def _ingest_config(self) -> IngestConfig:
        section = self.config.get("ingest", {})
        kwargs: dict[str, Any] = {
            "min_len": section.get("min_len", 10),
            "max_len": section.get("max_len", 500),
            "abbreviation_guard": section.get("abbreviation_guard", True),
        }
        if "pronoun_list" in section:
            kwargs["blocked_pronouns"] = load_wordlist_file(section["pronoun_list"])
        if "abbreviation_list" in section:
            kwargs["abbreviations"] = load_wordlist_file(section["abbreviation_list"])
        return IngestConfig(**kwargs)

    def _stage_ingest(self) -> tuple[int, int]:
        section = self.config.get("ingest", {})
        if "input" not in section:
            raise ConfigError("config needs [ingest] input")
        input_format = section.get("format", "jsonl")
        if input_format == "jsonl":
            articles = read_articles_jsonl(section["input"])
        elif input_format == "textdir":
            articles = read_articles_textdir(section["input"])
        else:
            raise ConfigError(f"unknown ingest format {input_format!r}")
        stream, report = ingest_stream(articles, self._ingest_config())
        records.write_jsonl(self._artifact("sentences.jsonl"), (s.to_record() for s in stream))
        records.write_json(self._artifact("ingest_report.json"), report.to_dict())
        return report.articles_seen, report.sentences_emitted

    def _build_client(self):
        if self.client is not None:
            return self.client
        section = self.config.get("extract", {})
        if "replay" in section:
            return ReplayClient.from_file(section["replay"])
        if "endpoint" in section:
            return OpenAIChatClient(section["endpoint"], timeout=section.get("timeout", 120.0))
        raise ConfigError("config needs [extract] endpoint or replay")

    def _stage_extract(self) -> tuple[int, int]:
        section = self.config.get("extract", {})
        sentences = [
            SourceSentence.from_record(r)
            for r in records.iter_jsonl(self._artifact("sentences.jsonl"))
        ]
        params = SamplingParams(
            temperature=section.get("temperature", 0.5),
            top_p=section.get("top_p", 0.9),
            max_tokens=section.get("max_tokens", 512),
            model_name=section.get("model", "stub"),
        )
        policy = RetryPolicy(
            max_attempts=section.get("max_attempts", 3),
            resample_on_parse_error=section.get("resample_on_parse_error", False),
        )
        template = load_template(section["template"]) if "template" in section else None
        reports = extract_corpus(
            sentences,
            self._build_client(),
            params,
            self.out_dir,
            shard_size=section.get("shard_size", 100_000),
            parallelism=section.get("parallelism", 1),
            template=template,
            policy=policy,
            checkpoint_every=section.get("checkpoint_every", 1),
        )
        return len(sentences), sum(r.n_pairs for r in reports)

    def _stage_score(self) -> tuple[int, int]:
        section = self.config.get("score", {})
        backend = section.get("backend", "lexical")
        pairs = [records.pair_from_record(r) for r in records.iter_jsonl(self._artifact("pairs.jsonl"))]
        config = scoring.ScorerConfig(
            backend=backend,
            endpoint=section.get("endpoint", ""),
            batch_size=section.get("batch_size", 64),
            timeout=section.get("timeout", 30.0),
        )
        scores = scoring.score_pairs(pairs, config)
        records.write_jsonl(
            self._artifact("scored.jsonl"),
            (
                ScoredPair(pair, score.value, score.backend).to_record()
                for pair, score in zip(pairs, scores)
            ),
        )
        return len(pairs), len(pairs)

    def _stage_filter(self) -> tuple[int, int]:
        section = self.config.get("filter", {})
        config = FilterConfig(
            threshold=section.get("threshold", 0.3),
            seed=self.config.get("run", {}).get("seed", 0),
        )
        scored = [ScoredPair.from_record(r) for r in records.iter_jsonl(self._artifact("scored.jsonl"))]
        curated, noise = filter_by_threshold(scored, config)
        records.write_jsonl(self._artifact("curated.jsonl"), (s.to_record() for s in curated.pairs))
        records.write_jsonl(self._artifact("noise.jsonl"), (s.to_record() for s in noise))
        records.write_jsonl(
            self._artifact("diagnostics.jsonl"),
            (classify_rejection(s.pair).to_record() for s in noise),
        )
        return len(scored), curated.n_prime

    def _stage_stats(self) -> tuple[int, int]:
        curated = [
            ScoredPair.from_record(r).pair for r in records.iter_jsonl(self._artifact("curated.jsonl"))
        ]
        if curated:
            stats = analytics.compute_stats(curated)
            distributions = analytics.build_distributions(curated)
            records.write_json(
                self._artifact("stats.json"),
                {"stats": stats.to_dict(), "distributions": distributions.to_dict()},
            )
            analytics.write_distribution_csv(distributions, self._artifact("dist.csv"))
        else:
            records.write_json(self._artifact("stats.json"), {"stats": None, "distributions": None})
        return len(curated), len(curated)

    def _stage_linearize(self) -> tuple[int, int]:
        curated = [
            ScoredPair.from_record(r).pair for r in records.iter_jsonl(self._artifact("curated.jsonl"))
        ]
        count = linearize_for_training(
            curated, self._artifact("train.source"), self._artifact("train.target")
        )
        return len(curated), count


def linearize_for_training(pairs, source_path: str | Path, target_path: str | Path) -> int:
    """Write aligned source/target line files, ordered by sentence_id."""
    ordered = sorted(pairs, key=lambda p: p.sentence_id)
    if not ordered:
        logger.warning("no pairs to linearize; writing empty training files")
    source_path, target_path = Path(source_path), Path(target_path)
    source_path.parent.mkdir(parents=True, exist_ok=True)
    source_tmp = source_path.with_name(source_path.name + ".tmp")
    target_tmp = target_path.with_name(target_path.name + ".tmp")
    with open(source_tmp, "w", encoding="utf-8") as src, open(target_tmp, "w", encoding="utf-8") as tgt:
        for pair in ordered:
            src.write(linearize(pair.graph) + "\n")
            tgt.write(pair.text + "\n")
    os.replace(source_tmp, source_path)
    os.replace(target_tmp, target_path)
    return len(ordered)


def split_dataset(items: list, train: int, test: int, seed: int) -> tuple[list, list]:
    """Seeded disjoint train/test split of any record list."""
    if train + test > len(items):
        raise ValueError(f"cannot draw {train}+{test} items from a pool of {len(items)}")
    shuffled = list(items)
    random.Random(seed).shuffle(shuffled)
    return shuffled[:train], shuffled[train : train + test]

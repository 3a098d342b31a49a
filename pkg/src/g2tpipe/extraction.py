"""Prompt construction, chat-completion clients, and the shard-scale
extraction runner that turns source sentences into triplet graphs.

The runner writes append-only JSONL with a byte-offset checkpoint so a
killed shard resumes from the last committed record, and it restores input
order regardless of completion order.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from . import records
from .data_files import package_text
from .graphs import GraphTextPair, ParseErrorKind, TripletParseError, TripletSet, parse_triplets
from .ingest import SourceSentence

API_KEY_ENV = "G2TPIPE_API_KEY"
DEFAULT_SHARD_SIZE = 100_000


class TransportError(RuntimeError):
    """The completion endpoint could not be reached or answered garbage."""


class RateLimitedError(TransportError):
    """The completion endpoint asked us to back off."""


@dataclass(frozen=True)
class IclExample:
    text: str
    triplets: str


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction plus exactly three worked text-to-triplets examples."""

    instruction: str
    examples: tuple[IclExample, ...]

    def __post_init__(self) -> None:
        if len(self.examples) != 3:
            raise ValueError(f"prompt template needs exactly 3 examples, got {len(self.examples)}")

    def render(self, sentence: str) -> str:
        blocks = [self.instruction, ""]
        for number, example in enumerate(self.examples, start=1):
            blocks += [
                f"Example {number}",
                f"[[TEXT]]: {example.text}",
                f"[[TRIPLETS]]: {example.triplets}",
                "",
            ]
        blocks += ["Query", f"[[TEXT]]: {sentence}", "[[TRIPLETS]]:"]
        return "\n".join(blocks)


def _template_from_payload(payload: dict) -> PromptTemplate:
    return PromptTemplate(
        payload["instruction"],
        tuple(IclExample(e["text"], e["triplets"]) for e in payload["examples"]),
    )


def default_template() -> PromptTemplate:
    return _template_from_payload(json.loads(package_text("default_prompt.json")))


def load_template(path: str | Path) -> PromptTemplate:
    return _template_from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def build_prompt(sentence: str, template: PromptTemplate | None = None) -> str:
    """Render the extraction prompt; the result ends with the bare triplets
    cue line. The sentence is substituted verbatim, never re-interpreted."""
    return (template or default_template()).render(sentence)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.5
    top_p: float = 0.9
    max_tokens: int = 512
    model_name: str = "stub"

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")


class CompletionClient(Protocol):
    def complete(self, sentence_id: str, prompt: str, params: SamplingParams) -> str: ...


class OpenAIChatClient:
    """Chat-completions client for any compatible endpoint; the whole prompt
    travels as a single user message. The API key comes from the
    ``G2TPIPE_API_KEY`` (or ``OPENAI_API_KEY``) environment variable."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ):
        self._url = endpoint.rstrip("/") + "/chat/completions"
        self._api_key = api_key or os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY")
        self._timeout = timeout
        self._session = session or requests.Session()

    def complete(self, sentence_id: str, prompt: str, params: SamplingParams) -> str:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        try:
            response = self._session.post(self._url, json=body, headers=headers, timeout=self._timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code == 429:
            raise RateLimitedError(f"rate limited by {self._url}")
        if response.status_code != 200:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc


class ReplayClient:
    """Offline stub mapping sentence_id to a canned completion, read from a
    JSONL fixture with fields sentence_id/completion."""

    def __init__(self, completions: dict[str, str]):
        self._completions = dict(completions)
        self.calls = 0

    @staticmethod
    def from_file(path: str | Path) -> "ReplayClient":
        return ReplayClient(
            {r["sentence_id"]: r["completion"] for r in records.iter_jsonl(path)}
        )

    def complete(self, sentence_id: str, prompt: str, params: SamplingParams) -> str:
        self.calls += 1
        try:
            return self._completions[sentence_id]
        except KeyError:
            raise TransportError(f"no replay completion for sentence {sentence_id}") from None


class FailureCause(Enum):
    TRANSPORT_ERROR = "TransportError"
    RATE_LIMITED = "RateLimited"
    PARSE_ERROR = "ParseError"
    EMPTY_COMPLETION = "EmptyCompletion"


@dataclass(frozen=True)
class ExtractionSuccess:
    sentence_id: str
    graph: TripletSet
    attempt_count: int


@dataclass(frozen=True)
class ExtractionFailure:
    sentence_id: str
    cause: FailureCause
    attempt_count: int
    parse_kind: ParseErrorKind | None = None

    def to_record(self) -> dict:
        record = {
            "sentence_id": self.sentence_id,
            "cause": self.cause.value,
            "attempt_count": self.attempt_count,
        }
        if self.parse_kind is not None:
            record["parse_kind"] = self.parse_kind.value
        return record


@dataclass(frozen=True)
class RetryPolicy:
    """Transport and rate-limit failures retry with exponential backoff;
    parse failures do not, unless a single re-sample is enabled."""

    max_attempts: int = 3
    base_delay: float = 0.5
    resample_on_parse_error: bool = False
    sleeper: Callable[[float], None] = time.sleep

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def extract_graph(
    sentence: SourceSentence,
    client: CompletionClient,
    params: SamplingParams,
    template: PromptTemplate | None = None,
    policy: RetryPolicy = RetryPolicy(),
) -> ExtractionSuccess | ExtractionFailure:
    """Prompt the client for the sentence's graph and parse the completion."""
    prompt = build_prompt(sentence.text, template)
    attempts = 0
    resampled = False
    while True:
        attempts += 1
        try:
            completion = client.complete(sentence.sentence_id, prompt, params)
        except RateLimitedError:
            cause = FailureCause.RATE_LIMITED
        except TransportError:
            cause = FailureCause.TRANSPORT_ERROR
        else:
            stripped = completion.strip()
            if not stripped:
                if policy.resample_on_parse_error and not resampled:
                    resampled = True
                    continue
                return ExtractionFailure(sentence.sentence_id, FailureCause.EMPTY_COMPLETION, attempts)
            try:
                graph = parse_triplets(stripped)
            except TripletParseError as exc:
                if policy.resample_on_parse_error and not resampled:
                    resampled = True
                    continue
                return ExtractionFailure(
                    sentence.sentence_id, FailureCause.PARSE_ERROR, attempts, exc.kind
                )
            return ExtractionSuccess(sentence.sentence_id, graph, attempts)
        if attempts >= policy.max_attempts:
            return ExtractionFailure(sentence.sentence_id, cause, attempts)
        policy.sleeper(policy.base_delay * 2 ** (attempts - 1))


@dataclass(frozen=True)
class ExtractionShard:
    shard_id: int
    sentences: tuple[SourceSentence, ...]


def split_into_shards(
    sentences: Sequence[SourceSentence], shard_size: int = DEFAULT_SHARD_SIZE
) -> list[ExtractionShard]:
    """Cut the sentence pool into dense, ordered shards of ``shard_size``."""
    if shard_size < 1:
        raise ValueError("shard_size must be >= 1")
    return [
        ExtractionShard(shard_id, tuple(sentences[start : start + shard_size]))
        for shard_id, start in enumerate(range(0, len(sentences), shard_size))
    ]


class ShardWriter:
    """Append-only pair and failure logs with a sidecar checkpoint.

    The checkpoint stores the count of committed input records and the byte
    sizes of both logs; resuming truncates any uncommitted tail so a crashed
    run converges to the same bytes as an uninterrupted one.
    """

    def __init__(
        self,
        pairs_path: str | Path,
        failures_path: str | Path,
        checkpoint_path: str | Path,
        checkpoint_every: int = 1,
    ):
        self.pairs_path = Path(pairs_path)
        self.failures_path = Path(failures_path)
        self.checkpoint_path = Path(checkpoint_path)
        self.checkpoint_every = max(1, checkpoint_every)
        self.committed = 0
        self.n_pairs = 0
        self.n_failures = 0
        self._pairs_fh = None
        self._failures_fh = None
        self._since_checkpoint = 0

    def open(self) -> int:
        """Truncate logs to the checkpointed state and open for append.
        Returns the count of already-committed input records."""
        state = {"committed": 0, "pairs_bytes": 0, "failures_bytes": 0}
        if self.checkpoint_path.exists():
            state = json.loads(self.checkpoint_path.read_text(encoding="utf-8"))
        for path, size in (
            (self.pairs_path, state["pairs_bytes"]),
            (self.failures_path, state["failures_bytes"]),
        ):
            path.parent.mkdir(parents=True, exist_ok=True)
            if not path.exists():
                if size:
                    raise RuntimeError(f"checkpoint expects {size} bytes but {path} is missing")
                path.touch()
            elif path.stat().st_size < size:
                raise RuntimeError(f"{path} shorter than checkpointed size {size}")
            else:
                with open(path, "r+b") as fh:
                    fh.truncate(size)
        self.committed = state["committed"]
        with open(self.pairs_path, encoding="utf-8") as fh:
            self.n_pairs = sum(1 for _ in fh)
        with open(self.failures_path, encoding="utf-8") as fh:
            self.n_failures = sum(1 for _ in fh)
        self._pairs_fh = open(self.pairs_path, "ab")
        self._failures_fh = open(self.failures_path, "ab")
        return self.committed

    def append_pair(self, record: dict) -> None:
        self._append(self._pairs_fh, record)
        self.n_pairs += 1
        self._committed_one()

    def append_failure(self, record: dict) -> None:
        self._append(self._failures_fh, record)
        self.n_failures += 1
        self._committed_one()

    def _append(self, fh, record: dict) -> None:
        fh.write((records.dumps(record) + "\n").encode("utf-8"))
        fh.flush()

    def _committed_one(self) -> None:
        self.committed += 1
        self._since_checkpoint += 1
        if self._since_checkpoint >= self.checkpoint_every:
            self.write_checkpoint()

    def write_checkpoint(self) -> None:
        for fh in (self._pairs_fh, self._failures_fh):
            os.fsync(fh.fileno())
        payload = {
            "committed": self.committed,
            "pairs_bytes": self.pairs_path.stat().st_size,
            "failures_bytes": self.failures_path.stat().st_size,
        }
        tmp = self.checkpoint_path.with_name(self.checkpoint_path.name + ".tmp")
        tmp.write_text(json.dumps(payload), encoding="utf-8")
        os.replace(tmp, self.checkpoint_path)
        self._since_checkpoint = 0

    def close(self) -> None:
        if self._pairs_fh is None:
            return
        self.write_checkpoint()
        self._pairs_fh.close()
        self._failures_fh.close()
        self._pairs_fh = None
        self._failures_fh = None


@dataclass
class ShardReport:
    shard_id: int
    n_sentences: int
    n_pairs: int
    n_failures: int
    retried: dict = field(default_factory=dict)

    def is_conserved(self) -> bool:
        return self.n_pairs + self.n_failures == self.n_sentences

    def to_dict(self) -> dict:
        return {
            "shard_id": self.shard_id,
            "n_sentences": self.n_sentences,
            "n_pairs": self.n_pairs,
            "n_failures": self.n_failures,
            "retried": dict(sorted(self.retried.items())),
        }


def run_shard(
    shard: ExtractionShard,
    client: CompletionClient,
    params: SamplingParams,
    writer: ShardWriter,
    parallelism: int = 1,
    template: PromptTemplate | None = None,
    policy: RetryPolicy = RetryPolicy(),
) -> ShardReport:
    """Extract a whole shard with a bounded worker pool.

    Results are committed strictly in input order regardless of completion
    order, so outputs are identical under any parallelism. A completed shard
    reruns as a no-op without touching the client.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if template is None:
        template = default_template()

    start = writer.open()
    sentences = shard.sentences
    report = ShardReport(shard.shard_id, len(sentences), writer.n_pairs, writer.n_failures)

    def commit(sentence: SourceSentence, outcome: ExtractionSuccess | ExtractionFailure) -> None:
        if outcome.attempt_count > 1:
            report.retried[outcome.sentence_id] = outcome.attempt_count
        if isinstance(outcome, ExtractionSuccess):
            pair = GraphTextPair(sentence.sentence_id, outcome.graph, sentence.text)
            writer.append_pair(records.pair_to_record(pair))
            report.n_pairs += 1
        else:
            writer.append_failure(outcome.to_record())
            report.n_failures += 1

    try:
        if start < len(sentences):
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = {
                    pool.submit(extract_graph, sentence, client, params, template, policy): index
                    for index, sentence in enumerate(sentences)
                    if index >= start
                }
                buffered: dict[int, ExtractionSuccess | ExtractionFailure] = {}
                next_index = start
                for future in as_completed(futures):
                    buffered[futures[future]] = future.result()
                    while next_index in buffered:
                        commit(sentences[next_index], buffered.pop(next_index))
                        next_index += 1
    finally:
        writer.close()

    if not report.is_conserved():
        raise RuntimeError(
            f"shard {shard.shard_id} lost records: {report.n_pairs} pairs + "
            f"{report.n_failures} failures != {report.n_sentences} sentences"
        )
    return report


def extract_corpus(
    sentences: Sequence[SourceSentence],
    client: CompletionClient,
    params: SamplingParams,
    out_dir: str | Path,
    shard_size: int = DEFAULT_SHARD_SIZE,
    parallelism: int = 1,
    template: PromptTemplate | None = None,
    policy: RetryPolicy = RetryPolicy(),
    checkpoint_every: int = 1,
) -> list[ShardReport]:
    """Extract every shard into ``out_dir`` and merge the shard logs into
    pairs.jsonl and failures.jsonl. Fully resumable per shard."""
    out_dir = Path(out_dir)
    shard_dir = out_dir / "shards"
    shard_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for shard in split_into_shards(sentences, shard_size):
        writer = ShardWriter(
            shard_dir / f"pairs-{shard.shard_id:05d}.jsonl",
            shard_dir / f"failures-{shard.shard_id:05d}.jsonl",
            shard_dir / f"checkpoint-{shard.shard_id:05d}.json",
            checkpoint_every=checkpoint_every,
        )
        reports.append(
            run_shard(shard, client, params, writer, parallelism, template, policy)
        )

    def merged(kind: str):
        for report in reports:
            yield from records.iter_jsonl(shard_dir / f"{kind}-{report.shard_id:05d}.jsonl")

    records.write_jsonl(out_dir / "pairs.jsonl", merged("pairs"))
    records.write_jsonl(out_dir / "failures.jsonl", merged("failures"))
    records.write_json(
        out_dir / "extract_report.json", {"shards": [r.to_dict() for r in reports]}
    )
    return reports

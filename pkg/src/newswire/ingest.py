"""Corpus replay, taxonomy filtering, stream merge, language gate.

Replay substitutes the live firehose: JSONL files are re-emitted with
inter-arrival delays scaled by a speed factor. Two conventional sources
(a broad sample and a taxonomy-filtered stream) merge into one
deduplicated stream; a socket source with the same JSONL framing exists
for demos.
"""
from __future__ import annotations

import json
import logging
import socket
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from newswire import resources
from newswire.model import (
    MalformedTweet,
    StreamTag,
    Tweet,
    tokenize,
    tweet_from_json,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# taxonomy


@dataclass
class Taxonomy:
    keywords: frozenset[str]
    accounts: frozenset[str]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Taxonomy":
        kws, users = set(), set()
        for raw in lines:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("kw:"):
                kws.add(line[3:].strip().lower())
            elif line.startswith("user:"):
                users.add(line[5:].strip().lstrip("@").lower())
            else:
                log.warning("taxonomy line ignored (needs kw: or user: prefix): %r", line)
        return cls(frozenset(kws), frozenset(users))

    @classmethod
    def from_file(cls, path: str) -> "Taxonomy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls) -> "Taxonomy":
        return cls.from_lines(resources.default_taxonomy_lines())

    def __len__(self) -> int:
        return len(self.keywords) + len(self.accounts)


def taxonomy_filter(tweet: Tweet, taxonomy: Taxonomy) -> bool:
    """True iff a taxonomy keyword appears as a whole token or the author
    handle is tracked. Substring hits do not count."""
    if tweet.author.handle in taxonomy.accounts:
        return True
    for tok in tweet.tokens():
        if tok in taxonomy.keywords:
            return True
        # hashtags match their bare keyword too
        if tok.startswith("#") and tok[1:] in taxonomy.keywords:
            return True
    return False


# ---------------------------------------------------------------------------
# language gate

_GATE_THRESHOLD = 0.60


def language_gate(tweet: Tweet, english_only: bool = True) -> tuple[bool, str]:
    """Returns (passed, lang). Unknown-language text passes when at least
    60% of its alphabetic tokens are dictionary words."""
    if not english_only:
        return True, tweet.lang
    if tweet.lang == "en":
        return True, "en"
    if tweet.lang != "und":
        return False, tweet.lang
    words = resources.english_words()
    alpha = [t for t in tokenize(tweet.text) if t.isalpha()]
    if not alpha:
        return False, "und"
    hits = sum(1 for t in alpha if t in words)
    return (hits / len(alpha)) >= _GATE_THRESHOLD, "und"


# ---------------------------------------------------------------------------
# replay


@dataclass
class SourceSpec:
    path: str  # file path or "host:port" when socket=True
    stream_tag: StreamTag
    socket: bool = False


@dataclass
class StreamConfig:
    sources: list[SourceSpec]
    speed_factor: float = 0.0
    english_only: bool = True

    def __post_init__(self):
        if self.speed_factor < 0:
            raise ValueError("speed_factor must be >= 0")


@dataclass
class IngestStats:
    emitted: int = 0
    malformed: int = 0
    duplicates: int = 0
    dropped_language: int = 0
    dropped_by_lang: dict[str, int] = field(default_factory=dict)


def _read_source(spec: SourceSpec) -> Iterator[Tweet]:
    """Parse one JSONL source in file order; malformed lines are skipped
    and counted by the caller via the MalformedTweet sentinel."""
    with open(spec.path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield tweet_from_json(obj, stream_tag=spec.stream_tag)
            except (json.JSONDecodeError, MalformedTweet, TypeError) as exc:
                log.info("%s:%d malformed: %s", spec.path, lineno, exc)
                yield MALFORMED


MALFORMED = object()  # in-band marker so the merge loop can count skips


def _merge_by_virtual_time(per_source: list[list]) -> Iterator:
    """Merge parsed sources by a per-file running-max clock.

    Files may contain out-of-order timestamps; replay must preserve each
    file's internal order, so the merge key is the running maximum of
    created_at seen so far in that file, not the raw timestamp.
    """
    cursors = [0] * len(per_source)
    clocks = [None] * len(per_source)
    while True:
        best = None
        for i, items in enumerate(per_source):
            if cursors[i] >= len(items):
                continue
            item = items[cursors[i]]
            if item is MALFORMED:
                # malformed lines carry no time; emit immediately
                best = (None, i, item)
                break
            t = item.created_at
            if clocks[i] is not None and clocks[i] > t:
                t = clocks[i]
            if best is None or t < best[0]:
                best = (t, i, item)
        if best is None:
            return
        t, i, item = best
        cursors[i] += 1
        if item is not MALFORMED:
            clocks[i] = t
        yield t, item


def open_replay_stream(config: StreamConfig, stats: IngestStats | None = None) -> Iterator[Tweet]:
    """Replay configured sources as one deduplicated, language-gated stream.

    speed_factor scales inter-arrival gaps (0 = no sleeping). Missing files
    raise at startup; malformed lines are counted and skipped.
    """
    stats = stats if stats is not None else IngestStats()
    file_sources = [s for s in config.sources if not s.socket]
    for s in file_sources:
        open(s.path, encoding="utf-8").close()  # fail fast before streaming

    per_source = [list(_read_source(s)) for s in file_sources]

    seen: set[str] = set()
    last_virtual = None
    for t, item in _merge_by_virtual_time(per_source):
        if item is MALFORMED:
            stats.malformed += 1
            continue
        tweet: Tweet = item
        if tweet.id in seen:
            stats.duplicates += 1
            continue
        seen.add(tweet.id)
        passed, lang = language_gate(tweet, config.english_only)
        if not passed:
            stats.dropped_language += 1
            stats.dropped_by_lang[lang] = stats.dropped_by_lang.get(lang, 0) + 1
            continue
        if config.speed_factor > 0 and last_virtual is not None and t is not None:
            gap = (t - last_virtual).total_seconds()
            if gap > 0:
                time.sleep(gap / config.speed_factor)
        if t is not None:
            last_virtual = t
        stats.emitted += 1
        yield tweet


def merge_streams(streams: list[Iterable[Tweet]]) -> Iterator[Tweet]:
    """Round-robin arrival-order merge with first-wins id dedup."""
    if not streams:
        raise ValueError("need at least one stream")
    seen: set[str] = set()
    iters = [iter(s) for s in streams]
    live = list(range(len(iters)))
    while live:
        for idx in list(live):
            try:
                tweet = next(iters[idx])
            except StopIteration:
                live.remove(idx)
                continue
            if tweet.id in seen:
                continue
            seen.add(tweet.id)
            yield tweet


# ---------------------------------------------------------------------------
# demo socket source


def open_socket_stream(address: str, stream_tag: StreamTag = StreamTag.FILTERED,
                       stats: IngestStats | None = None) -> Iterator[Tweet]:
    """Read newline-delimited tweet JSON from host:port until EOF."""
    stats = stats if stats is not None else IngestStats()
    host, _, port = address.rpartition(":")
    with socket.create_connection((host or "localhost", int(port))) as sock:
        buf = b""
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if not line.strip():
                    continue
                try:
                    tweet = tweet_from_json(json.loads(line), stream_tag=stream_tag)
                    stats.emitted += 1
                    yield tweet
                except (json.JSONDecodeError, MalformedTweet, TypeError):
                    stats.malformed += 1

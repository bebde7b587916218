"""Stage graph over topic logs: replay in, enriched clusters and feeds out.

    ingest -> tweets log -> noise filter -> candidates log -> cluster
    worker -> clusters log -> enrichment -> enriched log -> {serving
    store, feed composers}

Every stage is a consumer group on its upstream log and commits after
its batch, so a restart replays at most one batch (at-least-once); all
downstream effects are idempotent by tweet id. The cluster worker is
the only mutator of the pool. Wall-clock enters nowhere below ingest:
feeds and staleness run on event time, which makes replays, and
crash-restarts, reproducible.

run_until_drained() steps the stages round-robin on the calling thread
(deterministic, used by tests and batch replays); start() runs them on
threads with ingest paced to a target tweets/s for latency work.
"""

from __future__ import annotations

import json
import statistics
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

from newswire.cluster import StreamClusterer
from newswire.disseminate import (
    FeedComposer,
    FeedProfile,
    HistoryItem,
    ImpactModel,
    extract_impact,
)
from newswire.geo import localize_cluster
from newswire.ingest import IngestStats, SourceSpec, StreamConfig, open_replay_stream
from newswire.logstore import TopicLog
from newswire.model import (
    DocumentFrequencyTable,
    EventCluster,
    StreamTag,
    tfidf_vector,
    tokenize,
    tweet_from_json,
    tweet_to_json,
)
from newswire.newsworthy import NewsModels, ObjectModel, OrdinalCombiner, TopicLabeler, score_cluster
from newswire.noisefilter import DuplicateTextWindow, NoiseFilter
from newswire.query import Node, QueryParseError, match_cluster, node_from_json, node_to_json, parse_query
from newswire.summarize import select_summary
from newswire.topicmodel import TopicModel
from newswire.veracity import VeracityModel
from newswire.veracity import score_cluster as score_veracity

SNAPSHOT_VERSION = 1

GRADE_RANK = {"not_newsworthy": 0, "partially_newsworthy": 1, "newsworthy": 2}

LOG_TWEETS = "tweets"
LOG_CANDIDATES = "candidates"
LOG_CLUSTERS = "clusters"
LOG_ENRICHED = "enriched"

# (log, consumer group) pairs, in stage order
_CONSUMERS = (
    (LOG_TWEETS, "noise"),
    (LOG_CANDIDATES, "cluster"),
    (LOG_CLUSTERS, "enrich"),
    (LOG_ENRICHED, "serve"),
)

_ARTIFACTS = (
    "noise/stage_spam.json",
    "noise/stage_advertisement.json",
    "noise/stage_chitchat.json",
    "topic_long.json",
    "topic_short.json",
    "object_long.json",
    "object_short.json",
    "combiner.json",
    "labeler.json",
    "veracity.json",
    "impact.json",
)


class MissingArtifacts(RuntimeError):
    def __init__(self, missing: list[str]):
        self.missing = missing
        lines = "\n".join(f"  - {m}" for m in missing)
        super().__init__(f"missing model artifacts:\n{lines}")


@dataclass
class PipelineConfig:
    data_dir: str
    models_dir: str
    sources: list[str] = field(default_factory=list)
    rate: float = 0.0  # tweets/s for threaded replay; 0 = unthrottled
    english_only: bool = True
    batch: int = 100
    profiles: dict = field(default_factory=dict)  # name -> FeedProfile JSON

    def to_json(self) -> dict:
        return {
            "data_dir": self.data_dir,
            "models_dir": self.models_dir,
            "sources": list(self.sources),
            "rate": self.rate,
            "english_only": self.english_only,
            "batch": self.batch,
            "profiles": dict(self.profiles),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        return cls(
            data_dir=obj["data_dir"],
            models_dir=obj["models_dir"],
            sources=list(obj.get("sources", [])),
            rate=float(obj.get("rate", 0.0)),
            english_only=bool(obj.get("english_only", True)),
            batch=int(obj.get("batch", 100)),
            profiles=dict(obj.get("profiles", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class Channel:
    id: str
    query_text: str
    node: Node
    filters: "ChannelFilters"
    created_at: float

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "query": self.query_text,
            "node": node_to_json(self.node),
            "filters": self.filters.to_json(),
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        return cls(
            id=obj["id"],
            query_text=obj["query"],
            node=node_from_json(obj["node"]),
            filters=ChannelFilters.from_json(obj.get("filters", {})),
            created_at=obj.get("created_at", 0.0),
        )

    def matches(self, cluster: EventCluster) -> bool:
        return self.filters.accept(cluster) and match_cluster(self.node, cluster)


@dataclass
class ChannelFilters:
    min_grade: Optional[str] = None
    min_dots: Optional[int] = None
    topics: Optional[frozenset[str]] = None
    min_size: Optional[int] = None
    since: Optional[str] = None  # ISO timestamps against updated_at
    until: Optional[str] = None

    def accept(self, cluster: EventCluster) -> bool:
        from newswire.model import format_ts

        if self.min_grade is not None:
            if cluster.newsworthiness is None:
                return False
            if GRADE_RANK[cluster.newsworthiness.grade] < GRADE_RANK[self.min_grade]:
                return False
        if self.min_dots is not None:
            if cluster.veracity is None or cluster.veracity.dots < self.min_dots:
                return False
        if self.topics is not None:
            if cluster.topic is None or cluster.topic.value not in self.topics:
                return False
        if self.min_size is not None and cluster.size < self.min_size:
            return False
        stamp = format_ts(cluster.updated_at)
        if self.since is not None and stamp < self.since:
            return False
        if self.until is not None and stamp > self.until:
            return False
        return True

    def to_json(self) -> dict:
        out = {}
        if self.min_grade is not None:
            out["min_grade"] = self.min_grade
        if self.min_dots is not None:
            out["min_dots"] = self.min_dots
        if self.topics is not None:
            out["topics"] = sorted(self.topics)
        if self.min_size is not None:
            out["min_size"] = self.min_size
        if self.since is not None:
            out["since"] = self.since
        if self.until is not None:
            out["until"] = self.until
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelFilters":
        if obj.get("min_grade") is not None and obj["min_grade"] not in GRADE_RANK:
            raise ValueError(f"unknown grade {obj['min_grade']!r}")
        return cls(
            min_grade=obj.get("min_grade"),
            min_dots=obj.get("min_dots"),
            topics=frozenset(obj["topics"]) if obj.get("topics") is not None else None,
            min_size=obj.get("min_size"),
            since=obj.get("since"),
            until=obj.get("until"),
        )


class Broadcast:
    """Fan-out to live tail subscribers; want() sees the publisher's key."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: list = []

    def subscribe(self, want: Callable):
        import queue

        q = queue.Queue()
        with self._lock:
            self._subs.append((want, q))
        return q

    def unsubscribe(self, q) -> None:
        with self._lock:
            self._subs = [(w, s) for w, s in self._subs if s is not q]

    def publish(self, key, payload: dict) -> None:
        with self._lock:
            subs = list(self._subs)
        for want, q in subs:
            try:
                if want(key):
                    q.put(payload)
            except Exception:
                continue


@dataclass(frozen=True)
class LatencyRecord:
    tweet_id: str
    stage_ms: dict  # stage name -> duration spent processing this tweet
    end_to_end_ms: float  # ingest-append to last visible effect

    def __post_init__(self):
        if self.end_to_end_ms < 0:
            raise ValueError("negative end-to-end latency")
        for stage, ms in self.stage_ms.items():
            if ms < 0:
                raise ValueError(f"negative duration for stage {stage}")


class Metrics:
    def __init__(self):
        self._lock = threading.Lock()
        self.counters: dict[str, int] = {}
        self.records: list[LatencyRecord] = []
        self.by_stage_ms: dict[str, float] = {}

    def bump(self, name: str, n: int = 1) -> None:
        with self._lock:
            self.counters[name] = self.counters.get(name, 0) + n

    def stage_time(self, stage: str, ms: float) -> None:
        with self._lock:
            self.by_stage_ms[stage] = self.by_stage_ms.get(stage, 0.0) + ms

    def latency(self, record: LatencyRecord) -> None:
        with self._lock:
            self.records.append(record)

    def report(self) -> dict:
        with self._lock:
            lat = sorted(r.end_to_end_ms for r in self.records)
            out = {"counters": dict(sorted(self.counters.items())),
                   "stage_ms": {k: round(v, 3) for k, v in sorted(self.by_stage_ms.items())}}
            if lat:
                out["latency_ms"] = {
                    "count": len(lat),
                    "mean": round(statistics.fmean(lat), 3),
                    "p50": round(_pct(lat, 0.50), 3),
                    "p90": round(_pct(lat, 0.90), 3),
                    "p99": round(_pct(lat, 0.99), 3),
                    "max": round(lat[-1], 3),
                }
            else:
                out["latency_ms"] = {"count": 0}
            return out


def _growth_rung(before: int, after: int) -> bool:
    """Publish policy for merged clusters: every update while small, then
    only when size crosses a geometric boundary. Pure in (before, after),
    so replays and resumed runs make identical publish decisions."""
    if after <= 24:
        return True
    b = 24
    while b < after:
        nb = max(b + 1, b * 5 // 4)
        if before < nb <= after:
            return True
        b = nb
    return False


def _pct(sorted_vals: list[float], p: float) -> float:
    if not sorted_vals:
        return 0.0
    k = max(0, min(len(sorted_vals) - 1, int(round(p * (len(sorted_vals) - 1)))))
    return sorted_vals[k]


def load_models(models_dir: str | Path):
    """All model artifacts, or a refusal that itemizes what is missing."""
    root = Path(models_dir)
    missing = [rel for rel in _ARTIFACTS if not (root / rel).exists()]
    if missing:
        raise MissingArtifacts([str(root / rel) for rel in missing])
    noise = NoiseFilter.load(str(root / "noise"))
    news = NewsModels(
        topic_long=TopicModel.load(str(root / "topic_long.json")),
        topic_short=TopicModel.load(str(root / "topic_short.json")),
        object_long=ObjectModel.load(str(root / "object_long.json")),
        object_short=ObjectModel.load(str(root / "object_short.json")),
    )
    combiner = OrdinalCombiner.from_json(
        json.loads((root / "combiner.json").read_text()))
    labeler = TopicLabeler.from_json(
        json.loads((root / "labeler.json").read_text()))
    veracity = VeracityModel.load(str(root / "veracity.json"))
    impact = ImpactModel.load(str(root / "impact.json"))
    return noise, news, combiner, labeler, veracity, impact


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.run_id = uuid.uuid4().hex[:12]
        (self.noise, self.news, self.combiner, self.labeler,
         self.veracity_model, self.impact_model) = load_models(config.models_dir)

        logs_root = Path(config.data_dir) / "logs"
        self.logs = {
            name: TopicLog(name, logs_root)
            for name in (LOG_TWEETS, LOG_CANDIDATES, LOG_CLUSTERS, LOG_ENRICHED)
        }
        self.df = DocumentFrequencyTable()
        self.clusterer = StreamClusterer()
        self.serving: dict[str, dict] = {}
        self.serving_lock = threading.Lock()
        self.channels: dict[str, Channel] = {}
        self._next_channel = 1
        self.composers: dict[str, FeedComposer] = {
            name: FeedComposer(FeedProfile.from_json(spec))
            for name, spec in sorted(config.profiles.items())
        }
        self.hub = Broadcast()
        self.feed_hub = Broadcast()
        self.metrics = Metrics()
        self.ingest_stats = IngestStats()
        self._source: Optional[Iterator] = None
        self._source_done = False
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    # ------------------------------------------------------------- ingest

    def _open_source(self) -> Iterator:
        specs = [SourceSpec(path=p, stream_tag=StreamTag.SAMPLE)
                 for p in self.config.sources]
        stream = open_replay_stream(
            StreamConfig(sources=specs, speed_factor=0.0,
                         english_only=self.config.english_only),
            self.ingest_stats)
        # the tweets log is the durable ingest position: the replay
        # stream is deterministic, so skip what is already appended
        skip = self.logs[LOG_TWEETS].end_offset
        for _ in range(skip):
            try:
                next(stream)
            except StopIteration:
                break
        return stream

    def step_ingest(self, n: Optional[int] = None) -> int:
        if self._source_done:
            return 0
        if self._source is None:
            self._source = self._open_source()
        n = n if n is not None else self.config.batch
        wrote = 0
        log = self.logs[LOG_TWEETS]
        for _ in range(n):
            try:
                tweet = next(self._source)
            except StopIteration:
                self._source_done = True
                break
            log.append({"tweet": tweet_to_json(tweet), "run": self.run_id,
                        "t_in": time.monotonic() * 1000.0})
            wrote += 1
        if wrote:
            self.metrics.bump("ingested", wrote)
        return wrote

    # ------------------------------------------------------- noise filter

    def step_noise(self) -> int:
        src, dst = self.logs[LOG_TWEETS], self.logs[LOG_CANDIDATES]
        batch = src.poll("noise", self.config.batch)
        if not batch:
            return 0
        t0 = time.monotonic()
        for off, rec in batch:
            r0 = time.monotonic()
            tweet = tweet_from_json(rec["tweet"])
            verdict = self.noise.classify(tweet)
            d_noise = (time.monotonic() - r0) * 1000.0
            if verdict.is_noise:
                self.metrics.bump("noise_dropped")
                self.metrics.bump(f"noise_dropped_{verdict.stage}")
                # a drop is the tweet's last visible effect
                if rec.get("run") == self.run_id and rec.get("t_in") is not None:
                    self.metrics.latency(LatencyRecord(
                        tweet.id, {"noise": d_noise},
                        time.monotonic() * 1000.0 - rec["t_in"]))
            else:
                dst.append({"tweet": rec["tweet"], "run": rec.get("run"),
                            "t_in": rec.get("t_in"), "d_noise": d_noise})
                self.metrics.bump("candidates")
        src.commit("noise", batch[-1][0] + 1)
        self.metrics.stage_time("noise", (time.monotonic() - t0) * 1000.0)
        return len(batch)

    # ------------------------------------------------------ cluster worker

    def step_cluster(self) -> int:
        src, dst = self.logs[LOG_CANDIDATES], self.logs[LOG_CLUSTERS]
        batch = src.poll("cluster", self.config.batch)
        if not batch:
            return 0
        t0 = time.monotonic()
        for off, rec in batch:
            r0 = time.monotonic()
            tweet = tweet_from_json(rec["tweet"])
            # event-time archiving, before the has_seen gate so a resumed
            # run replays the exact same archive sequence
            self.clusterer.pool.archive_idle(tweet.created_at)
            if self.clusterer.has_seen(tweet.id):
                # redelivery: skip entirely so the df table is not skewed
                continue
            tokens = tokenize(tweet.text)
            self.df.add_document(tokens)
            vector = tfidf_vector(tokens, self.df)
            event = self.clusterer.offer(tweet, vector)
            now = time.monotonic()
            if rec.get("run") == self.run_id and rec.get("t_in") is not None:
                stages = {"cluster": (now - r0) * 1000.0}
                if rec.get("d_noise") is not None:
                    stages["noise"] = rec["d_noise"]
                self.metrics.latency(LatencyRecord(
                    tweet.id, stages, now * 1000.0 - rec["t_in"]))
            if event.kind == "buffered":
                self.metrics.bump("buffered")
                continue
            self.metrics.bump(event.kind)
            cluster = self.clusterer.pool.clusters[event.cluster_id]
            size = len(cluster.tweets)
            if event.kind == "new_event" or _growth_rung(size - event.added, size):
                dst.append({"cluster": cluster.to_json(), "kind": event.kind,
                            "tweet_id": event.tweet_id})
            else:
                self.metrics.bump("coalesced")
        src.commit("cluster", batch[-1][0] + 1)
        self.metrics.stage_time("cluster", (time.monotonic() - t0) * 1000.0)
        return len(batch)

    # -------------------------------------------------------- enrichment

    def enrich(self, cluster: EventCluster) -> EventCluster:
        """Context layers, in dependency order; all pure functions of the
        cluster's members, so re-enrichment after a replay converges."""
        cluster.topic = self.labeler.label_cluster(cluster)
        cluster.newsworthiness = score_cluster(cluster, self.news, self.combiner)
        cluster.veracity = score_veracity(cluster, None, self.veracity_model)
        cluster.summary = select_summary(cluster)
        cluster.geo = localize_cluster(cluster)
        cluster.impact = extract_impact(cluster, self.impact_model)
        return cluster

    def step_enrich(self) -> int:
        src, dst = self.logs[LOG_CLUSTERS], self.logs[LOG_ENRICHED]
        batch = src.poll("enrich", self.config.batch)
        if not batch:
            return 0
        t0 = time.monotonic()
        for off, rec in batch:
            cluster = EventCluster.from_json(rec["cluster"])
            self.enrich(cluster)
            dst.append({"cluster": cluster.to_json(), "kind": rec["kind"]})
            self.metrics.bump("enriched")
        src.commit("enrich", batch[-1][0] + 1)
        self.metrics.stage_time("enrich", (time.monotonic() - t0) * 1000.0)
        return len(batch)

    # ------------------------------------------------- serving and feeds

    def step_serve(self) -> int:
        src = self.logs[LOG_ENRICHED]
        batch = src.poll("serve", self.config.batch)
        if not batch:
            return 0
        t0 = time.monotonic()
        for off, rec in batch:
            blob = rec["cluster"]
            with self.serving_lock:
                self.serving[blob["cluster_id"]] = blob
            cluster = EventCluster.from_json(blob)
            self.hub.publish(cluster, blob)
            for composer in self.composers.values():
                item = composer.offer(cluster, cluster.updated_at)
                if item is not None:
                    self.metrics.bump(f"feed_{composer.profile.name}")
                    self.feed_hub.publish(
                        composer.profile.name,
                        {"profile": composer.profile.name,
                         "item": item.to_json()})
            self.metrics.bump("served")
        src.commit("serve", batch[-1][0] + 1)
        self.metrics.stage_time("serve", (time.monotonic() - t0) * 1000.0)
        return len(batch)

    # ---------------------------------------------------------- draining

    _STAGES = ("step_noise", "step_cluster", "step_enrich", "step_serve")

    def run_until_drained(self, max_rounds: int = 10_000_000) -> None:
        """Single-threaded round-robin until the source is exhausted and
        every log is fully consumed. Deterministic."""
        for _ in range(max_rounds):
            progressed = self.step_ingest() > 0
            for name in self._STAGES:
                progressed = getattr(self, name)() > 0 or progressed
            if not progressed and self._source_done and self.drained():
                return
        raise RuntimeError("pipeline did not drain")

    def drained(self) -> bool:
        return (self.logs[LOG_TWEETS].lag("noise") == 0
                and self.logs[LOG_CANDIDATES].lag("cluster") == 0
                and self.logs[LOG_CLUSTERS].lag("enrich") == 0
                and self.logs[LOG_ENRICHED].lag("serve") == 0)

    # ---------------------------------------------------------- threaded

    def start(self) -> None:
        self._stop.clear()

        def ingest_loop():
            rate = self.config.rate
            next_due = time.monotonic()
            while not self._stop.is_set() and not self._source_done:
                if rate > 0:
                    chunk = max(1, int(rate * 0.02))
                    self.step_ingest(chunk)
                    next_due += chunk / rate
                    delay = next_due - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                else:
                    self.step_ingest()

        def worker_loop(step_name):
            step = getattr(self, step_name)
            while not self._stop.is_set():
                if step() == 0:
                    time.sleep(0.002)

        self._threads = [threading.Thread(target=ingest_loop, daemon=True)]
        self._threads += [threading.Thread(target=worker_loop, args=(n,), daemon=True)
                          for n in self._STAGES]
        for t in self._threads:
            t.start()

    def shutdown(self, drain: bool = True) -> None:
        """Stop threads; with drain, finish everything already ingested."""
        self._source_done = True
        self._stop.set()
        for t in self._threads:
            t.join(timeout=10)
        self._threads = []
        if drain:
            while not self.drained():
                progressed = 0
                for name in self._STAGES:
                    progressed += getattr(self, name)()
                if progressed == 0:
                    break

    # ---------------------------------------------------------- channels

    def create_channel(self, query: str, filters: Optional[dict] = None) -> Channel:
        node = parse_query(query)  # QueryParseError carries position
        ch = Channel(
            id=f"ch-{self._next_channel:04d}",
            query_text=query,
            node=node,
            filters=ChannelFilters.from_json(filters or {}),
            created_at=time.time(),
        )
        self._next_channel += 1
        self.channels[ch.id] = ch
        return ch

    def update_channel(self, channel_id: str, filters: dict) -> Channel:
        ch = self.channels[channel_id]
        ch.filters = ChannelFilters.from_json(filters)
        return ch

    def channel_matches(self, channel_id: str) -> list[dict]:
        """Historical matches, oldest first (the live tail follows on)."""
        ch = self.channels[channel_id]
        with self.serving_lock:
            blobs = list(self.serving.values())
        out = []
        for blob in blobs:
            cluster = EventCluster.from_json(blob)
            if ch.matches(cluster):
                out.append(blob)
        out.sort(key=lambda b: (b["updated_at"], b["cluster_id"]))
        return out

    def search(self, q: str, page: int = 0, page_size: int = 20) -> dict:
        node = parse_query(q)
        with self.serving_lock:
            blobs = list(self.serving.values())
        hits = []
        for blob in blobs:
            cluster = EventCluster.from_json(blob)
            if match_cluster(node, cluster):
                hits.append(blob)
        hits.sort(key=lambda b: (b["updated_at"], b["cluster_id"]), reverse=True)
        start = page * page_size
        return {
            "query": q,
            "page": page,
            "total": len(hits),
            "results": hits[start:start + page_size],
        }

    # ----------------------------------------------------------- snapshot

    def snapshot_state(self, out_dir: str | Path) -> None:
        """Persist everything needed to continue; requires a drained
        pipeline so stage state and offsets agree."""
        if not self.drained():
            raise RuntimeError("snapshot requires a quiescent pipeline")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        def dump(name: str, obj) -> None:
            (out / name).write_text(json.dumps(obj, sort_keys=True, indent=0))

        dump("version.json", {
            "version": SNAPSHOT_VERSION,
            "offsets": {name: {group: self.logs[name].committed(group)}
                        for name, group in _CONSUMERS},
        })
        dump("pool.json", self.clusterer.snapshot())
        dump("df.json", self.df.to_json())
        dump("dupwindow.json", self.noise.dup_window.snapshot())
        dump("serving.json", dict(sorted(self.serving.items())))
        dump("channels.json", {
            "next": self._next_channel,
            "channels": [self.channels[k].to_json() for k in sorted(self.channels)],
        })
        dump("feeds.json", {
            name: {
                "emitted": sorted(c.emitted_ids),
                "daily": dict(sorted(c._daily.items())),
                "history": [
                    {"cluster_id": h.cluster_id,
                     "emitted_at": _ts(h.emitted_at),
                     "fields": {f: dict(sorted(cnt.items()))
                                for f, cnt in sorted(h.fields.items())}}
                    for h in c.history
                ],
                "log": c.log,
            }
            for name, c in sorted(self.composers.items())
        })

    def restore_state(self, in_dir: str | Path) -> None:
        from collections import Counter

        from newswire.model import parse_ts

        src = Path(in_dir)
        meta = json.loads((src / "version.json").read_text())
        if meta.get("version") != SNAPSHOT_VERSION:
            raise RuntimeError(
                f"snapshot version {meta.get('version')} != {SNAPSHOT_VERSION}, refusing")
        for name, groups in meta["offsets"].items():
            for group, off in groups.items():
                self.logs[name].commit(group, off)
        self.clusterer = StreamClusterer.restore(
            json.loads((src / "pool.json").read_text()))
        self.df = DocumentFrequencyTable.from_json(
            json.loads((src / "df.json").read_text()))
        self.noise.dup_window = DuplicateTextWindow.restore(
            json.loads((src / "dupwindow.json").read_text()))
        self.serving = json.loads((src / "serving.json").read_text())
        chan = json.loads((src / "channels.json").read_text())
        self._next_channel = chan["next"]
        self.channels = {c["id"]: Channel.from_json(c) for c in chan["channels"]}
        feeds = json.loads((src / "feeds.json").read_text())
        for name, state in feeds.items():
            composer = self.composers.get(name)
            if composer is None:
                continue
            composer.emitted_ids = set(state["emitted"])
            composer._daily = Counter(state["daily"])
            composer.history = [
                HistoryItem(h["cluster_id"], parse_ts(h["emitted_at"]),
                            {f: Counter(cnt) for f, cnt in h["fields"].items()})
                for h in state["history"]
            ]
            composer.log = state["log"]

    def close(self) -> None:
        for log in self.logs.values():
            log.close()


def _ts(dt) -> str:
    from newswire.model import format_ts

    return format_ts(dt)


def run_pipeline(config: PipelineConfig) -> Pipeline:
    """Wire the stages; raise with an itemized report when artifacts are
    missing. The caller picks threaded start() or run_until_drained()."""
    return Pipeline(config)


def resume_pipeline(config: PipelineConfig,
                    snapshot_dir: Optional[str | Path] = None) -> Pipeline:
    """Recover after a stop or crash over the same data_dir.

    With a snapshot, in-memory state and offsets come from it and only
    the log suffix replays. Without one, every consumer rewinds to the
    start of its log and the stages rebuild from scratch; effects are
    idempotent by tweet id, so the result matches an uninterrupted run.
    Either way ingest continues from the end of the tweets log, never
    re-appending.
    """
    pipe = Pipeline(config)
    if snapshot_dir is not None:
        pipe.restore_state(snapshot_dir)
    else:
        for name, group in _CONSUMERS:
            log = pipe.logs[name]
            log.commit(group, log.start_offset)
    return pipe


def train_default_models(out_dir: str | Path, scale: float = 1.0) -> None:
    """Fit every artifact on the bundled corpora and write them to out_dir.

    One-stop setup for demos and integration tests; the CLI exposes the
    individual trainers for piecemeal refreshes. scale < 1 shrinks the
    training corpora for faster, rougher fits.
    """
    import numpy as np

    from newswire import synthcorpus
    from newswire.disseminate import ImpactValue, train_impact_model
    from newswire.model import TopicLabel
    from newswire.newsworthy import train_object_model, train_topic_labeler
    from newswire.noisefilter import calibrate_thresholds, train_stage_models
    from newswire.topicmodel import train_topic_model
    from newswire.veracity import identify_source, train_veracity_model

    out = Path(out_dir)
    (out / "noise").mkdir(parents=True, exist_ok=True)

    corpus = synthcorpus.noise_corpus(size=max(2000, int(10000 * scale)))
    models = train_stage_models(corpus)
    calibrate_thresholds(models, corpus, 0.01)
    NoiseFilter(models).save(str(out / "noise"))

    for window, tag, seed in (("long_term", "long", 11), ("short_term", "short", 13)):
        texts = synthcorpus.news_account_corpus(window, max(400, int(1500 * scale)))
        train_topic_model(texts, [10, 20], window, seed=seed).save(
            str(out / f"topic_{tag}.json"))
        train_object_model(texts, window).save(str(out / f"object_{tag}.json"))

    graded = synthcorpus.graded_cluster_corpus(n_per_grade=max(20, int(60 * scale)))
    news = NewsModels(
        topic_long=TopicModel.load(str(out / "topic_long.json")),
        topic_short=TopicModel.load(str(out / "topic_short.json")),
        object_long=ObjectModel.load(str(out / "object_long.json")),
        object_short=ObjectModel.load(str(out / "object_short.json")),
    )
    X = np.array([news.components(c) for c, _ in graded])
    y = np.array([g for _, g in graded])
    combiner = OrdinalCombiner().fit(X, y)
    combiner.calibrate_taus(X, y)
    (out / "combiner.json").write_text(json.dumps(combiner.to_json()))

    labeler = train_topic_labeler(synthcorpus.topical_corpus())
    (out / "labeler.json").write_text(json.dumps(labeler.to_json()))

    cases, index = synthcorpus.veracity_corpus(n_per_grade=max(12, int(40 * scale)))
    earlies = [(synthcorpus.early_view(c),
                identify_source(synthcorpus.early_view(c), index), g)
               for c, g in cases]
    devs = [(c, identify_source(c, index), g) for c, g in cases]
    train_veracity_model(earlies, devs).save(str(out / "veracity.json"))

    rows = [(t, TopicLabel(tp), ImpactValue(lv))
            for t, tp, lv in synthcorpus.impact_snippets()]
    train_impact_model(rows).save(str(out / "impact.json"))

"""Two-phase streaming event detection.

Phase one groups three mutually similar candidate tweets into a unit
cluster. Phase two merges the unit into the closest active cluster in
the pool, or calls it out as a brand-new event when nothing is close
enough. Everything is deterministic for a fixed input order: ties break
by earlier arrival and by lowest cluster id.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, TextIO

from newswire.model import (
    EventCluster,
    SparseVector,
    Tweet,
    cosine,
    format_ts,
    mean_vector,
    parse_ts,
)

THETA_UNIT = 0.50
THETA_MERGE = 0.40
IDLE_TTL = timedelta(hours=12)
INDEX_QUERY_TERMS = 10


@dataclass
class Unit:
    """Three tweets whose pairwise similarity clears the unit threshold."""

    tweets: list[Tweet]
    vectors: dict[str, SparseVector]

    @property
    def centroid(self) -> SparseVector:
        # same distinct-text rule the cluster applies
        seen: dict[str, SparseVector] = {}
        for t in self.tweets:
            key = " ".join(t.text.lower().split())
            seen.setdefault(key, self.vectors[t.id])
        return mean_vector(list(seen.values()))


@dataclass
class _Buffered:
    tweet: Tweet
    vector: SparseVector
    seq: int


class PendingBuffer:
    """Holds candidates awaiting unit formation, bounded by age and size."""

    def __init__(self, window: timedelta = timedelta(minutes=60), max_size: int = 50000):
        self.window = window
        self.max_size = max_size
        self._items: dict[str, _Buffered] = {}
        self._seq = 0

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self._items

    def add(self, tweet: Tweet, vector: SparseVector) -> None:
        self._items[tweet.id] = _Buffered(tweet, vector, self._seq)
        self._seq += 1
        if len(self._items) > self.max_size:
            # overflow: drop strictly oldest by arrival
            oldest = min(self._items.values(), key=lambda b: b.seq)
            del self._items[oldest.tweet.id]

    def remove(self, tweet_id: str) -> None:
        self._items.pop(tweet_id, None)

    def evict_aged(self, now: datetime) -> list[str]:
        cutoff = now - self.window
        dead = [tid for tid, b in self._items.items() if b.tweet.created_at < cutoff]
        for tid in dead:
            del self._items[tid]
        return dead

    def entries(self) -> list[_Buffered]:
        return sorted(self._items.values(), key=lambda b: b.seq)

    def snapshot(self) -> dict:
        from newswire.model import tweet_to_json
        return {
            "seq": self._seq,
            "items": [
                {"tweet": tweet_to_json(b.tweet), "vector": b.vector.to_json(), "seq": b.seq}
                for b in self.entries()
            ],
        }

    @classmethod
    def restore(cls, obj: dict, window: timedelta = timedelta(minutes=60),
                max_size: int = 50000) -> "PendingBuffer":
        from newswire.model import tweet_from_json
        buf = cls(window, max_size)
        buf._seq = obj["seq"]
        for item in obj["items"]:
            t = tweet_from_json(item["tweet"])
            buf._items[t.id] = _Buffered(t, SparseVector.from_json(item["vector"]), item["seq"])
        return buf


def try_form_unit(tweet: Tweet, vector: SparseVector, buffer: PendingBuffer,
                  theta_unit: float = THETA_UNIT) -> Unit | None:
    """Greedy unit formation on arrival.

    Pick the two buffered tweets most similar to the newcomer (both must
    clear theta_unit), then verify the partners also clear it against each
    other. On success the partners leave the buffer; on any failure the
    newcomer is buffered instead.
    """
    scored = []
    for b in buffer.entries():
        sim = cosine(vector, b.vector)
        if sim >= theta_unit:
            # ties: higher similarity first, then earlier arrival
            scored.append((-sim, b.seq, b))
    scored.sort()
    if len(scored) >= 2:
        first, second = scored[0][2], scored[1][2]
        if cosine(first.vector, second.vector) >= theta_unit:
            buffer.remove(first.tweet.id)
            buffer.remove(second.tweet.id)
            members = sorted([first, second], key=lambda b: b.seq)
            tweets = [m.tweet for m in members] + [tweet]
            vectors = {m.tweet.id: m.vector for m in members}
            vectors[tweet.id] = vector
            return Unit(tweets, vectors)
    buffer.add(tweet, vector)
    return None


@dataclass
class MergeOutcome:
    kind: str  # "merged" | "new_event"
    cluster: EventCluster
    similarity: float = 0.0
    added: int = 0  # members this outcome appended


class ClusterPool:
    """Active clusters plus the inverted centroid-term index."""

    def __init__(self, theta_merge: float = THETA_MERGE, idle_ttl: timedelta = IDLE_TTL):
        self.theta_merge = theta_merge
        self.idle_ttl = idle_ttl
        self.clusters: dict[str, EventCluster] = {}
        self.archived: dict[str, EventCluster] = {}
        self._index: dict[int, set[str]] = {}
        self._indexed_terms: dict[str, set[int]] = {}
        self._next_id = 1

    # ------------------------------------------------------------- index

    def _reindex(self, cluster: EventCluster) -> None:
        cid = cluster.cluster_id
        new_terms = set(cluster.centroid.entries)
        old_terms = self._indexed_terms.get(cid, set())
        for t in old_terms - new_terms:
            bucket = self._index.get(t)
            if bucket:
                bucket.discard(cid)
                if not bucket:
                    del self._index[t]
        for t in new_terms - old_terms:
            self._index.setdefault(t, set()).add(cid)
        self._indexed_terms[cid] = new_terms

    def _deindex(self, cid: str) -> None:
        for t in self._indexed_terms.pop(cid, set()):
            bucket = self._index.get(t)
            if bucket:
                bucket.discard(cid)
                if not bucket:
                    del self._index[t]

    def indexed_terms(self, cid: str) -> set[int]:
        return set(self._indexed_terms.get(cid, set()))

    # ------------------------------------------------------------- lookup

    def candidate_ids(self, query: SparseVector, k: int = INDEX_QUERY_TERMS) -> list[str]:
        ids: set[str] = set()
        for term in query.top_terms(k):
            ids.update(self._index.get(term, ()))
        return sorted(ids)

    def _best_among(self, ids: Iterable[str], query: SparseVector) -> tuple[str | None, float]:
        best_id, best_sim = None, 0.0
        for cid in ids:  # ids pre-sorted: equal similarity keeps lowest id
            sim = cosine(query, self.clusters[cid].centroid)
            if sim > best_sim:
                best_id, best_sim = cid, sim
        return best_id, best_sim

    def best_match(self, query: SparseVector) -> tuple[str | None, float]:
        return self._best_among(self.candidate_ids(query), query)

    def best_match_fullscan(self, query: SparseVector) -> tuple[str | None, float]:
        """Exhaustive reference scan; the index path must agree with this."""
        return self._best_among(sorted(self.clusters), query)

    # ------------------------------------------------------------- mutate

    def _new_cluster_id(self) -> str:
        cid = f"evt-{self._next_id:06d}"
        self._next_id += 1
        return cid

    def merge_or_emit(self, unit: Unit, use_index: bool = True) -> MergeOutcome:
        query = unit.centroid
        if use_index:
            cid, sim = self.best_match(query)
        else:
            cid, sim = self.best_match_fullscan(query)
        if cid is not None and sim >= self.theta_merge:
            cluster = self.clusters[cid]
            for t in unit.tweets:
                cluster.add(t, unit.vectors[t.id])
            self._reindex(cluster)
            return MergeOutcome("merged", cluster, sim, added=len(unit.tweets))
        created = min(t.created_at for t in unit.tweets)
        cluster = EventCluster(cluster_id=self._new_cluster_id(), created_at=created)
        for t in unit.tweets:
            cluster.add(t, unit.vectors[t.id])
        self.clusters[cluster.cluster_id] = cluster
        self._reindex(cluster)
        return MergeOutcome("new_event", cluster, sim, added=len(unit.tweets))

    def archive_idle(self, now: datetime, idle_ttl: timedelta | None = None) -> list[str]:
        ttl = idle_ttl or self.idle_ttl
        cutoff = now - ttl
        stale = sorted(cid for cid, c in self.clusters.items() if c.updated_at < cutoff)
        for cid in stale:
            cluster = self.clusters.pop(cid)
            cluster.archive()
            self.archived[cid] = cluster
            self._deindex(cid)
        return stale

    # ------------------------------------------------------------- persist

    def snapshot(self) -> dict:
        return {
            "next_id": self._next_id,
            "theta_merge": self.theta_merge,
            "clusters": [self.clusters[cid].to_json() for cid in sorted(self.clusters)],
            "archived": [self.archived[cid].to_json() for cid in sorted(self.archived)],
        }

    @classmethod
    def restore(cls, obj: dict, idle_ttl: timedelta = IDLE_TTL) -> "ClusterPool":
        pool = cls(theta_merge=obj.get("theta_merge", THETA_MERGE), idle_ttl=idle_ttl)
        pool._next_id = obj["next_id"]
        for cobj in obj["clusters"]:
            c = EventCluster.from_json(cobj)
            pool.clusters[c.cluster_id] = c
            pool._reindex(c)
        for cobj in obj.get("archived", []):
            c = EventCluster.from_json(cobj)
            pool.archived[c.cluster_id] = c
        return pool

    def write_snapshot_jsonl(self, fh: TextIO) -> None:
        for cid in sorted(self.clusters):
            fh.write(json.dumps(self.clusters[cid].to_json(), sort_keys=True) + "\n")
        for cid in sorted(self.archived):
            fh.write(json.dumps(self.archived[cid].to_json(), sort_keys=True) + "\n")


@dataclass
class ClusterEvent:
    """What happened when one candidate tweet hit the clusterer."""

    kind: str  # "buffered" | "new_event" | "merged"
    tweet_id: str
    cluster_id: str | None = None
    similarity: float = 0.0
    added: int = 0


class StreamClusterer:
    """Wires the pending buffer to the pool for one-pass streaming use."""

    def __init__(self, theta_unit: float = THETA_UNIT, theta_merge: float = THETA_MERGE,
                 buffer_window: timedelta = timedelta(minutes=60),
                 buffer_max: int = 50000, idle_ttl: timedelta = IDLE_TTL,
                 use_index: bool = True):
        self.theta_unit = theta_unit
        self.buffer = PendingBuffer(buffer_window, buffer_max)
        self.pool = ClusterPool(theta_merge, idle_ttl)
        self.use_index = use_index
        self._seen: set[str] = set()

    def has_seen(self, tweet_id: str) -> bool:
        return tweet_id in self._seen

    def offer(self, tweet: Tweet, vector: SparseVector) -> ClusterEvent:
        # at-least-once upstream: a redelivered id is a strict no-op, even
        # if its first delivery was evicted from the buffer long ago
        if tweet.id in self._seen:
            return ClusterEvent("buffered", tweet.id)
        self._seen.add(tweet.id)
        self.buffer.evict_aged(tweet.created_at)
        unit = try_form_unit(tweet, vector, self.buffer, self.theta_unit)
        if unit is None:
            return ClusterEvent("buffered", tweet.id)
        outcome = self.pool.merge_or_emit(unit, use_index=self.use_index)
        return ClusterEvent(outcome.kind, tweet.id, outcome.cluster.cluster_id,
                            outcome.similarity, outcome.added)

    def snapshot(self) -> dict:
        return {
            "buffer": self.buffer.snapshot(),
            "pool": self.pool.snapshot(),
            "seen": sorted(self._seen),
            "theta_unit": self.theta_unit,
        }

    @classmethod
    def restore(cls, obj: dict, **kw) -> "StreamClusterer":
        inst = cls(theta_unit=obj.get("theta_unit", THETA_UNIT), **kw)
        inst.buffer = PendingBuffer.restore(obj["buffer"],
                                            inst.buffer.window, inst.buffer.max_size)
        inst.pool = ClusterPool.restore(obj["pool"], idle_ttl=inst.pool.idle_ttl)
        inst.pool.theta_merge = obj["pool"].get("theta_merge", inst.pool.theta_merge)
        inst._seen = set(obj["seen"])
        return inst

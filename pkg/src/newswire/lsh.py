"""Minhash/LSH event-detection baseline.

Same 3-tweet unit and pool-merge protocol as the main clusterer, but
partner and cluster candidate search is restricted to tweets or clusters
that collide in at least one LSH band. Exists to be benchmarked against,
not to win.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta

from newswire.cluster import ClusterEvent, MergeOutcome, Unit, THETA_MERGE, THETA_UNIT
from newswire.model import EventCluster, SparseVector, Tweet, cosine

_PRIME = (1 << 61) - 1


class MinHasher:
    def __init__(self, n_hashes: int = 64, seed: int = 97):
        rng = random.Random(seed)
        self.coeffs = [(rng.randrange(1, _PRIME), rng.randrange(0, _PRIME))
                       for _ in range(n_hashes)]

    def signature(self, terms: set[int]) -> tuple[int, ...]:
        if not terms:
            return tuple([0] * len(self.coeffs))
        sig = []
        for a, b in self.coeffs:
            sig.append(min((a * t + b) % _PRIME for t in terms))
        return tuple(sig)


def band_keys(sig: tuple[int, ...], bands: int = 16) -> list[tuple[int, tuple[int, ...]]]:
    r = len(sig) // bands
    return [(i, sig[i * r:(i + 1) * r]) for i in range(bands)]


class LshClusterer:
    """Bucketed variant of the streaming clusterer."""

    def __init__(self, theta_unit: float = THETA_UNIT, theta_merge: float = THETA_MERGE,
                 n_hashes: int = 64, bands: int = 16, seed: int = 97,
                 buffer_window: timedelta = timedelta(minutes=60)):
        self.theta_unit = theta_unit
        self.theta_merge = theta_merge
        self.hasher = MinHasher(n_hashes, seed)
        self.bands = bands
        self.buffer_window = buffer_window
        # pending tweets
        self._pending: dict[str, tuple[Tweet, SparseVector, tuple]] = {}
        self._pending_buckets: dict[tuple, set[str]] = {}
        self._seq: dict[str, int] = {}
        self._n = 0
        # clusters
        self.clusters: dict[str, EventCluster] = {}
        self._cluster_buckets: dict[tuple, set[str]] = {}
        self._cluster_keys: dict[str, list[tuple]] = {}
        self._next_id = 1
        self._seen: set[str] = set()

    # --------------------------------------------------------- buffer side

    def _buffer_add(self, tweet: Tweet, vector: SparseVector, sig) -> None:
        self._pending[tweet.id] = (tweet, vector, sig)
        self._seq[tweet.id] = self._n
        self._n += 1
        for key in band_keys(sig, self.bands):
            self._pending_buckets.setdefault(key, set()).add(tweet.id)

    def _buffer_remove(self, tweet_id: str) -> None:
        entry = self._pending.pop(tweet_id, None)
        if entry is None:
            return
        _, _, sig = entry
        for key in band_keys(sig, self.bands):
            bucket = self._pending_buckets.get(key)
            if bucket:
                bucket.discard(tweet_id)
                if not bucket:
                    del self._pending_buckets[key]

    def _evict_aged(self, now: datetime) -> None:
        cutoff = now - self.buffer_window
        for tid in [tid for tid, (t, _, _) in self._pending.items()
                    if t.created_at < cutoff]:
            self._buffer_remove(tid)

    def _colliding_pending(self, sig) -> list[str]:
        ids: set[str] = set()
        for key in band_keys(sig, self.bands):
            ids.update(self._pending_buckets.get(key, ()))
        return sorted(ids, key=lambda tid: self._seq[tid])

    # --------------------------------------------------------- cluster side

    def _index_cluster(self, cluster: EventCluster) -> None:
        cid = cluster.cluster_id
        for key in self._cluster_keys.pop(cid, []):
            bucket = self._cluster_buckets.get(key)
            if bucket:
                bucket.discard(cid)
                if not bucket:
                    del self._cluster_buckets[key]
        sig = self.hasher.signature(set(cluster.centroid.entries))
        keys = band_keys(sig, self.bands)
        for key in keys:
            self._cluster_buckets.setdefault(key, set()).add(cid)
        self._cluster_keys[cid] = keys

    def _colliding_clusters(self, sig) -> list[str]:
        ids: set[str] = set()
        for key in band_keys(sig, self.bands):
            ids.update(self._cluster_buckets.get(key, ()))
        return sorted(ids)

    # --------------------------------------------------------- protocol

    def offer(self, tweet: Tweet, vector: SparseVector) -> ClusterEvent:
        if tweet.id in self._seen:
            return ClusterEvent("buffered", tweet.id)
        self._seen.add(tweet.id)
        self._evict_aged(tweet.created_at)
        sig = self.hasher.signature(set(vector.entries))
        scored = []
        for tid in self._colliding_pending(sig):
            _, pvec, _ = self._pending[tid]
            sim = cosine(vector, pvec)
            if sim >= self.theta_unit:
                scored.append((-sim, self._seq[tid], tid))
        scored.sort()
        if len(scored) >= 2:
            a, b = scored[0][2], scored[1][2]
            ta, va, _ = self._pending[a]
            tb, vb, _ = self._pending[b]
            if cosine(va, vb) >= self.theta_unit:
                self._buffer_remove(a)
                self._buffer_remove(b)
                pair = sorted([(self._seq.get(a, 0), ta, va), (self._seq.get(b, 0), tb, vb)])
                tweets = [pair[0][1], pair[1][1], tweet]
                vectors = {ta.id: va, tb.id: vb, tweet.id: vector}
                unit = Unit(tweets, vectors)
                outcome = self._merge_or_emit(unit)
                return ClusterEvent(outcome.kind, tweet.id,
                                    outcome.cluster.cluster_id, outcome.similarity)
        self._buffer_add(tweet, vector, sig)
        return ClusterEvent("buffered", tweet.id)

    def _merge_or_emit(self, unit: Unit) -> MergeOutcome:
        query = unit.centroid
        qsig = self.hasher.signature(set(query.entries))
        best_id, best_sim = None, 0.0
        for cid in self._colliding_clusters(qsig):
            sim = cosine(query, self.clusters[cid].centroid)
            if sim > best_sim:
                best_id, best_sim = cid, sim
        if best_id is not None and best_sim >= self.theta_merge:
            cluster = self.clusters[best_id]
            for t in unit.tweets:
                cluster.add(t, unit.vectors[t.id])
            self._index_cluster(cluster)
            return MergeOutcome("merged", cluster, best_sim)
        cid = f"lsh-{self._next_id:06d}"
        self._next_id += 1
        cluster = EventCluster(cluster_id=cid,
                               created_at=min(t.created_at for t in unit.tweets))
        for t in unit.tweets:
            cluster.add(t, unit.vectors[t.id])
        self.clusters[cid] = cluster
        self._index_cluster(cluster)
        return MergeOutcome("new_event", cluster, best_sim)

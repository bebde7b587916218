import json
import random
from collections import Counter
from datetime import timedelta

import pytest

from newswire.cluster import (
    ClusterPool,
    PendingBuffer,
    StreamClusterer,
    Unit,
    try_form_unit,
)
from newswire.lsh import LshClusterer
from newswire.model import (
    DocumentFrequencyTable,
    SparseVector,
    Tweet,
    UserRef,
    cosine,
    parse_ts,
    tfidf_vector,
    tokenize,
)
from newswire.synthcorpus import clustering_corpus, corpus_vectors


def mk(tid, text, ts="2016-09-01T10:00:00Z"):
    return Tweet(id=tid, created_at=parse_ts(ts), text=text,
                 author=UserRef(user_id="u" + tid, handle="h" + tid))


@pytest.fixture(scope="session")
def corpus0():
    tweets, truth = clustering_corpus(0)
    vecs, _ = corpus_vectors(tweets)
    return tweets, truth, vecs


@pytest.fixture(scope="session")
def corpus4():
    tweets, truth = clustering_corpus(4)
    vecs, _ = corpus_vectors(tweets)
    return tweets, truth, vecs


def unit_vec(entries):
    return SparseVector(dict(entries))


# ---------------------------------------------------------------- unit formation


def test_unit_forms_on_third_near_duplicate():
    buf = PendingBuffer()
    v = unit_vec({1: 1.0, 2: 1.0})
    assert try_form_unit(mk("a", "x"), v, buf) is None
    assert try_form_unit(mk("b", "x"), v, buf) is None
    unit = try_form_unit(mk("c", "x"), v, buf)
    assert unit is not None
    assert sorted(t.id for t in unit.tweets) == ["a", "b", "c"]
    assert len(buf) == 0


def test_no_unit_when_third_pair_fails():
    buf = PendingBuffer()
    # a and b both similar to the newcomer, but orthogonal to each other
    try_form_unit(mk("a", "x"), unit_vec({1: 1.0}), buf)
    try_form_unit(mk("b", "x"), unit_vec({2: 1.0}), buf)
    newcomer = unit_vec({1: 1.0, 2: 1.0})  # cos ~0.707 with both
    unit = try_form_unit(mk("c", "x"), newcomer, buf)
    assert unit is None
    assert len(buf) == 3


def test_two_similar_one_orthogonal_all_buffered():
    buf = PendingBuffer()
    try_form_unit(mk("a", "x"), unit_vec({1: 1.0, 2: 1.0}), buf)
    try_form_unit(mk("b", "x"), unit_vec({9: 1.0}), buf)  # orthogonal
    unit = try_form_unit(mk("c", "x"), unit_vec({1: 1.0, 2: 1.0, 3: 0.1}), buf)
    # only one qualifying partner -> no unit
    assert unit is None
    assert len(buf) == 3


def test_unit_partner_greedy_is_strict_no_backtracking():
    # p1 and p3 are identical; p2 is orthogonal to both. The newcomer ties
    # with all three, so greedy picks the two earliest (p1, p2), verifies
    # their pair, fails, and buffers the newcomer. No fallback to (p1, p3).
    buf = PendingBuffer()
    try_form_unit(mk("p1", "x"), unit_vec({1: 1.0}), buf)
    try_form_unit(mk("p2", "x"), unit_vec({2: 1.0}), buf)
    try_form_unit(mk("p3", "x"), unit_vec({1: 1.0}), buf)
    unit = try_form_unit(mk("new", "x"), unit_vec({1: 1.0, 2: 1.0}), buf)
    assert unit is None
    assert len(buf) == 4


def test_unit_partner_tiebreak_prefers_earlier_arrival():
    # buffer: p1 {1}, p2 {2}, p3 {1}. A newcomer at {1} ties p1 and p3 at
    # similarity 1; the earlier pair (p1, p3) is chosen and verifies.
    buf = PendingBuffer()
    try_form_unit(mk("p1", "x"), unit_vec({1: 1.0}), buf)
    try_form_unit(mk("p2", "x"), unit_vec({2: 1.0}), buf)
    try_form_unit(mk("p3", "x"), unit_vec({1: 1.0}), buf)
    unit = try_form_unit(mk("new", "x"), unit_vec({1: 1.0}), buf)
    assert unit is not None
    assert sorted(t.id for t in unit.tweets) == ["new", "p1", "p3"]
    assert "p2" in buf and len(buf) == 1


def test_buffer_evicts_by_age():
    buf = PendingBuffer(window=timedelta(minutes=60))
    buf.add(mk("old", "x", ts="2016-09-01T08:00:00Z"), unit_vec({1: 1.0}))
    buf.add(mk("fresh", "x", ts="2016-09-01T09:30:00Z"), unit_vec({2: 1.0}))
    gone = buf.evict_aged(parse_ts("2016-09-01T10:00:00Z"))
    assert gone == ["old"]
    assert "fresh" in buf


def test_buffer_overflow_drops_oldest():
    buf = PendingBuffer(max_size=2)
    for tid in ("a", "b", "c"):
        buf.add(mk(tid, "x"), unit_vec({1: 1.0}))
    assert "a" not in buf and "b" in buf and "c" in buf


def test_planted_units_match_plants(corpus0):
    tweets, truth, vecs = corpus0
    # brute-force oracle: every plant admits at least one all-pairs triple
    by_event = {}
    for t in tweets:
        e = truth[t.id]
        if e is not None:
            by_event.setdefault(e, []).append(t)
    for e, members in by_event.items():
        ok = False
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                for k in range(j + 1, len(members)):
                    a, b, c = members[i], members[j], members[k]
                    if (cosine(vecs[a.id], vecs[b.id]) >= 0.5
                            and cosine(vecs[a.id], vecs[c.id]) >= 0.5
                            and cosine(vecs[b.id], vecs[c.id]) >= 0.5):
                        ok = True
                        break
                if ok:
                    break
            if ok:
                break
        assert ok, f"plant {e} has no qualifying triple"

    sc = StreamClusterer()
    for t in tweets:
        sc.offer(t, vecs[t.id])
    assert len(sc.pool.clusters) >= 5
    for c in sc.pool.clusters.values():
        labels = {truth[t.id] for t in c.tweets}
        assert len(labels) == 1 and None not in labels  # members match one plant


# ---------------------------------------------------------------- pool merge


def test_empty_pool_new_event():
    pool = ClusterPool()
    unit = Unit([mk("a", "x"), mk("b", "x"), mk("c", "x")],
                {t: unit_vec({1: 1.0}) for t in ("a", "b", "c")})
    out = pool.merge_or_emit(unit)
    assert out.kind == "new_event"
    assert out.cluster.size == 3


def test_identical_unit_merges():
    pool = ClusterPool()
    v = unit_vec({1: 1.0, 2: 2.0})
    u1 = Unit([mk("a", "same text"), mk("b", "same text"), mk("c", "same text")],
              {t: v for t in ("a", "b", "c")})
    first = pool.merge_or_emit(u1).cluster
    u2 = Unit([mk("d", "same text"), mk("e", "same text"), mk("f", "same text")],
              {t: v for t in ("d", "e", "f")})
    out = pool.merge_or_emit(u2)
    assert out.kind == "merged"
    assert out.cluster.cluster_id == first.cluster_id
    assert out.cluster.size == 6


def test_index_matches_fullscan_on_200_cluster_pool():
    rng = random.Random(42)
    from newswire import resources
    words = sorted(resources.english_words())
    pool = ClusterPool()
    df = DocumentFrequencyTable()
    cores = [rng.sample(words, 8) for _ in range(220)]
    texts = []
    for core in cores:
        for _ in range(3):
            t = core[:]
            rng.shuffle(t)
            texts.append(" ".join(t[:7]))
    for text in texts:
        df.add_document(tokenize(text))

    def vec(text):
        return tfidf_vector(tokenize(text), df)

    n = 0
    for core in cores[:200]:
        ts = [" ".join(rng.sample(core, 7)) for _ in range(3)]
        unit = Unit([mk(f"u{n}_{i}", ts[i]) for i in range(3)],
                    {f"u{n}_{i}": vec(ts[i]) for i in range(3)})
        pool.merge_or_emit(unit)
        n += 1
    assert len(pool.clusters) >= 150  # most cores distinct enough

    for core in cores[:100] + cores[200:]:
        q = vec(" ".join(rng.sample(core, 7)))
        assert pool.best_match(q) == pool.best_match_fullscan(q)


def test_index_contains_exactly_active_centroid_terms():
    pool = ClusterPool()
    v1, v2 = unit_vec({1: 1.0, 2: 1.0}), unit_vec({2: 1.0, 3: 1.0})
    u = Unit([mk("a", "t one"), mk("b", "t two"), mk("c", "t three")],
             {"a": v1, "b": v2, "c": v1})
    c = pool.merge_or_emit(u).cluster
    assert pool.indexed_terms(c.cluster_id) == set(c.centroid.entries)
    pool.archive_idle(parse_ts("2016-09-03T10:00:00Z"))
    assert pool.indexed_terms(c.cluster_id) == set()


# ---------------------------------------------------------------- archive


def _cluster_at(pool, tid_prefix, ts):
    u = Unit([mk(tid_prefix + s, "text " + tid_prefix, ts) for s in "abc"],
             {tid_prefix + s: unit_vec({hash(tid_prefix) % 997 + 1: 1.0}) for s in "abc"})
    return pool.merge_or_emit(u).cluster


def test_archive_thirteen_hours_idle():
    pool = ClusterPool()
    c = _cluster_at(pool, "x", "2016-09-01T00:00:00Z")
    archived = pool.archive_idle(parse_ts("2016-09-01T13:00:00Z"))
    assert archived == [c.cluster_id]
    assert c.status.value == "archived"


def test_archive_skips_fresh():
    pool = ClusterPool()
    _cluster_at(pool, "y", "2016-09-01T12:59:00Z")
    assert pool.archive_idle(parse_ts("2016-09-01T13:00:00Z")) == []


def test_archive_mixed_pool_exact_set():
    pool = ClusterPool()
    stamps = [f"2016-09-01T{h:02d}:00:00Z" for h in range(10)]
    clusters = [_cluster_at(pool, f"m{i}", ts) for i, ts in enumerate(stamps)]
    now = parse_ts("2016-09-01T18:30:00Z")
    expected = sorted(c.cluster_id for c in clusters
                      if (now - c.updated_at) > timedelta(hours=12))
    assert pool.archive_idle(now) == expected


# ---------------------------------------------------------------- invariants


def test_partition_and_min_size(corpus0):
    tweets, _, vecs = corpus0
    sc = StreamClusterer()
    for t in tweets:
        sc.offer(t, vecs[t.id])
    seen = {}
    for cid, c in sc.pool.clusters.items():
        assert c.size >= 3
        for t in c.tweets:
            assert t.id not in seen, "tweet in two clusters"
            seen[t.id] = cid
            assert t.id not in sc.buffer


def test_determinism_byte_identical(corpus0):
    tweets, _, vecs = corpus0
    snaps = []
    for _ in range(2):
        sc = StreamClusterer()
        for t in tweets:
            sc.offer(t, vecs[t.id])
        snaps.append(json.dumps(sc.snapshot(), sort_keys=True))
    assert snaps[0] == snaps[1]


def test_index_equals_fullscan_assignments(corpus0):
    tweets, _, vecs = corpus0
    maps = []
    for use_index in (True, False):
        sc = StreamClusterer(use_index=use_index)
        for t in tweets:
            sc.offer(t, vecs[t.id])
        maps.append({t.id: cid for cid, c in sc.pool.clusters.items()
                     for t in c.tweets})
    assert maps[0] == maps[1]


def test_snapshot_restore_roundtrip(corpus0):
    tweets, _, vecs = corpus0
    sc = StreamClusterer()
    half = len(tweets) // 2
    for t in tweets[:half]:
        sc.offer(t, vecs[t.id])
    snap = json.loads(json.dumps(sc.snapshot()))
    sc2 = StreamClusterer.restore(snap)
    for t in tweets[half:]:
        a = sc.offer(t, vecs[t.id])
        b = sc2.offer(t, vecs[t.id])
        assert (a.kind, a.cluster_id) == (b.kind, b.cluster_id)
    assert json.dumps(sc.snapshot(), sort_keys=True) == json.dumps(sc2.snapshot(), sort_keys=True)


def test_redelivery_is_idempotent(corpus0):
    tweets, _, vecs = corpus0
    sc = StreamClusterer()
    for t in tweets[:200]:
        sc.offer(t, vecs[t.id])
    before = json.dumps(sc.snapshot(), sort_keys=True)
    for t in tweets[:200]:  # deliver everything again
        out = sc.offer(t, vecs[t.id])
        assert out.kind == "buffered"
    assert json.dumps(sc.snapshot(), sort_keys=True) == before


# ---------------------------------------------------------------- lsh baseline


def _detected(clusters, truth):
    found = set()
    for c in clusters.values():
        labels = Counter(truth[t.id] for t in c.tweets)
        top, count = labels.most_common(1)[0]
        if top is not None and count >= 3:
            found.add(top)
    return found


def test_lsh_detects_identical_planted_event():
    texts = ["big fire at the old mill tonight"] * 3
    df = DocumentFrequencyTable()
    for t in texts:
        df.add_document(tokenize(t))
    df.n_docs += 50
    lc = LshClusterer()
    sc = StreamClusterer()
    for i, text in enumerate(texts):
        t = mk(f"i{i}", text)
        v = tfidf_vector(tokenize(text), df)
        lc.offer(t, v)
        sc.offer(t, v)
    assert len(lc.clusters) == 1
    assert len(sc.pool.clusters) == 1


def test_full_search_recall_at_least_lsh(corpus4):
    tweets, truth, vecs = corpus4
    sc = StreamClusterer()
    lc = LshClusterer()
    for t in tweets:
        sc.offer(t, vecs[t.id])
        lc.offer(t, vecs[t.id])
    full = _detected(sc.pool.clusters, truth)
    lsh = _detected(lc.clusters, truth)
    assert lsh <= full
    assert len(full) >= len(lsh)
    assert len(full) == 50  # full search recovers every plant on this corpus

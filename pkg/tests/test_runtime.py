"""Topic logs, the query grammar, the stage graph, and its HTTP front."""
import json
import threading
import time
import urllib.error
import urllib.request
from datetime import timedelta

import pytest

from newswire import synthcorpus
from newswire.api import ApiServer
from newswire.disseminate import DEFAULT_PROFILES
from newswire.logstore import TopicLog
from newswire.model import (
    EventCluster,
    TopicLabel,
    Tweet,
    UserRef,
    tweet_to_json,
)
from newswire.pipeline import (
    ChannelFilters,
    LatencyRecord,
    MissingArtifacts,
    Pipeline,
    PipelineConfig,
    resume_pipeline,
    run_pipeline,
)
from newswire.query import (
    And,
    Cashtag,
    Hashtag,
    Not,
    Or,
    Phrase,
    QueryParseError,
    Term,
    match_cluster,
    node_from_json,
    node_to_json,
    parse_query,
)
from newswire.synthcorpus import EPOCH

# ------------------------------------------------------------- topic logs


def test_append_assigns_monotonic_offsets(tmp_path):
    log = TopicLog("t", tmp_path)
    offs = [log.append({"n": i}) for i in range(5)]
    assert offs == [0, 1, 2, 3, 4]
    assert log.end_offset == 5


def test_read_from_rereads_to_end(tmp_path):
    # resuming from k must re-deliver k..end, nothing less
    log = TopicLog("t", tmp_path)
    for i in range(10):
        log.append({"n": i})
    got = log.read_from(4)
    assert [off for off, _ in got] == list(range(4, 10))
    assert [rec["n"] for _, rec in got] == list(range(4, 10))


def test_committed_offset_survives_reopen(tmp_path):
    log = TopicLog("t", tmp_path)
    for i in range(6):
        log.append({"n": i})
    log.commit("g", 4)
    log.close()

    again = TopicLog("t", tmp_path)
    assert again.committed("g") == 4
    assert [rec["n"] for _, rec in again.poll("g")] == [4, 5]


def test_segments_roll_at_configured_size(tmp_path):
    log = TopicLog("t", tmp_path, segment_records=3)
    for i in range(8):
        log.append({"n": i})
    files = sorted(p.name for p in (tmp_path / "t").glob("*.jsonl"))
    assert files == ["0000000000.jsonl", "0000000003.jsonl", "0000000006.jsonl"]
    # reads stitch across segments
    assert [rec["n"] for _, rec in log.read_from(2)] == list(range(2, 8))


def test_retention_retires_segments_and_guards_reads(tmp_path):
    log = TopicLog("t", tmp_path, segment_records=2, retain_segments=2)
    for i in range(10):
        log.append({"n": i})
    assert log.start_offset == 6
    with pytest.raises(KeyError):
        log.read_from(0)
    assert [rec["n"] for _, rec in log.read_from(6)] == [6, 7, 8, 9]


def test_torn_final_line_dropped_on_reopen(tmp_path):
    log = TopicLog("t", tmp_path)
    for i in range(3):
        log.append({"n": i})
    log.close()
    seg = tmp_path / "t" / "0000000000.jsonl"
    seg.write_text(seg.read_text() + '{"n": 3, "cut')

    again = TopicLog("t", tmp_path)
    assert again.end_offset == 3
    assert [rec["n"] for _, rec in again.read_from(0)] == [0, 1, 2]
    # the torn tail must not resurface after the next append
    again.append({"n": 3})
    assert [rec["n"] for _, rec in again.read_from(0)] == [0, 1, 2, 3]


def test_iter_all_round_trip(tmp_path):
    log = TopicLog("t", tmp_path, segment_records=4)
    rows = [{"n": i, "body": f"r{i}"} for i in range(11)]
    for r in rows:
        log.append(r)
    assert [rec for _, rec in log.iter_all()] == rows


def test_poll_advances_only_on_commit(tmp_path):
    log = TopicLog("t", tmp_path)
    for i in range(4):
        log.append({"n": i})
    first = log.poll("g", limit=2)
    assert [o for o, _ in first] == [0, 1]
    # no commit: the same records come back
    assert [o for o, _ in log.poll("g", limit=2)] == [0, 1]
    log.commit("g", 2)
    assert [o for o, _ in log.poll("g", limit=2)] == [2, 3]
    assert log.lag("g") == 2


# ----------------------------------------------------------- query parsing


def test_quoted_phrase_atom():
    assert parse_query('"US election"') == Phrase("us election")


def test_boolean_tree_with_negation():
    assert parse_query("fire AND NOT drill") == \
        And((Term("fire"), Not(Term("drill"))))


def test_hashtag_and_cashtag_atoms():
    assert parse_query("#okwx OR $AAPL") == Or((Hashtag("okwx"), Cashtag("AAPL")))


def test_adjacent_terms_parse_as_and():
    assert parse_query("warehouse fire") == And((Term("warehouse"), Term("fire")))
    assert parse_query("a b c") == And((Term("a"), Term("b"), Term("c")))


@pytest.mark.parametrize("text,pos", [
    ("fire AND", 8),
    ("(fire OR smoke", 0),  # points at the paren that never closes
    ("fire)", 4),
    ("", 0),
    ('""', 0),
    ("OR fire", 0),
])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(QueryParseError) as err:
        parse_query(text)
    assert err.value.position == pos
    assert err.value.message


def test_node_json_round_trip():
    node = parse_query('("US election" AND NOT #recount) OR $TWTR polls')
    assert node_from_json(node_to_json(node)) == node


def _query_cluster():
    rows = [
        ("q1", "Warehouse fire near the docks #portside", 0),
        ("q2", "Fire crews on scene at the docks", 30),
        ("q3", "Warehouse fire near the docks #portside", 60),  # retweet text
    ]
    tweets = [
        Tweet(id=i, created_at=EPOCH + timedelta(seconds=s), text=t,
              author=UserRef(user_id="u" + i, handle="h" + i), lang="en")
        for i, t, s in rows
    ]
    vecs, _ = synthcorpus.corpus_vectors(tweets)
    cluster = EventCluster("evt-000001", tweets[0].created_at)
    for t in tweets:
        cluster.add(t, vecs[t.id])
    return cluster


def test_matching_over_cluster_snapshots():
    cluster = _query_cluster()
    assert match_cluster(parse_query("fire AND docks"), cluster)
    assert match_cluster(parse_query('"fire crews on scene"'), cluster)
    assert match_cluster(parse_query("#portside"), cluster)
    assert not match_cluster(parse_query("fire AND NOT docks"), cluster)
    assert not match_cluster(parse_query("$AAPL"), cluster)
    assert match_cluster(parse_query("flood OR fire"), cluster)


# ------------------------------------------------------------ stage graph


def _write_replay(path, tweets):
    with open(path, "w") as f:
        for t in tweets:
            f.write(json.dumps(tweet_to_json(t)) + "\n")
    return str(path)


def _mixed_corpus(n_noise=400, corpus_idx=0):
    tweets, _ = synthcorpus.clustering_corpus(corpus_idx)
    noise = [t for t, _ in synthcorpus.noise_corpus(size=n_noise, seed=77)]
    return sorted(tweets + noise, key=lambda t: (t.created_at, t.id))


def _config(tmp_path, runtime_models, source, name="run", **kw):
    return PipelineConfig(
        data_dir=str(tmp_path / name),
        models_dir=str(runtime_models),
        sources=[source],
        batch=kw.pop("batch", 200),
        profiles={"disaster": DEFAULT_PROFILES["disaster"].to_json()},
        **kw,
    )


def _state_files(pipe, out_dir):
    """Snapshot and return {name: bytes} minus the offsets file, which is
    allowed to differ between an interrupted and a straight-through run."""
    pipe.snapshot_state(out_dir)
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())
            if p.name != "version.json"}


def test_missing_artifacts_refusal_is_itemized(tmp_path):
    cfg = PipelineConfig(data_dir=str(tmp_path / "d"),
                         models_dir=str(tmp_path / "empty"))
    with pytest.raises(MissingArtifacts) as err:
        run_pipeline(cfg)
    assert len(err.value.missing) == 11
    for path in err.value.missing:
        assert str(tmp_path / "empty") in path
    assert "combiner.json" in str(err.value)


def test_empty_corpus_starts_and_drains_clean(tmp_path, runtime_models):
    src = tmp_path / "empty.jsonl"
    src.write_text("")
    cfg = _config(tmp_path, runtime_models, str(src))
    pipe = run_pipeline(cfg)
    pipe.run_until_drained()
    report = pipe.metrics.report()
    assert report["counters"] == {}
    assert report["latency_ms"]["count"] == 0
    assert pipe.serving == {}
    pipe.close()


def test_replay_end_state_counts(tmp_path, runtime_models):
    allt = _mixed_corpus()
    src = _write_replay(tmp_path / "replay.jsonl", allt)
    pipe = run_pipeline(_config(tmp_path, runtime_models, src))
    pipe.run_until_drained()

    c = pipe.metrics.report()["counters"]
    assert c["ingested"] == len(allt)
    assert pipe.logs["tweets"].end_offset == len(allt)
    assert c["noise_dropped"] + c["candidates"] == c["ingested"]
    assert pipe.logs["candidates"].end_offset == c["candidates"]
    assert c["buffered"] + c["new_event"] + c["merged"] == c["candidates"]
    # every cluster-log record was enriched and served exactly once
    assert c["enriched"] == pipe.logs["clusters"].end_offset
    assert c["served"] == pipe.logs["enriched"].end_offset
    assert len(pipe.serving) == c["new_event"]
    assert set(pipe.serving) == set(pipe.clusterer.pool.clusters)
    assert pipe.drained()
    # one latency record per ingested tweet, all durations non-negative
    assert len(pipe.metrics.records) == c["ingested"]
    assert all(r.end_to_end_ms >= 0 for r in pipe.metrics.records)
    pipe.close()


def test_same_replay_twice_gives_identical_state(tmp_path, runtime_models):
    allt = _mixed_corpus()
    src = _write_replay(tmp_path / "replay.jsonl", allt)
    states = []
    for name in ("a", "b"):
        pipe = run_pipeline(_config(tmp_path, runtime_models, src, name=name))
        pipe.run_until_drained()
        states.append(_state_files(pipe, tmp_path / f"snap_{name}"))
        pipe.close()
    assert states[0] == states[1]


def test_crash_and_resume_matches_uninterrupted_run(tmp_path, runtime_models):
    allt = _mixed_corpus()
    src = _write_replay(tmp_path / "replay.jsonl", allt)

    straight = run_pipeline(_config(tmp_path, runtime_models, src, name="full"))
    straight.run_until_drained()
    want = _state_files(straight, tmp_path / "snap_full")
    straight.close()

    # push part of the corpus through, then die without draining
    crashed = run_pipeline(_config(tmp_path, runtime_models, src, name="crash"))
    for _ in range(3):
        crashed.step_ingest()
        crashed.step_noise()
        crashed.step_cluster()
    crashed.step_enrich()
    crashed.close()

    resumed = resume_pipeline(_config(tmp_path, runtime_models, src, name="crash"))
    resumed.run_until_drained()
    got = _state_files(resumed, tmp_path / "snap_resumed")
    # no lost tweets
    assert resumed.logs["tweets"].end_offset == len(allt)
    # no duplicate clusters, same members, same feed decisions
    assert got == want
    resumed.close()


def test_snapshot_restore_snapshot_is_byte_identical(tmp_path, runtime_models):
    allt = _mixed_corpus()
    src = _write_replay(tmp_path / "replay.jsonl", allt)
    cfg = _config(tmp_path, runtime_models, src)
    pipe = run_pipeline(cfg)
    pipe.create_channel("fire OR flood", {"min_size": 3})
    pipe.run_until_drained()
    pipe.snapshot_state(tmp_path / "s1")
    pipe.close()

    second = run_pipeline(cfg)
    second.restore_state(tmp_path / "s1")
    second.snapshot_state(tmp_path / "s2")
    second.close()

    first = {p.name: p.read_bytes() for p in sorted((tmp_path / "s1").iterdir())}
    again = {p.name: p.read_bytes() for p in sorted((tmp_path / "s2").iterdir())}
    assert first == again


def test_snapshot_requires_quiescence(tmp_path, runtime_models):
    allt = _mixed_corpus(n_noise=100)
    src = _write_replay(tmp_path / "replay.jsonl", allt)
    pipe = run_pipeline(_config(tmp_path, runtime_models, src))
    pipe.step_ingest()  # appended but unconsumed
    with pytest.raises(RuntimeError, match="quiescent"):
        pipe.snapshot_state(tmp_path / "no")
    pipe.close()


def test_restore_refuses_version_mismatch(tmp_path, runtime_models):
    src = tmp_path / "empty.jsonl"
    src.write_text("")
    cfg = _config(tmp_path, runtime_models, str(src))
    pipe = run_pipeline(cfg)
    pipe.run_until_drained()
    pipe.snapshot_state(tmp_path / "snap")
    meta = json.loads((tmp_path / "snap" / "version.json").read_text())
    meta["version"] = 99
    (tmp_path / "snap" / "version.json").write_text(json.dumps(meta))
    with pytest.raises(RuntimeError, match="version"):
        pipe.restore_state(tmp_path / "snap")
    pipe.close()


def test_restore_then_continue_equals_uninterrupted(tmp_path, runtime_models):
    allt = _mixed_corpus()
    src = _write_replay(tmp_path / "replay.jsonl", allt)
    cfg = _config(tmp_path, runtime_models, src)

    pipe = run_pipeline(cfg)
    pipe.step_ingest(600)
    while not pipe.drained():
        for step in (pipe.step_noise, pipe.step_cluster,
                     pipe.step_enrich, pipe.step_serve):
            step()
    pipe.snapshot_state(tmp_path / "mid")
    pipe.run_until_drained()
    want = _state_files(pipe, tmp_path / "snap_straight")
    pipe.close()

    back = run_pipeline(cfg)
    back.restore_state(tmp_path / "mid")
    back.run_until_drained()
    got = _state_files(back, tmp_path / "snap_restored")
    assert got == want
    back.close()


def test_latency_record_rejects_negative_durations():
    with pytest.raises(ValueError):
        LatencyRecord("t1", {}, -0.5)
    with pytest.raises(ValueError):
        LatencyRecord("t1", {"noise": -1.0}, 2.0)
    rec = LatencyRecord("t1", {"noise": 0.4, "cluster": 1.1}, 3.2)
    assert rec.end_to_end_ms == 3.2


# ------------------------------------------------------- channel filtering


def _filter_cluster(grade=None, dots=None, topic=None, n=1, hour=6):
    from newswire.newsworthy import NewsworthinessScore
    from newswire.veracity import Source, SourceKind, VeracityScore, VeracityStage

    when = EPOCH + timedelta(hours=hour)
    tweets = [
        Tweet(id=f"f{i}", created_at=when + timedelta(seconds=i),
              text=f"refinery fire spreading fast update {i}",
              author=UserRef(user_id=f"uf{i}", handle=f"hf{i}"), lang="en")
        for i in range(n)
    ]
    vecs, _ = synthcorpus.corpus_vectors(tweets)
    cluster = EventCluster("evt-000009", when)
    for t in tweets:
        cluster.add(t, vecs[t.id])
    if grade:
        cluster.newsworthiness = NewsworthinessScore(.5, .5, .5, .5, .5, .5, grade)
    if dots is not None:
        cluster.veracity = VeracityScore(
            0.4, VeracityStage.DEVELOPING, dots,
            Source(SourceKind.EARLIEST_TWEET, tweet_id="f0"))
    if topic:
        cluster.topic = TopicLabel(topic)
    return cluster


def test_channel_filters_are_pure_predicates():
    c = _filter_cluster(grade="partially_newsworthy", dots=4, topic="Crisis", n=3)
    assert ChannelFilters().accept(c)
    assert ChannelFilters(min_grade="partially_newsworthy").accept(c)
    assert not ChannelFilters(min_grade="newsworthy").accept(c)
    assert ChannelFilters(min_dots=4).accept(c)
    assert not ChannelFilters(min_dots=5).accept(c)
    assert ChannelFilters(topics=frozenset({"Crisis"})).accept(c)
    assert not ChannelFilters(topics=frozenset({"Sports"})).accept(c)
    assert ChannelFilters(min_size=3).accept(c)
    assert not ChannelFilters(min_size=4).accept(c)
    # time span brackets updated_at
    assert ChannelFilters(since="2016-09-01T00:00:00Z",
                          until="2016-09-02T00:00:00Z").accept(c)
    assert not ChannelFilters(until="2016-09-01T00:00:00Z").accept(c)


def test_channel_filters_missing_context_fails_closed():
    bare = _filter_cluster()
    assert not ChannelFilters(min_grade="partially_newsworthy").accept(bare)
    assert not ChannelFilters(min_dots=1).accept(bare)
    assert not ChannelFilters(topics=frozenset({"Crisis"})).accept(bare)


def test_unknown_grade_in_filters_rejected():
    with pytest.raises(ValueError):
        ChannelFilters.from_json({"min_grade": "breaking"})


# -------------------------------------------------------------- HTTP front


@pytest.fixture(scope="module")
def served(tmp_path_factory, runtime_models):
    tmp = tmp_path_factory.mktemp("api")
    allt = _mixed_corpus()
    src = _write_replay(tmp / "replay.jsonl", allt)
    static = tmp / "static"
    static.mkdir()
    (static / "index.html").write_text("<h1>console</h1>")
    (static / "app.js").write_text("export {};")
    pipe = run_pipeline(_config(tmp, runtime_models, src))
    pipe.run_until_drained()
    api = ApiServer(pipe, static_dir=str(static))
    api.start()
    yield pipe, api
    api.stop()
    pipe.close()


def _get(base, path):
    try:
        with urllib.request.urlopen(base + path) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def _send(base, path, body, method):
    req = urllib.request.Request(base + path, data=json.dumps(body).encode(),
                                 method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def test_post_channel_and_parse_error(served):
    pipe, api = served
    status, ch = _send(api.address, "/channels",
                       {"query": "fire OR #okwx", "filters": {"min_size": 3}}, "POST")
    assert status == 201
    assert ch["id"].startswith("ch-")
    assert ch["filters"] == {"min_size": 3}

    status, err = _send(api.address, "/channels", {"query": "fire AND"}, "POST")
    assert status == 400
    assert err["position"] == 8
    assert "term" in err["error"]


def test_patch_channel_filters(served):
    pipe, api = served
    _, ch = _send(api.address, "/channels", {"query": "flood"}, "POST")
    status, updated = _send(api.address, f"/channels/{ch['id']}",
                            {"filters": {"min_dots": 4}}, "PATCH")
    assert status == 200
    assert updated["filters"] == {"min_dots": 4}
    assert pipe.channels[ch["id"]].filters.min_dots == 4

    status, err = _send(api.address, "/channels/ch-9999",
                        {"filters": {}}, "PATCH")
    assert status == 404


def test_get_cluster_and_not_found(served):
    pipe, api = served
    cid = sorted(pipe.serving)[0]
    status, blob = _get(api.address, f"/clusters/{cid}")
    assert status == 200
    assert blob["cluster_id"] == cid
    assert blob["tweets"]
    status, err = _get(api.address, "/clusters/evt-424242")
    assert status == 404
    assert "evt-424242" in err["error"]


def test_search_endpoint_pages_and_rejects_bad_query(served):
    pipe, api = served
    status, out = _get(api.address, "/search?q=fire&page=0")
    assert status == 200
    assert out["total"] >= len(out["results"])
    for blob in out["results"]:
        assert any("fire" in t["text"].lower() for t in blob["tweets"])

    status, err = _get(api.address, "/search?q=fire+AND&page=0")
    assert status == 400
    assert err["position"] == 8


def test_metrics_endpoint_reports_percentiles(served):
    pipe, api = served
    status, m = _get(api.address, "/metrics")
    assert status == 200
    assert m["counters"]["ingested"] > 0
    lat = m["latency_ms"]
    assert lat["count"] == m["counters"]["ingested"]
    assert 0 <= lat["p50"] <= lat["p90"] <= lat["p99"] <= lat["max"]


def _tail(url, out, ready):
    req = urllib.request.Request(url)
    with urllib.request.urlopen(req) as r:
        ready.set()
        while True:
            line = r.readline()
            if not line:
                return
            if line.startswith(b"data: "):
                out.append((time.monotonic(), json.loads(line[6:])))


def test_channel_tail_streams_historical_then_live(served):
    pipe, api = served
    _, ch = _send(api.address, "/channels", {"query": "fire OR flood OR crash"},
                  "POST")
    historical = pipe.channel_matches(ch["id"])
    assert historical, "corpus should produce at least one matching cluster"

    frames = []
    ready = threading.Event()
    reader = threading.Thread(
        target=_tail,
        args=(api.address + f"/channels/{ch['id']}/tail?idle=2.5", frames, ready),
        daemon=True)
    reader.start()
    assert ready.wait(timeout=5)
    deadline = time.monotonic() + 5
    while len(frames) < len(historical) and time.monotonic() < deadline:
        time.sleep(0.02)
    assert [f["cluster_id"] for _, f in frames] == \
        [b["cluster_id"] for b in historical]

    # an update re-emits the cluster; it must arrive within a second
    blob = historical[-1]
    sent = time.monotonic()
    pipe.hub.publish(EventCluster.from_json(blob), blob)
    while len(frames) < len(historical) + 1 and time.monotonic() - sent < 5:
        time.sleep(0.02)
    assert len(frames) == len(historical) + 1
    arrived, live = frames[-1]
    assert live["cluster_id"] == blob["cluster_id"]
    assert arrived - sent < 1.0
    reader.join(timeout=10)
    assert not reader.is_alive()


def test_channel_tail_never_delivers_nonmatching(served):
    pipe, api = served
    _, ch = _send(api.address, "/channels", {"query": "zzznohit"}, "POST")
    frames = []
    ready = threading.Event()
    reader = threading.Thread(
        target=_tail,
        args=(api.address + f"/channels/{ch['id']}/tail?idle=0.8", frames, ready),
        daemon=True)
    reader.start()
    ready.wait(timeout=5)
    blob = next(iter(pipe.serving.values()))
    pipe.hub.publish(EventCluster.from_json(blob), blob)
    reader.join(timeout=10)
    assert frames == []


def test_unknown_channel_tail_is_not_found(served):
    pipe, api = served
    status, err = _get(api.address, "/channels/ch-7777/tail")
    assert status == 404


def test_feed_tail_replays_emissions(served):
    pipe, api = served
    emitted = len(pipe.composers["disaster"].log)
    frames = []
    ready = threading.Event()
    reader = threading.Thread(
        target=_tail,
        args=(api.address + "/feeds/disaster/tail?idle=0.6", frames, ready),
        daemon=True)
    reader.start()
    reader.join(timeout=10)
    assert len(frames) == emitted
    for _, f in frames:
        assert f["profile"] == "disaster"
        assert f["item"]["headline"]

    status, err = _get(api.address, "/feeds/nosuch/tail")
    assert status == 404


def test_static_console_route(served):
    pipe, api = served
    with urllib.request.urlopen(api.address + "/") as r:
        assert b"console" in r.read()
    with urllib.request.urlopen(api.address + "/ui/app.js") as r:
        assert r.read() == b"export {};"
    status, _ = _get(api.address, "/ui/missing.css")
    assert status == 404

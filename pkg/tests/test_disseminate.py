import itertools
from collections import Counter
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newswire.disseminate import (
    DEFAULT_PROFILES,
    FIELDS,
    FeedComposer,
    FeedProfile,
    HistoryItem,
    ImpactLevel,
    ImpactValue,
    NoveltyVerdict,
    _cosine_counts,
    assess_impact_text,
    audit_feed_log,
    detect_staleness,
    extract_cardinals,
    extract_impact,
    field_vectors,
    impact_features,
    novelty_check,
    train_impact_model,
)
from newswire.geo import GeoTag, Granularity
from newswire.model import EventCluster, TopicLabel, Tweet, UserRef
from newswire.synthcorpus import EPOCH, corpus_vectors, impact_snippets
from newswire.veracity import Source, SourceKind, VeracityScore, VeracityStage, veracity_dots

_SEQ = itertools.count()


def _at(day=0, h=0, m=0):
    return EPOCH + timedelta(days=day, hours=h, minutes=m)


def _tweet(text, when):
    i = next(_SEQ)
    tid = f"d{i:05d}"
    return Tweet(id=tid, created_at=when, text=text,
                 author=UserRef("u" + tid, "user" + tid), lang="en")


def _cluster(rows, cid="evt-000900"):
    tweets = [_tweet(text, when) for text, when in rows]
    vectors, _ = corpus_vectors(tweets)
    cl = EventCluster(cid, min(t.created_at for t in tweets))
    for t in sorted(tweets, key=lambda t: (t.created_at, t.id)):
        cl.add(t, vectors[t.id])
    return cl


_GEO = {
    "city": GeoTag("houston", "Houston", 29.7604, -95.3698, Granularity.CITY, 0.9),
    "state": GeoTag("texas", "Texas", 31.0, -99.0, Granularity.STATE, 0.9),
    "landmark": GeoTag("port of houston", "Port of Houston", 29.73, -95.27,
                       Granularity.LANDMARK, 0.85),
}


def _ready(cluster, *, topic=TopicLabel.CRISIS, geo="city",
           impact=ImpactValue.MEDIUM, veracity=0.65, summarized=True):
    """Fill in the context fields a feed decision reads."""
    cluster.topic = topic
    cluster.geo = _GEO[geo] if geo else None
    cluster.impact = ImpactLevel(impact)
    if veracity is not None:
        first = min(cluster.tweets, key=lambda t: (t.created_at, t.id))
        cluster.veracity = VeracityScore(
            veracity, VeracityStage.DEVELOPING, veracity_dots(veracity),
            Source(SourceKind.EARLIEST_TWEET, tweet_id=first.id))
    if summarized:
        cluster.summary = min(cluster.tweets, key=lambda t: (t.created_at, t.id)).id
    return cluster


@pytest.fixture(scope="module")
def impact_model():
    rows = [(t, TopicLabel(tp), ImpactValue(lv)) for t, tp, lv in impact_snippets()]
    return train_impact_model(rows)


# ------------------------------------------------------------- cardinals


def test_cardinals_quake_example():
    assert extract_cardinals("7.1 magnitude earthquake, 12 dead") == [
        (7.1, "magnitude"), (12.0, "dead")]


def test_cardinals_money_acres_dozens():
    got = extract_cardinals(
        "$2 billion in damages, 4,500 acres burned, two dozen injured")
    assert got == [(2e9, "monetary"), (4500.0, "acres"), (24.0, "injured")]


def test_cardinals_number_words():
    got = extract_cardinals("twelve injured and three missing after magnitude 6.3 quake")
    assert got == [(12.0, "injured"), (3.0, "missing"), (6.3, "magnitude")]


def test_cardinals_negation_and_bare_numbers():
    assert extract_cardinals("apartment fire, no injuries") == []
    assert extract_cardinals("no one dead, two hurt") == [(2.0, "injured")]
    # a year with no unit nearby is not a cardinal
    assert extract_cardinals("back in 1945 the war ended") == []


def test_cardinals_trailing_unit_words():
    assert extract_cardinals("storm destroyed 40 homes") == [(40.0, "buildings")]
    assert extract_cardinals("damage estimated at $500,000") == [(500000.0, "monetary")]


# ---------------------------------------------------------------- impact


def test_impact_low_no_injuries(impact_model):
    lvl = assess_impact_text("apartment fire, no injuries", TopicLabel.CRISIS, impact_model)
    assert lvl.value is ImpactValue.LOW
    assert lvl.cardinals == ()


def test_impact_pipeline_at_least_medium(impact_model):
    lvl = assess_impact_text("explosion at an oil pipeline", TopicLabel.CRISIS, impact_model)
    assert lvl.value in (ImpactValue.MEDIUM, ImpactValue.HIGH)


def test_impact_quake_high(impact_model):
    lvl = assess_impact_text("7.1 magnitude earthquake, 12 dead",
                             TopicLabel.CRISIS, impact_model)
    assert lvl.value is ImpactValue.HIGH
    assert lvl.cardinals == ((7.1, "magnitude"), (12.0, "dead"))


def test_impact_topic_gate(impact_model):
    lvl = assess_impact_text("explosion at an oil pipeline", TopicLabel.SPORTS, impact_model)
    assert lvl.value is ImpactValue.LOW
    assert lvl.cardinals == ()


def test_impact_over_cluster_distinct_texts(impact_model):
    rows = [("7.1 magnitude earthquake hits Houston", _at(h=8)),
            ("7.1 magnitude earthquake hits Houston", _at(h=8, m=1)),
            ("rescue teams report 12 dead after the earthquake", _at(h=8, m=5))]
    c = _cluster(rows)
    c.topic = TopicLabel.CRISIS
    lvl = extract_impact(c, impact_model)
    assert lvl.value is ImpactValue.HIGH
    assert lvl.cardinals == ((7.1, "magnitude"), (12.0, "dead"))

    c.topic = TopicLabel.ENTERTAINMENT
    assert extract_impact(c, impact_model).value is ImpactValue.LOW


def test_impact_model_training_fit(impact_model):
    rows = impact_snippets()
    ok = sum(impact_model.classify(impact_features(t, TopicLabel(tp))).value == lv
             for t, tp, lv in rows)
    assert ok / len(rows) >= 0.9


def test_impact_model_json_roundtrip(impact_model, tmp_path):
    path = tmp_path / "impact.json"
    impact_model.save(path)
    from newswire.disseminate import ImpactModel

    back = ImpactModel.load(path)
    for text, tp, _ in impact_snippets()[:25]:
        x = impact_features(text, TopicLabel(tp))
        assert back.classify(x) == impact_model.classify(x)


# ------------------------------------------------------------- staleness


def test_stale_onthisday_hashtag():
    c = _cluster([("#onthisday in 1977 the blackout hit New York", _at(h=8)),
                  ("#onthisday in 1977 the blackout hit New York wow", _at(h=8, m=5)),
                  ("crazy that this happened back then", _at(h=8, m=9))])
    v = detect_staleness(c, _at(h=9))
    assert not v.novel and v.reason == "expression"


def test_stale_old_year():
    c = _cluster([("the war ended in 1945 after the surrender", _at(h=8)),
                  ("in 1945 the war ended, remarkable footage", _at(h=8, m=2)),
                  ("so much history in one clip", _at(h=8, m=4))])
    v = detect_staleness(c, _at(h=9))
    assert not v.novel and v.reason == "expression"


def test_stale_requires_majority():
    # one cue among three members is not enough
    c = _cluster([("fire at the docks, like last year all over again", _at(h=8)),
                  ("fire crews responding to dock blaze", _at(h=8, m=2)),
                  ("smoke visible across the harbor", _at(h=8, m=4))])
    assert detect_staleness(c, _at(h=9)).novel


def test_this_morning_at_2200_is_still_fresh():
    c = _cluster([("pipeline explosion this morning near Houston", _at(h=10)),
                  ("explosion this morning at the pipeline", _at(h=10, m=5)),
                  ("crews responding to the pipeline blast", _at(h=10, m=9))])
    v = detect_staleness(c, _at(h=22))
    assert v.novel


def test_resolved_time_stale_next_day():
    c = _cluster([("pipeline explosion this morning near Houston", _at(h=10)),
                  ("explosion this morning at the pipeline", _at(h=10, m=5)),
                  ("crews responding to the pipeline blast", _at(h=10, m=9))])
    v = detect_staleness(c, _at(day=1, h=9))
    assert not v.novel and v.reason == "resolved_time"


def test_weekday_expression_resolves_to_that_day():
    # tweeted tuesday about monday: interval ends tuesday 00:00
    c = _cluster([("the outage happened on monday engineers say", _at(day=5, h=9)),
                  ("on monday the whole grid went down", _at(day=5, h=9, m=3)),
                  ("power restored after the monday outage", _at(day=5, h=9, m=6))])
    assert _at(day=5).weekday() == 1  # tuesday
    assert detect_staleness(c, _at(day=5, h=10)).novel
    v = detect_staleness(c, _at(day=5, h=14))
    assert not v.novel and v.reason == "resolved_time"


def test_unparseable_temporal_counted_not_fatal():
    c = _cluster([("fire broke out on caturday they said", _at(h=8)),
                  ("big fire downtown near the docks", _at(h=8, m=2)),
                  ("fire crews on scene downtown", _at(h=8, m=4))])
    v = detect_staleness(c, _at(h=9))
    assert v.novel
    assert v.unparsed == 1


def test_verdict_field_constraints():
    with pytest.raises(ValueError):
        NoveltyVerdict(novel=True, reason="expression")
    with pytest.raises(ValueError):
        NoveltyVerdict(novel=False, reason="duplicate")  # missing duplicate_of
    with pytest.raises(ValueError):
        NoveltyVerdict(novel=False, reason="expression", duplicate_of="evt-000001")
    with pytest.raises(ValueError):
        NoveltyVerdict(novel=False, reason="old")


# ------------------------------------------------------------- duplicates


_PORT_ROWS = [("Explosion reported at the Port of Houston", _at(h=8)),
              ("huge explosion at the Port of Houston, crews responding", _at(h=8, m=3)),
              ("Port of Houston explosion injures three workers", _at(h=8, m=6))]


def test_field_vectors_route_terms():
    c = _cluster([("Donald Trump announced the FEMA visit to Houston this morning",
                   _at(h=8)),
                  ("FEMA crews arrive in Houston after Donald Trump announcement",
                   _at(h=8, m=4)),
                  ("relief supplies flowing into the city", _at(h=8, m=8))])
    bags = field_vectors(c)
    assert set(bags) == set(FIELDS)
    assert "donald trump" in bags["persons"]
    assert "fema" in bags["organizations"]
    assert "houston" in bags["places"]
    assert "announced" in bags["actions"]
    assert "this morning" in bags["temporal"]
    assert "supplies" in bags["residual"]


def test_field_vectors_count_distinct_texts_once():
    rows = _PORT_ROWS + [(_PORT_ROWS[0][0], _at(h=8, m=30))] * 5
    assert field_vectors(_cluster(rows)) == field_vectors(_cluster(_PORT_ROWS))


def test_identical_replay_is_duplicate():
    a = _cluster(_PORT_ROWS, "evt-000910")
    b = _cluster([(t, ts + timedelta(hours=1)) for t, ts in _PORT_ROWS], "evt-000911")
    hist = [HistoryItem.from_cluster(a, _at(h=8, m=30))]
    v = novelty_check(b, hist, _at(h=9, m=30))
    assert not v.novel and v.reason == "duplicate"
    assert v.duplicate_of == "evt-000910"
    assert set(v.field_similarities) == set(FIELDS)
    assert all(s == 1.0 for s in v.field_similarities.values())


def test_casualty_update_is_novel():
    a = _cluster(_PORT_ROWS, "evt-000910")
    hist = [HistoryItem.from_cluster(a, _at(h=8, m=30))]
    upd = _cluster(
        [("Port of Houston explosion death toll rises to 18, fire still burning",
          _at(h=12)),
         ("18 dead now confirmed in Port of Houston blast, toll rising",
          _at(h=12, m=3)),
         ("death toll hits 18 at Port of Houston explosion, rescue continues",
          _at(h=12, m=6))],
        "evt-000912")
    assert novelty_check(upd, hist, _at(h=12, m=30)).novel


def test_sub_event_is_novel():
    a = _cluster(_PORT_ROWS, "evt-000910")
    hist = [HistoryItem.from_cluster(a, _at(h=8, m=30))]
    sub = _cluster(
        [("fire from Port of Houston explosion spreads to neighboring warehouse",
          _at(h=11)),
         ("warehouse next to the Port of Houston now burning too", _at(h=11, m=4)),
         ("flames jump to a warehouse near Port of Houston", _at(h=11, m=8))],
        "evt-000913")
    assert novelty_check(sub, hist, _at(h=11, m=30)).novel


def test_duplicate_window_is_exactly_twelve_hours():
    a = _cluster(_PORT_ROWS, "evt-000910")
    b = _cluster([(t, ts + timedelta(hours=1)) for t, ts in _PORT_ROWS], "evt-000911")
    hist = [HistoryItem.from_cluster(a, _at(h=8))]
    assert not novelty_check(b, hist, _at(h=19, m=59)).novel
    assert novelty_check(b, hist, _at(h=20)).novel


def test_duplicate_similarity_symmetric():
    a = _cluster(_PORT_ROWS, "evt-000910")
    upd = _cluster(
        [("Port of Houston fire contained after the explosion", _at(h=9)),
         ("crews contain the Port of Houston fire", _at(h=9, m=2)),
         ("explosion aftermath at Port of Houston under control", _at(h=9, m=5))],
        "evt-000914")
    ab = novelty_check(upd, [HistoryItem.from_cluster(a, _at(h=9))], _at(h=10))
    ba = novelty_check(a, [HistoryItem.from_cluster(upd, _at(h=9))], _at(h=10))
    assert dict(ab.field_similarities) == dict(ba.field_similarities)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefgh"), st.integers(1, 5), max_size=6),
       st.dictionaries(st.sampled_from("abcdefgh"), st.integers(1, 5), max_size=6))
def test_count_cosine_symmetric_and_bounded(da, db):
    a, b = Counter(da), Counter(db)
    s = _cosine_counts(a, b)
    assert s == _cosine_counts(b, a)
    assert 0.0 <= s <= 1.0
    assert _cosine_counts(a, a) == 1.0


# ------------------------------------------------------------------ feeds


def _fresh_rows(tag, base_h=8):
    return [(f"Explosion and fire at the {tag} chemical plant", _at(h=base_h)),
            (f"crews battle the {tag} chemical plant fire", _at(h=base_h, m=3)),
            (f"evacuations near the burning {tag} plant", _at(h=base_h, m=6))]


def test_feed_emits_and_headline_is_summary():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    c = _ready(_cluster(_fresh_rows("eastside"), "evt-000920"))
    item = composer.offer(c, _at(h=9))
    assert item is not None
    by_id = {t.id: t for t in c.tweets}
    assert item.headline == by_id[c.summary].text
    assert item.cluster_id == "evt-000920"
    assert item.veracity_dots == veracity_dots(0.65)


def test_feed_holds_low_veracity_then_emits_at_floor():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    c = _ready(_cluster(_fresh_rows("westside"), "evt-000921"), veracity=0.1)
    assert composer.offer(c, _at(h=9)) is None
    c.veracity = VeracityScore(0.62, VeracityStage.DEVELOPING, veracity_dots(0.62),
                               c.veracity.source)
    assert composer.offer(c, _at(h=10)) is not None
    # at most once per feed, ever
    assert composer.offer(c, _at(h=11)) is None
    assert composer.offer(c, _at(day=3, h=9)) is None


def test_feed_day_cap_resets_next_day():
    profile = FeedProfile(name="tiny", topics=frozenset({TopicLabel.CRISIS}),
                          require_novel=False, max_items_per_day=2)
    composer = FeedComposer(profile)
    for i, tag in enumerate(("north", "south")):
        c = _ready(_cluster(_fresh_rows(tag, base_h=8 + i), f"evt-00093{i}"))
        assert composer.offer(c, _at(h=10 + i)) is not None
    third = _ready(_cluster(_fresh_rows("harbor", base_h=11), "evt-000932"))
    assert composer.offer(third, _at(h=13)) is None
    # next day the cap resets and the held cluster may go out
    assert composer.offer(third, _at(day=1, h=9)) is not None


def test_feed_geo_floor_per_event_type():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    vague = _ready(_cluster(_fresh_rows("valley"), "evt-000940"), geo="state")
    assert composer.offer(vague, _at(h=9)) is None  # crisis floor is city

    storm_rows = [("Tornado touches down near Amarillo, homes damaged", _at(h=8)),
                  ("Amarillo tornado leaves a trail of damage", _at(h=8, m=3)),
                  ("tornado damage reported across the Amarillo area", _at(h=8, m=6))]
    storm = _ready(_cluster(storm_rows, "evt-000941"), topic=TopicLabel.WEATHER,
                   geo="state")
    assert composer.offer(storm, _at(h=9)) is not None  # weather floor is state


def test_supply_chain_takes_low_impact_landmark_disaster_does_not():
    rows = [("small fire at a Port of Houston crane, no injuries", _at(h=8)),
            ("crane fire at the Port of Houston quickly contained", _at(h=8, m=3)),
            ("no injuries in the brief Port of Houston crane fire", _at(h=8, m=6))]
    supply = FeedComposer(DEFAULT_PROFILES["supply_chain"])
    disaster = FeedComposer(DEFAULT_PROFILES["disaster"])
    c1 = _ready(_cluster(rows, "evt-000950"), geo="landmark", impact=ImpactValue.LOW)
    c2 = _ready(_cluster(rows, "evt-000951"), geo="landmark", impact=ImpactValue.LOW)
    assert supply.offer(c1, _at(h=9)) is not None
    assert disaster.offer(c2, _at(h=9)) is None


def test_feed_suppresses_duplicate_until_window_passes():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    a = _ready(_cluster(_PORT_ROWS, "evt-000960"))
    assert composer.offer(a, _at(h=9)) is not None
    replay = _ready(_cluster([(t, ts + timedelta(hours=1)) for t, ts in _PORT_ROWS],
                             "evt-000961"))
    assert composer.offer(replay, _at(h=10)) is None
    assert composer.offer(replay, _at(h=21, m=1)) is not None


def test_feed_holds_stale_cluster():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    c = _ready(_cluster(
        [("#onthisday the refinery fire of 1989 shocked the city", _at(h=8)),
         ("#onthisday remembering the 1989 refinery fire", _at(h=8, m=3)),
         ("the refinery fire anniversary brings back memories", _at(h=8, m=6))],
        "evt-000970"))
    assert composer.offer(c, _at(h=9)) is None


def test_feed_requires_summary():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    c = _ready(_cluster(_fresh_rows("midtown"), "evt-000980"), summarized=False)
    with pytest.raises(ValueError):
        composer.offer(c, _at(h=9))


_STORIES = [
    [("Explosion and fire at the eastside chemical plant", _at(h=7)),
     ("crews battle the eastside chemical plant fire", _at(h=7, m=3)),
     ("evacuations near the burning eastside plant", _at(h=7, m=6))],
    [("Armed robbery at the First National Bank downtown", _at(h=8)),
     ("police swarm downtown after the bank robbery", _at(h=8, m=3)),
     ("suspect fled the First National Bank on foot", _at(h=8, m=6))],
    [("Tornado touches down near the fairgrounds, homes damaged", _at(h=9)),
     ("fairgrounds tornado leaves a trail of wrecked homes", _at(h=9, m=3)),
     ("tornado damage reported all around the fairgrounds", _at(h=9, m=6))],
]


def test_audit_replay_passes_and_flags_tampering():
    composer = FeedComposer(DEFAULT_PROFILES["disaster"])
    topics = (TopicLabel.CRISIS, TopicLabel.LAW_CRIME, TopicLabel.WEATHER)
    for i, (rows, topic) in enumerate(zip(_STORIES, topics)):
        c = _ready(_cluster(rows, f"evt-00099{i}"), topic=topic,
                   geo="state" if topic is TopicLabel.WEATHER else "city")
        assert composer.offer(c, _at(h=9 + i)) is not None
    report = audit_feed_log(composer.log, composer.profile)
    assert report["ok"]
    assert report["items"] == 3
    assert report["double_emissions"] == []

    import copy

    tampered = copy.deepcopy(composer.log)
    tampered[1]["item"]["headline"] = "something else entirely"
    bad = audit_feed_log(tampered, composer.profile)
    assert not bad["ok"] and bad["predicate_violations"]

    doubled = composer.log + [composer.log[0]]
    assert audit_feed_log(doubled, composer.profile)["double_emissions"]


def test_profile_json_roundtrip():
    p = DEFAULT_PROFILES["supply_chain"]
    assert FeedProfile.from_json(p.to_json()) == p

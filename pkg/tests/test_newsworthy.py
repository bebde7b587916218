import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newswire.model import GRADE_ORDER, TopicLabel
from newswire.newsworthy import (
    NewsModels,
    ObjectModel,
    OrdinalCombiner,
    TopicLabeler,
    UntrainedModel,
    attention_prob,
    object_news_prob,
    topic_news_prob,
    train_object_model,
    train_topic_labeler,
)
from newswire.synthcorpus import (
    graded_cluster_corpus,
    news_account_corpus,
    topical_corpus,
    two_theme_corpus,
)
from newswire.topicmodel import TopicModel, train_topic_model


# ---------------------------------------------------------------- attention


def test_attention_exact_points():
    assert attention_prob(500) == 1.0
    assert attention_prob(1) == 0.0
    assert abs(attention_prob(50) - 0.6295) < 1e-4


def test_attention_clamps_and_grows():
    assert attention_prob(100000) == 1.0
    values = [attention_prob(s) for s in range(1, 1200, 7)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        attention_prob(0)


# ---------------------------------------------------------------- topic term


def test_top5_covers_all_topics_at_n5():
    texts, _ = two_theme_corpus(60)
    model = train_topic_model(texts, [5], "long_term", seed=3)
    graded = graded_cluster_corpus(n_per_grade=2)
    cluster = graded[0][0]
    assert topic_news_prob(cluster, model) == pytest.approx(1.0, abs=1e-9)


def test_uniform_distribution_n50_gives_point_one():
    phi = np.full((50, 4), 0.25)
    model = TopicModel(50, {}, phi, "long_term", {50: 1.0})
    theta = model.infer_tweet("u1", "zzq qqv ppx")  # nothing in vocab
    assert model.top_k_mass(theta, 5) == pytest.approx(0.1, abs=1e-12)


def test_news_cluster_scores_above_chatter(news_models, graded_bundle):
    graded, X, y, _ = graded_bundle
    news_idx = next(i for i, (_, g) in enumerate(graded) if g == 2)
    chat_idx = next(i for i, (_, g) in enumerate(graded) if g == 0)
    news_p = topic_news_prob(graded[news_idx][0], news_models.topic_long)
    chat_p = topic_news_prob(graded[chat_idx][0], news_models.topic_long)
    assert news_p > chat_p


# ---------------------------------------------------------------- object term


def test_object_table_is_a_distribution(news_models):
    total = sum(news_models.object_long.table.values())
    assert abs(total - 1.0) < 1e-6


def test_no_entities_scores_zero(news_models, graded_bundle):
    graded, _, _, _ = graded_bundle
    chat = next(c for c, g in graded if g == 0)
    assert object_news_prob(chat, news_models.object_long) == 0.0


def test_two_most_frequent_entities_score_one(news_models):
    table = news_models.object_long.table
    top2 = sorted(table, key=lambda k: -table[k])[:2]
    # both rosters surface capitalized in running text
    text = f"crews respond near {top2[0].title()} as {top2[1].title()} officials comment"
    model = ObjectModel(table, "long_term")
    assert model.tweet_score("m1", text) == pytest.approx(1.0, abs=1e-9)


def test_mixed_cluster_matches_brute_force(news_models, graded_bundle):
    from newswire.entities import extract_entities

    graded, _, _, _ = graded_bundle
    cluster = next(c for c, g in graded if g == 1)
    model = news_models.object_long
    per_tweet = []
    pair_max = sum(sorted(model.table.values(), reverse=True)[:2])
    for t in cluster.tweets:
        probs = sorted((model.table.get(s.lower(), 0.0)
                        for s, _ in extract_entities(t.text)), reverse=True)
        per_tweet.append(min(1.0, sum(probs[:2]) / pair_max))
    want = min(1.0, sum(per_tweet) / cluster.size)
    assert object_news_prob(cluster, model) == pytest.approx(want, abs=1e-12)


# ---------------------------------------------------------------- combiner


def test_extreme_components_hit_extreme_grades(graded_bundle):
    _, _, _, comb = graded_bundle
    assert comb.grade(comb.combined([0, 0, 0, 0, 0])) == GRADE_ORDER[0]
    assert comb.grade(comb.combined([1, 1, 1, 1, 1])) == GRADE_ORDER[2]


def test_untrained_combiner_refuses():
    with pytest.raises(UntrainedModel):
        OrdinalCombiner().combined([0.5] * 5)


@pytest.fixture(scope="module")
def trained_combiner():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(120, 5))
    s = X @ np.array([1.0, 0.8, 1.2, 0.6, 1.0])
    y = np.digitize(s, [1.4, 2.6])
    return OrdinalCombiner().fit(X, y)


@settings(max_examples=60, deadline=None)
@given(
    base=st.lists(st.floats(0, 1), min_size=5, max_size=5),
    coord=st.integers(0, 4),
    bump=st.floats(0, 1),
)
def test_combined_is_monotone_in_each_component(trained_combiner, base, coord, bump):
    comb = trained_combiner
    hi = list(base)
    hi[coord] = min(1.0, hi[coord] + bump)
    assert comb.combined(hi) >= comb.combined(base) - 1e-12


def test_grade_changes_only_at_thresholds(graded_bundle):
    _, _, _, comb = graded_bundle
    eps = 1e-9
    assert comb.grade(comb.tau_news) == GRADE_ORDER[2]
    assert comb.grade(comb.tau_news - eps) == GRADE_ORDER[1]
    assert comb.grade(comb.tau_partial) == GRADE_ORDER[1]
    assert comb.grade(comb.tau_partial - eps) == GRADE_ORDER[0]
    assert comb.tau_partial < comb.tau_news


def test_components_all_in_unit_interval(graded_bundle):
    _, X, _, _ = graded_bundle
    assert float(X.min()) >= 0.0
    assert float(X.max()) <= 1.0


def test_holdout_ranking_ndcg(graded_bundle):
    _, X, y, comb = graded_bundle
    scores = [comb.combined(x) for x in X[1::2]]
    gains = list(y[1::2])
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    dcg = sum((2 ** gains[i] - 1) / math.log2(r + 2) for r, i in enumerate(order))
    idcg = sum((2 ** g - 1) / math.log2(r + 2)
               for r, g in enumerate(sorted(gains, reverse=True)))
    assert dcg / idcg >= 0.80


def test_score_object_carries_components(graded_bundle, news_models):
    graded, X, _, comb = graded_bundle
    cluster = graded[0][0]
    score = comb.score(news_models.components(cluster))
    assert 0.0 <= score.combined <= 1.0
    assert score.grade in GRADE_ORDER
    assert score.p_a == pytest.approx(attention_prob(cluster.size))


def test_combiner_roundtrip(graded_bundle):
    _, X, _, comb = graded_bundle
    again = OrdinalCombiner.from_json(comb.to_json())
    for x in X[:10]:
        assert again.combined(x) == pytest.approx(comb.combined(x), abs=1e-12)
    assert (again.tau_partial, again.tau_news) == (comb.tau_partial, comb.tau_news)


def test_object_model_roundtrip(news_models, tmp_path):
    path = tmp_path / "obj.json"
    news_models.object_long.save(str(path))
    loaded = ObjectModel.load(str(path))
    assert loaded.table == news_models.object_long.table
    assert loaded.trained_window == "long_term"


# ---------------------------------------------------------------- labeler


@pytest.fixture(scope="module")
def labeler():
    return train_topic_labeler(topical_corpus(per_label=120))


def test_labeler_recovers_theme_vocabulary(labeler):
    corpus = topical_corpus(seed=4701, per_label=12)  # fresh texts, same themes
    hits = sum(labeler.label_text(t) == TopicLabel(v) for t, v in corpus)
    assert hits / len(corpus) >= 0.9


def test_labeler_cluster_majority(labeler, graded_bundle):
    graded, _, _, _ = graded_bundle
    news = next(c for c, g in graded if g == 2)
    assert labeler.label_cluster(news) in set(TopicLabel)


def test_labeler_roundtrip(labeler):
    corpus = topical_corpus(seed=4702, per_label=4)
    again = TopicLabeler.from_json(labeler.to_json())
    for t, _ in corpus:
        assert again.label_text(t) == labeler.label_text(t)

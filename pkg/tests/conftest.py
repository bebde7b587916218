"""Session-scoped fixtures: corpora and trained models are expensive,
build them once."""
import pytest

from newswire import synthcorpus
from newswire.noisefilter import NoiseFilter, calibrate_thresholds, train_stage_models


@pytest.fixture(scope="session")
def desk_noise_corpus():
    return synthcorpus.noise_corpus(size=10000, seed=1101)


@pytest.fixture(scope="session")
def calibrated_noise(desk_noise_corpus):
    models = train_stage_models(desk_noise_corpus)
    report = calibrate_thresholds(models, desk_noise_corpus, 0.01)
    return NoiseFilter(models), report


@pytest.fixture(scope="session")
def news_models():
    """Long/short topic and object models trained on the wire-account corpora."""
    from newswire.newsworthy import NewsModels, train_object_model
    from newswire.topicmodel import train_topic_model

    long_texts = synthcorpus.news_account_corpus("long_term", 1500)
    short_texts = synthcorpus.news_account_corpus("short_term", 800)
    return NewsModels(
        topic_long=train_topic_model(long_texts, [10, 20], "long_term", seed=11),
        topic_short=train_topic_model(short_texts, [10, 20], "short_term", seed=13),
        object_long=train_object_model(long_texts, "long_term"),
        object_short=train_object_model(short_texts, "short_term"),
    )


@pytest.fixture(scope="session")
def veracity_bundle():
    """Labeled truth/rumor clusters, corpus index, and a model trained on
    the even-indexed cases (odd indices stay held out)."""
    from newswire.synthcorpus import early_view, veracity_corpus
    from newswire.veracity import identify_source, train_veracity_model

    cases, index = veracity_corpus(n_per_grade=40)
    earlies = [(early_view(c), identify_source(early_view(c), index), g)
               for c, g in cases]
    devs = [(c, identify_source(c, index), g) for c, g in cases]
    model = train_veracity_model(earlies[::2], devs[::2])
    return cases, index, model, earlies, devs


@pytest.fixture(scope="session")
def runtime_models(tmp_path_factory):
    """Full artifact directory for pipeline tests, trained small."""
    from newswire.pipeline import train_default_models

    out = tmp_path_factory.mktemp("artifacts")
    train_default_models(out, scale=0.25)
    return out


@pytest.fixture(scope="session")
def graded_bundle(news_models):
    """Graded clusters, their component vectors, and a fitted combiner.

    Even indices train the combiner, odd indices stay held out.
    """
    import numpy as np

    from newswire.newsworthy import OrdinalCombiner

    graded = synthcorpus.graded_cluster_corpus(n_per_grade=60)
    X = np.array([news_models.components(c) for c, _ in graded])
    y = np.array([g for _, g in graded])
    combiner = OrdinalCombiner().fit(X[::2], y[::2])
    combiner.calibrate_taus(X[::2], y[::2])
    return graded, X, y, combiner

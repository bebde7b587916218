"""Newsworthiness: topic/object/attention components and the ordinal
combiner that turns them into one score and a three-grade label."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from newswire.entities import extract_entities
from newswire.model import (
    EventCluster,
    GRADE_ORDER,
    NewsworthinessScore,
    TopicLabel,
)
from newswire.topicmodel import TopicModel

ATTENTION_CAP = 500  # cluster size treated as saturated public attention


def attention_prob(size: int) -> float:
    if size < 1:
        raise ValueError("cluster size must be >= 1")
    p = math.log10(size) / math.log10(ATTENTION_CAP)
    return max(0.0, min(1.0, p))


# ---------------------------------------------------------------------------
# object model


class ObjectModel:
    """Entity surface -> news probability table from frequency counts."""

    def __init__(self, table: dict[str, float], trained_window: str):
        self.table = table
        self.trained_window = trained_window
        self._pair_max = sum(sorted(table.values(), reverse=True)[:2]) or 1.0
        self._tweet_cache: dict[str, float] = {}

    def tweet_score(self, tweet_id: str, text: str) -> float:
        cached = self._tweet_cache.get(tweet_id)
        if cached is not None:
            return cached
        probs = sorted(
            (self.table.get(surface.lower(), 0.0) for surface, _ in extract_entities(text)),
            reverse=True,
        )
        raw = sum(probs[:2])
        score = min(1.0, raw / self._pair_max)
        self._tweet_cache[tweet_id] = score
        return score

    def to_json(self) -> dict:
        return {"version": 1, "trained_window": self.trained_window, "table": self.table}

    @classmethod
    def from_json(cls, obj: dict) -> "ObjectModel":
        return cls(obj["table"], obj["trained_window"])

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "ObjectModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def train_object_model(texts: list[str], trained_window: str) -> ObjectModel:
    counts: dict[str, int] = {}
    for text in texts:
        for surface, _ in extract_entities(text):  # one count per surface per tweet
            key = surface.lower()
            counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return ObjectModel({}, trained_window)
    table = {k: v / total for k, v in counts.items()}
    return ObjectModel(table, trained_window)


# ---------------------------------------------------------------------------
# per-cluster components


def topic_news_prob(cluster: EventCluster, model: TopicModel) -> float:
    if cluster.size == 0:
        raise ValueError("empty cluster")
    total = 0.0
    for t in cluster.tweets:
        theta = model.infer_tweet(t.id, t.text)
        total += model.top_k_mass(theta, 5)
    return min(1.0, total / cluster.size)


def object_news_prob(cluster: EventCluster, model: ObjectModel) -> float:
    if cluster.size == 0:
        raise ValueError("empty cluster")
    total = sum(model.tweet_score(t.id, t.text) for t in cluster.tweets)
    return min(1.0, total / cluster.size)


@dataclass
class NewsModels:
    topic_long: TopicModel
    topic_short: TopicModel
    object_long: ObjectModel
    object_short: ObjectModel

    def components(self, cluster: EventCluster) -> tuple[float, float, float, float, float]:
        return (
            topic_news_prob(cluster, self.topic_long),
            topic_news_prob(cluster, self.topic_short),
            object_news_prob(cluster, self.object_long),
            object_news_prob(cluster, self.object_short),
            attention_prob(cluster.size),
        )


# ---------------------------------------------------------------------------
# ordinal combiner


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60, 60)))


class UntrainedModel(RuntimeError):
    pass


class OrdinalCombiner:
    """Cumulative-link ordinal regression over the five components.

    Non-negative weights keep the combined score monotone in every
    component. Grades 0 < 1 < 2 share one weight vector and two ordered
    cutpoints.
    """

    N_FEATURES = 5

    def __init__(self):
        self.weights: np.ndarray | None = None
        self.theta1 = 0.0
        self.theta2 = 1.0
        self.tau_partial = 0.33
        self.tau_news = 0.66

    # ------------------------------------------------------------- fitting

    def fit(self, X: np.ndarray, grades: np.ndarray, l2: float = 0.1) -> "OrdinalCombiner":
        X = np.asarray(X, dtype=float)
        y = np.asarray(grades, dtype=int)
        if X.shape[1] != self.N_FEATURES:
            raise ValueError(f"expected {self.N_FEATURES} components")

        def unpack(params):
            w = params[: self.N_FEATURES]
            theta1 = params[self.N_FEATURES]
            theta2 = theta1 + math.exp(params[self.N_FEATURES + 1])
            return w, theta1, theta2

        def nll(params):
            w, th1, th2 = unpack(params)
            s = X @ w
            c1 = _sigmoid(th1 - s)
            c2 = _sigmoid(th2 - s)
            p0 = np.maximum(c1, 1e-12)
            p1 = np.maximum(c2 - c1, 1e-12)
            p2 = np.maximum(1.0 - c2, 1e-12)
            logp = np.where(y == 0, np.log(p0), np.where(y == 1, np.log(p1), np.log(p2)))
            return -logp.sum() + 0.5 * l2 * float(w @ w)

        x0 = np.concatenate([np.full(self.N_FEATURES, 0.5), [0.5, 0.0]])
        bounds = [(0.0, None)] * self.N_FEATURES + [(None, None), (-5.0, 5.0)]
        res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": 500})
        w, th1, th2 = unpack(res.x)
        self.weights = w
        self.theta1, self.theta2 = float(th1), float(th2)
        return self

    def calibrate_taus(self, X: np.ndarray, grades: np.ndarray) -> None:
        """Grid-search score thresholds by F1 against the grade labels."""
        scores = np.array([self.combined(x) for x in np.asarray(X, dtype=float)])
        y = np.asarray(grades, dtype=int)
        grid = np.round(np.arange(0.02, 0.99, 0.01), 2)

        def best_tau(positive_mask):
            best = (0.0, grid[0])
            for tau in grid:
                pred = scores >= tau
                tp = float((pred & positive_mask).sum())
                fp = float((pred & ~positive_mask).sum())
                fn = float((~pred & positive_mask).sum())
                f1 = 2 * tp / max(2 * tp + fp + fn, 1e-12)
                if f1 > best[0]:
                    best = (f1, tau)
            return best[1]

        tau_partial = best_tau(y >= 1)
        tau_news = best_tau(y == 2)
        if tau_partial >= tau_news:
            # keep ordering; back the partial threshold off below news
            candidates = [t for t in grid if t < tau_news]
            tau_partial = candidates[-1] if candidates else tau_news / 2
        self.tau_partial, self.tau_news = float(tau_partial), float(tau_news)

    # ------------------------------------------------------------- scoring

    def _require_trained(self) -> np.ndarray:
        if self.weights is None:
            raise UntrainedModel("ordinal combiner has not been fitted")
        return self.weights

    def combined(self, components) -> float:
        w = self._require_trained()
        s = float(np.asarray(components, dtype=float) @ w)
        up1 = 1.0 - _sigmoid(self.theta1 - s)  # P(grade >= 1)
        up2 = 1.0 - _sigmoid(self.theta2 - s)  # P(grade >= 2)
        return float((up1 + up2) / 2.0)

    def grade(self, combined: float) -> str:
        if combined >= self.tau_news:
            return GRADE_ORDER[2]
        if combined >= self.tau_partial:
            return GRADE_ORDER[1]
        return GRADE_ORDER[0]

    def score(self, components) -> NewsworthinessScore:
        c = self.combined(components)
        p_t_long, p_t_short, p_o_long, p_o_short, p_a = components
        return NewsworthinessScore(
            p_t_long=p_t_long, p_t_short=p_t_short,
            p_o_long=p_o_long, p_o_short=p_o_short, p_a=p_a,
            combined=c, grade=self.grade(c),
        )

    # ------------------------------------------------------------- persist

    def to_json(self) -> dict:
        self._require_trained()
        return {
            "version": 1,
            "weights": [float(w) for w in self.weights],
            "theta1": self.theta1,
            "theta2": self.theta2,
            "tau_partial": self.tau_partial,
            "tau_news": self.tau_news,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OrdinalCombiner":
        inst = cls()
        inst.weights = np.array(obj["weights"], dtype=float)
        inst.theta1 = obj["theta1"]
        inst.theta2 = obj["theta2"]
        inst.tau_partial = obj["tau_partial"]
        inst.tau_news = obj["tau_news"]
        return inst


def score_cluster(cluster: EventCluster, models: NewsModels,
                  combiner: OrdinalCombiner) -> NewsworthinessScore:
    return combiner.score(models.components(cluster))


# ---------------------------------------------------------------------------
# topic labeling (needed by dissemination)


class TopicLabeler:
    """One-vs-rest logistic labeler over the noise-stage feature space."""

    def __init__(self, models: dict[str, tuple[np.ndarray, float]]):
        self.models = models  # label value -> (weights, bias)

    def label_text(self, tweet) -> TopicLabel:
        from newswire.noisefilter import featurize
        x = featurize(tweet)
        best_label, best_score = TopicLabel.OTHER, -math.inf
        for value in sorted(self.models):
            w, b = self.models[value]
            z = float(x.dot(w)[0]) + b
            if z > best_score:
                best_label, best_score = TopicLabel(value), z
        return best_label

    def label_cluster(self, cluster: EventCluster) -> TopicLabel:
        from newswire.noisefilter import featurize
        votes: dict[str, float] = {}
        for t in cluster.tweets:
            x = featurize(t)
            for value in sorted(self.models):
                w, b = self.models[value]
                votes[value] = votes.get(value, 0.0) + float(x.dot(w)[0]) + b
        if not votes:
            return TopicLabel.OTHER
        best = max(sorted(votes), key=lambda v: votes[v])
        return TopicLabel(best)

    def to_json(self) -> dict:
        out = {}
        for value, (w, b) in self.models.items():
            nz = np.nonzero(w)[0]
            out[value] = {"bias": b, "weights": {str(int(i)): float(w[i]) for i in nz}}
        return {"version": 1, "labels": out}

    @classmethod
    def from_json(cls, obj: dict) -> "TopicLabeler":
        from newswire.noisefilter import DIM
        models = {}
        for value, m in obj["labels"].items():
            w = np.zeros(DIM)
            for k, v in m["weights"].items():
                w[int(k)] = v
            models[value] = (w, m["bias"])
        return cls(models)


def train_topic_labeler(corpus) -> TopicLabeler:
    """corpus: list of (tweet, TopicLabel value string)."""
    from scipy import sparse

    from newswire.noisefilter import _train_logistic, featurize

    X = sparse.vstack([featurize(t) for t, _ in corpus], format="csr")
    labels = sorted({value for _, value in corpus})
    models = {}
    for value in labels:
        y = np.array([1.0 if v == value else -1.0 for _, v in corpus])
        w, b = _train_logistic(X, y, l2=1.0)
        models[value] = (w, b)
    return TopicLabeler(models)

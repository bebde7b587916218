"""Veracity scoring in [-1, 1]: source identification, belief labels, and
the early/developing regression pair.

The developing model keeps the early model's weights frozen and adds one
non-negative term for the credibility-weighted debate, so a cluster with
zero belief signal scores exactly what the early model says.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize

from newswire import resources
from newswire.model import (
    AccountClass,
    EventCluster,
    Tweet,
    UserRef,
    term_id,
    tokenize,
)

DEVELOPING_MIN = 30  # cluster size where the debate model takes over
SOURCE_TERMS = 5  # centroid terms used for the earliest-mention query
SOURCE_MIN_HITS = 3  # terms a tweet must share to count as a mention


class DomainClass(str, Enum):
    NEWS = "news"
    GOVERNMENT = "government"
    SATIRE = "satire"
    FAKE_NEWS = "fake_news"
    BLOG = "blog"
    UNKNOWN = "unknown"


class BeliefLabel(str, Enum):
    NEGATION = "negation"
    QUESTION = "question"
    SUPPORT = "support"
    NEUTRAL = "neutral"


def _hostname(url: str) -> str:
    from urllib.parse import urlparse
    host = urlparse(url).netloc.lower()
    return host.split(":")[0].removeprefix("www.")


def classify_domain(url: str) -> DomainClass:
    host = _hostname(url)
    if not host:
        return DomainClass.UNKNOWN

    def matches(domains):
        return any(host == d or host.endswith("." + d) for d in domains)

    if matches(resources.fake_news_domains()):
        return DomainClass.FAKE_NEWS
    if matches(resources.satire_domains()):
        return DomainClass.SATIRE
    if host.endswith(".gov") or host.endswith(".mil") or matches(resources.gov_domains()):
        return DomainClass.GOVERNMENT
    if matches(resources.news_domains()):
        return DomainClass.NEWS
    if matches(resources.blog_domains()):
        return DomainClass.BLOG
    return DomainClass.UNKNOWN


def classify_account(user: UserRef) -> AccountClass:
    handle = user.handle.lower()
    if handle in resources.news_accounts():
        return AccountClass.NEWS_MEDIA
    if handle in resources.org_accounts():
        return AccountClass.ORG
    if handle in resources.high_profile_accounts():
        return AccountClass.HIGH_PROFILE
    return AccountClass.UNKNOWN


def credibility(user: UserRef) -> float:
    followers = max(user.followers, 1)
    return 0.5 * float(user.verified) + 0.5 * min(1.0, math.log10(followers) / 6.0)


# ---------------------------------------------------------------------------
# source identification


class SourceKind(str, Enum):
    RETWEET_ORIGIN = "retweet_origin"
    CITED_URL = "cited_url"
    EARLIEST_TWEET = "earliest_tweet"


@dataclass
class Source:
    kind: SourceKind
    tweet_id: Optional[str] = None
    url: Optional[str] = None
    verified: bool = False
    log_followers: float = 0.0  # min(1, log10(followers)/6)
    account_class: AccountClass = AccountClass.UNKNOWN
    domain_class: DomainClass = DomainClass.UNKNOWN
    degraded: bool = False

    def __post_init__(self):
        if (self.tweet_id is None) == (self.url is None):
            raise ValueError("exactly one of tweet_id/url must be set")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "tweet_id": self.tweet_id,
            "url": self.url,
            "verified": self.verified,
            "log_followers": self.log_followers,
            "account_class": self.account_class.value,
            "domain_class": self.domain_class.value,
            "degraded": self.degraded,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Source":
        return cls(
            kind=SourceKind(obj["kind"]),
            tweet_id=obj.get("tweet_id"),
            url=obj.get("url"),
            verified=obj["verified"],
            log_followers=obj["log_followers"],
            account_class=AccountClass(obj["account_class"]),
            domain_class=DomainClass(obj["domain_class"]),
            degraded=obj.get("degraded", False),
        )


class CorpusIndex:
    """Append-only inverted index over every ingested tweet, for the
    earliest-mention rule."""

    def __init__(self):
        self.tweets: dict[str, Tweet] = {}
        self._postings: dict[int, list[str]] = {}
        self._order: dict[str, int] = {}

    def add(self, tweet: Tweet) -> None:
        if tweet.id in self.tweets:
            return
        self._order[tweet.id] = len(self._order)
        self.tweets[tweet.id] = tweet
        for tid in set(term_id(tok) for tok in tokenize(tweet.text)):
            self._postings.setdefault(tid, []).append(tweet.id)

    def __len__(self) -> int:
        return len(self.tweets)

    def earliest_match(self, terms: list[int], min_hits: int = SOURCE_MIN_HITS) -> Optional[Tweet]:
        hits: dict[str, int] = {}
        for t in terms:
            for tw_id in self._postings.get(t, ()):
                hits[tw_id] = hits.get(tw_id, 0) + 1
        matching = [tw_id for tw_id, n in hits.items() if n >= min_hits]
        if not matching:
            return None
        best = min(matching, key=lambda i: (self.tweets[i].created_at, self._order[i]))
        return self.tweets[best]


def _features_from_tweet(kind: SourceKind, tweet: Tweet, *, tweet_id=None, url=None,
                         degraded=False) -> Source:
    domain = DomainClass.UNKNOWN
    if url is not None:
        domain = classify_domain(url)
    elif tweet.urls:
        domain = classify_domain(tweet.urls[0])
    return Source(
        kind=kind,
        tweet_id=tweet_id,
        url=url,
        verified=tweet.author.verified,
        log_followers=min(1.0, math.log10(max(tweet.author.followers, 1)) / 6.0),
        account_class=classify_account(tweet.author),
        domain_class=domain,
        degraded=degraded,
    )


def identify_source(cluster: EventCluster, index: Optional[CorpusIndex]) -> Source:
    if cluster.size == 0:
        raise ValueError("empty cluster")
    members = sorted(cluster.tweets, key=lambda t: (t.created_at, t.id))

    if index is None:
        first = members[0]
        return _features_from_tweet(SourceKind.EARLIEST_TWEET, first,
                                    tweet_id=first.id, degraded=True)

    for m in members:
        if m.retweet_of:
            origin = index.tweets.get(m.retweet_of)
            carrier = origin if origin is not None else m
            return _features_from_tweet(SourceKind.RETWEET_ORIGIN, carrier,
                                        tweet_id=m.retweet_of)
    for m in members:
        if m.urls:
            return _features_from_tweet(SourceKind.CITED_URL, m, url=m.urls[0])

    terms = cluster.centroid.top_terms(SOURCE_TERMS)
    found = index.earliest_match(terms)
    if found is None:
        found = members[0]
    return _features_from_tweet(SourceKind.EARLIEST_TWEET, found, tweet_id=found.id)


# ---------------------------------------------------------------------------
# belief classification


def classify_belief(tweet: Tweet) -> BeliefLabel:
    text = tweet.text.lower()
    if tweet.retweet_of and text.startswith("rt @"):
        return BeliefLabel.NEUTRAL  # pass-along, no stance of its own
    lex = resources.belief_lexicon()
    if any(cue in text for cue in lex["negation"]):
        return BeliefLabel.NEGATION
    if any(cue in text for cue in lex["question"]) or "?" in text:
        return BeliefLabel.QUESTION
    if any(cue in text for cue in lex["support"]):
        return BeliefLabel.SUPPORT
    return BeliefLabel.NEUTRAL


# ---------------------------------------------------------------------------
# scores


class VeracityStage(str, Enum):
    EARLY = "early"
    DEVELOPING = "developing"


def veracity_dots(value: float) -> int:
    if not -1.0 <= value <= 1.0:
        raise ValueError("veracity value outside [-1, 1]")
    if value < -0.6:
        return 1
    if value < -0.2:
        return 2
    if value < 0.2:
        return 3
    if value < 0.6:
        return 4
    return 5


@dataclass
class VeracityScore:
    value: float
    stage: VeracityStage
    dots: int
    source: Source

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "stage": self.stage.value,
            "dots": self.dots,
            "source": self.source.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VeracityScore":
        return cls(
            value=obj["value"],
            stage=VeracityStage(obj["stage"]),
            dots=obj["dots"],
            source=Source.from_json(obj["source"]),
        )


# ---------------------------------------------------------------------------
# feature extraction for the regressions

_FIRST_PERSON = frozenset("i me my mine we our us im ive id".split())
_ACCOUNT_ORDER = [c.value for c in AccountClass]
_DOMAIN_ORDER = [c.value for c in DomainClass]
N_FEATURES = 2 + len(_ACCOUNT_ORDER) + len(_DOMAIN_ORDER) + 3


def _text_stats(tweets) -> tuple[float, float, float]:
    from newswire.noisefilter import _allcaps_ratio
    exclam, caps, fp = 0.0, 0.0, 0.0
    for t in tweets:
        exclam += min(1.0, t.text.count("!") / 5.0)
        caps += _allcaps_ratio(t.text)
        toks = tokenize(t.text)
        if toks:
            fp += sum(tok in _FIRST_PERSON for tok in toks) / len(toks)
    n = max(len(tweets), 1)
    return exclam / n, caps / n, fp / n


def veracity_features(cluster: EventCluster, source: Source) -> np.ndarray:
    x = np.zeros(N_FEATURES)
    x[0] = float(source.verified)
    x[1] = source.log_followers
    x[2 + _ACCOUNT_ORDER.index(source.account_class.value)] = 1.0
    base = 2 + len(_ACCOUNT_ORDER)
    x[base + _DOMAIN_ORDER.index(source.domain_class.value)] = 1.0
    exclam, caps, fp = _text_stats(cluster.tweets)
    x[base + len(_DOMAIN_ORDER)] = exclam
    x[base + len(_DOMAIN_ORDER) + 1] = caps
    x[base + len(_DOMAIN_ORDER) + 2] = fp
    return x


class UntrainedModel(RuntimeError):
    pass


_GRADE_TARGET = {"true": 1.0, "likely_true": 0.5, "likely_false": -0.5, "false": -1.0}


class VeracityModel:
    """Early-stage margin regression plus the developing-stage debate term."""

    def __init__(self):
        self.weights: np.ndarray | None = None
        self.bias = 0.0
        self.debate_weight = 0.0

    # ----------------------------------------------------------- training

    def fit_early(self, X: np.ndarray, targets: np.ndarray,
                  epsilon: float = 0.1, l2: float = 1e-2) -> "VeracityModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(targets, dtype=float)

        def loss(params):
            w, b = params[:-1], params[-1]
            resid = X @ w + b - y
            slack = np.maximum(np.abs(resid) - epsilon, 0.0)
            grad_r = np.sign(resid) * (slack > 0) * 2 * slack
            g_w = X.T @ grad_r + l2 * 2 * w
            g_b = grad_r.sum()
            return float(slack @ slack + l2 * (w @ w)), np.concatenate([g_w, [g_b]])

        x0 = np.zeros(X.shape[1] + 1)
        res = optimize.minimize(loss, x0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 400})
        self.weights = res.x[:-1]
        self.bias = float(res.x[-1])
        return self

    def fit_debate(self, raws: np.ndarray, debates: np.ndarray,
                   targets: np.ndarray) -> "VeracityModel":
        """One non-negative coefficient on the debate term, least squares on
        the early model's residuals."""
        d = np.asarray(debates, dtype=float)
        resid = np.asarray(targets, dtype=float) - np.asarray(raws, dtype=float)
        denom = float(d @ d)
        self.debate_weight = max(0.0, float(d @ resid) / denom) if denom > 0 else 0.0
        return self

    # ----------------------------------------------------------- scoring

    def raw_early(self, cluster: EventCluster, source: Source) -> float:
        if self.weights is None:
            raise UntrainedModel("veracity model has not been fitted")
        return float(veracity_features(cluster, source) @ self.weights + self.bias)

    # ----------------------------------------------------------- persist

    def to_json(self) -> dict:
        if self.weights is None:
            raise UntrainedModel("veracity model has not been fitted")
        return {
            "version": 1,
            "weights": [float(w) for w in self.weights],
            "bias": self.bias,
            "debate_weight": self.debate_weight,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VeracityModel":
        inst = cls()
        inst.weights = np.array(obj["weights"], dtype=float)
        inst.bias = obj["bias"]
        inst.debate_weight = obj["debate_weight"]
        return inst

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "VeracityModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _clamp(v: float) -> float:
    return max(-1.0, min(1.0, v))


def score_veracity_early(cluster: EventCluster, source: Source,
                         model: VeracityModel) -> VeracityScore:
    if cluster.size < 3:
        raise ValueError("clusters are born at 3 tweets")
    value = _clamp(model.raw_early(cluster, source))
    return VeracityScore(value=value, stage=VeracityStage.EARLY,
                         dots=veracity_dots(value), source=source)


def debate_signal(cluster: EventCluster) -> float:
    """Credibility-weighted support minus doubt, in [-1, 1]."""
    support, doubt, total = 0.0, 0.0, 0.0
    for t in cluster.tweets:
        c = credibility(t.author)
        total += c
        label = classify_belief(t)
        if label is BeliefLabel.SUPPORT:
            support += c
        elif label in (BeliefLabel.NEGATION, BeliefLabel.QUESTION):
            doubt += c
    if total == 0:
        return 0.0
    return (support - doubt) / total


def score_veracity_developing(cluster: EventCluster, source: Source,
                              model: VeracityModel) -> VeracityScore:
    if cluster.size < DEVELOPING_MIN:
        raise ValueError(f"developing model needs {DEVELOPING_MIN}+ tweets")
    raw = model.raw_early(cluster, source)
    value = _clamp(raw + model.debate_weight * debate_signal(cluster))
    return VeracityScore(value=value, stage=VeracityStage.DEVELOPING,
                         dots=veracity_dots(value), source=source)


def score_cluster(cluster: EventCluster, index: Optional[CorpusIndex],
                  model: VeracityModel) -> VeracityScore:
    """Stage dispatch: early under the developing threshold, debate model at
    or above it."""
    source = identify_source(cluster, index)
    if cluster.size >= DEVELOPING_MIN:
        return score_veracity_developing(cluster, source, model)
    return score_veracity_early(cluster, source, model)


def train_veracity_model(labeled_early, labeled_developing) -> VeracityModel:
    """labeled_early: (cluster, source, grade); labeled_developing likewise.
    Grades: true | likely_true | likely_false | false."""
    model = VeracityModel()
    X = np.array([veracity_features(c, s) for c, s, _ in labeled_early])
    y = np.array([_GRADE_TARGET[g] for _, _, g in labeled_early])
    model.fit_early(X, y)
    if labeled_developing:
        raws = np.array([model.raw_early(c, s) for c, s, _ in labeled_developing])
        debates = np.array([debate_signal(c) for c, _, _ in labeled_developing])
        targets = np.array([_GRADE_TARGET[g] for _, _, g in labeled_developing])
        model.fit_debate(raws, debates, targets)
    return model

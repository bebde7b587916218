"""Shared domain types, tokenization and sparse tf-idf algebra.

Everything downstream (noise filtering, clustering, scoring, feeds) works
on the types defined here. All values are plain immutable-ish dataclasses;
the only mutable shared structure is the document-frequency table, which is
single-writer and hands out frozen snapshots.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional

# Term ids come from a stable hash of the token text. Collisions are
# tolerated; 2^20 buckets keeps memory bounded on unbounded streams.
VOCAB_BUCKETS = 1 << 20


def term_id(token: str) -> int:
    return zlib.crc32(token.encode("utf-8")) & (VOCAB_BUCKETS - 1)


# --------------------------------------------------------------------------
# Tokenization
# --------------------------------------------------------------------------

# URLs, #hashtags, @handles and $cashtags survive as single typed tokens;
# everything else becomes lowercased word tokens with edge punctuation
# stripped (inner apostrophes/hyphens kept so o'hare stays one token).
_TOKEN_RE = re.compile(
    r"https?://\S+|www\.\S+"
    r"|[#@][A-Za-z_][A-Za-z0-9_]*"
    r"|\$[A-Za-z][A-Za-z0-9_]*"
    r"|[A-Za-z0-9][A-Za-z0-9'’_-]*"
)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; hashtags/handles/URLs/cashtags kept whole."""
    if not text:
        return []
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def is_hashtag(token: str) -> bool:
    return token.startswith("#")


def is_handle(token: str) -> bool:
    return token.startswith("@")


def is_url(token: str) -> bool:
    return token.startswith(("http://", "https://", "www."))


def is_cashtag(token: str) -> bool:
    return token.startswith("$")


def normalize_text(text: str) -> str:
    """Canonical form used for exact duplicate detection."""
    return " ".join(tokenize(text))


# --------------------------------------------------------------------------
# Sparse vectors
# --------------------------------------------------------------------------


class SparseVector:
    """tf-idf weighted sparse vector with a cached Euclidean norm."""

    __slots__ = ("entries", "norm")

    def __init__(self, entries: dict[int, float] | None = None):
        self.entries: dict[int, float] = {}
        if entries:
            for t, w in entries.items():
                if w != 0.0:
                    self.entries[t] = w
        self.norm = math.sqrt(sum(w * w for w in self.entries.values()))

    def dot(self, other: "SparseVector") -> float:
        a, b = self.entries, other.entries
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[t] for t, w in a.items() if t in b)

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector({t: w * factor for t, w in self.entries.items()})

    def top_terms(self, k: int) -> list[int]:
        """Term ids of the k highest-weight entries (stable order)."""
        ranked = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [t for t, _ in ranked[:k]]

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseVector) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"SparseVector({len(self.entries)} terms, norm={self.norm:.4f})"

    def to_json(self) -> dict:
        return {str(t): w for t, w in sorted(self.entries.items())}

    @classmethod
    def from_json(cls, obj: dict) -> "SparseVector":
        return cls({int(t): float(w) for t, w in obj.items()})


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity clamped to [0, 1]; 0 when either vector is empty."""
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    value = a.dot(b) / (a.norm * b.norm)
    return min(1.0, max(0.0, value))


def mean_vector(vectors: list[SparseVector]) -> SparseVector:
    if not vectors:
        return SparseVector()
    acc: dict[int, float] = {}
    for v in vectors:
        for t, w in v.entries.items():
            acc[t] = acc.get(t, 0.0) + w
    n = float(len(vectors))
    return SparseVector({t: w / n for t, w in acc.items()})


# --------------------------------------------------------------------------
# Document frequency statistics
# --------------------------------------------------------------------------


class DocumentFrequencyTable:
    """Per-window document frequencies, single writer.

    `snapshot()` hands readers a frozen copy; the pipeline swaps snapshots
    atomically when the window rolls.
    """

    def __init__(self):
        self.n_docs = 0
        self.df: dict[int, int] = {}

    def add_document(self, tokens: Iterable[str]) -> None:
        self.n_docs += 1
        for t in {term_id(tok) for tok in tokens}:
            self.df[t] = self.df.get(t, 0) + 1

    def idf(self, t: int) -> float:
        n = max(self.n_docs, 1)
        return math.log(n / (1.0 + self.df.get(t, 0)))

    def snapshot(self) -> "DocumentFrequencyTable":
        snap = DocumentFrequencyTable()
        snap.n_docs = self.n_docs
        snap.df = dict(self.df)
        return snap

    def to_json(self) -> dict:
        return {"n_docs": self.n_docs, "df": {str(t): c for t, c in sorted(self.df.items())}}

    @classmethod
    def from_json(cls, obj: dict) -> "DocumentFrequencyTable":
        table = cls()
        table.n_docs = int(obj["n_docs"])
        table.df = {int(t): int(c) for t, c in obj["df"].items()}
        return table


def tfidf_vector(tokens: list[str], stats: DocumentFrequencyTable) -> SparseVector:
    """weight(t) = tf(t) * ln(N / (1 + df(t))).

    Unseen terms carry df = 0. Terms whose idf is non-positive (present in
    at least N/e of the window) are dropped; they carry no signal and would
    otherwise poison cosine similarities.
    """
    counts: dict[int, int] = {}
    for tok in tokens:
        t = term_id(tok)
        counts[t] = counts.get(t, 0) + 1
    entries = {}
    for t, tf in counts.items():
        w = tf * stats.idf(t)
        if w > 0.0:
            entries[t] = w
    return SparseVector(entries)


# --------------------------------------------------------------------------
# Domain enums
# --------------------------------------------------------------------------


class StreamTag(str, Enum):
    SAMPLE = "sample"
    FILTERED = "filtered"


class AccountClass(str, Enum):
    NEWS_MEDIA = "news_media"
    ORG = "org"
    HIGH_PROFILE = "high_profile"
    SATIRE = "satire"
    FAKE_NEWS_SITE = "fake_news_site"
    UNKNOWN = "unknown"


class TopicLabel(str, Enum):
    CRISIS = "Crisis"
    LAW_CRIME = "Law/Crime"
    WEATHER = "Weather"
    POLITICS = "Politics"
    BUSINESS = "Business"
    ENTERTAINMENT = "Entertainment"
    SPORTS = "Sports"
    TECHNOLOGY = "Technology"
    HEALTH = "Health"
    OTHER = "Other"


class ClusterStatus(str, Enum):
    ACTIVE = "active"
    ARCHIVED = "archived"


# --------------------------------------------------------------------------
# Timestamps
# --------------------------------------------------------------------------


def parse_ts(value: str) -> datetime:
    """ISO-8601 UTC string -> aware datetime (millisecond precision kept)."""
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_ts(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


# --------------------------------------------------------------------------
# Tweets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UserRef:
    user_id: str
    handle: str
    verified: bool = False
    followers: int = 0
    profile_location: Optional[str] = None
    account_class: AccountClass = AccountClass.UNKNOWN


@dataclass(frozen=True)
class Tweet:
    id: str
    created_at: datetime
    text: str
    author: UserRef
    retweet_of: Optional[str] = None
    urls: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    lang: str = "und"
    stream_tag: StreamTag = StreamTag.SAMPLE

    def tokens(self) -> list[str]:
        return tokenize(self.text)

    def is_retweet(self) -> bool:
        return self.retweet_of is not None


class MalformedTweet(ValueError):
    pass


def tweet_from_json(obj: dict, stream_tag: StreamTag | None = None) -> Tweet:
    """Parse one corpus line. Raises MalformedTweet on anything unusable."""
    try:
        tid = obj["id"]
        if not tid or not isinstance(tid, str):
            raise MalformedTweet("missing or empty id")
        created = parse_ts(obj["created_at"])
        author_obj = obj.get("author") or {}
        author = UserRef(
            user_id=str(author_obj.get("user_id", "")),
            handle=str(author_obj.get("handle", "")).lstrip("@").lower(),
            verified=bool(author_obj.get("verified", False)),
            followers=max(0, int(author_obj.get("followers", 0))),
            profile_location=author_obj.get("profile_location"),
            account_class=AccountClass(author_obj.get("account_class", "unknown")),
        )
        hashtags = tuple(h.lstrip("#").lower() for h in obj.get("hashtags", []))
        tag = stream_tag or StreamTag(obj.get("stream_tag", "sample"))
        return Tweet(
            id=tid,
            created_at=created,
            text=str(obj.get("text", ""))[:280],
            author=author,
            retweet_of=obj.get("retweet_of"),
            urls=tuple(obj.get("urls", [])),
            hashtags=hashtags,
            lang=str(obj.get("lang", "und")).lower(),
            stream_tag=tag,
        )
    except MalformedTweet:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedTweet(str(exc)) from exc


def tweet_to_json(tweet: Tweet) -> dict:
    return {
        "id": tweet.id,
        "created_at": format_ts(tweet.created_at),
        "text": tweet.text,
        "author": {
            "user_id": tweet.author.user_id,
            "handle": tweet.author.handle,
            "verified": tweet.author.verified,
            "followers": tweet.author.followers,
            "profile_location": tweet.author.profile_location,
            "account_class": tweet.author.account_class.value,
        },
        "retweet_of": tweet.retweet_of,
        "urls": list(tweet.urls),
        "hashtags": list(tweet.hashtags),
        "lang": tweet.lang,
        "stream_tag": tweet.stream_tag.value,
    }


def read_tweet_corpus(path) -> list[Tweet]:
    """Load a JSONL corpus, skipping malformed lines."""
    tweets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                tweets.append(tweet_from_json(json.loads(line)))
            except (json.JSONDecodeError, MalformedTweet):
                continue
    return tweets


# --------------------------------------------------------------------------
# Event clusters
# --------------------------------------------------------------------------


@dataclass
class NewsworthinessScore:
    p_t_long: float
    p_t_short: float
    p_o_long: float
    p_o_short: float
    p_a: float
    combined: float
    grade: str  # not_newsworthy | partially_newsworthy | newsworthy

    def components(self) -> list[float]:
        return [self.p_t_long, self.p_t_short, self.p_o_long, self.p_o_short, self.p_a]

    def to_json(self) -> dict:
        return {
            "p_t_long": self.p_t_long,
            "p_t_short": self.p_t_short,
            "p_o_long": self.p_o_long,
            "p_o_short": self.p_o_short,
            "p_a": self.p_a,
            "combined": self.combined,
            "grade": self.grade,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NewsworthinessScore":
        return cls(**obj)


GRADE_ORDER = ["not_newsworthy", "partially_newsworthy", "newsworthy"]


class EventCluster:
    """A growing set of tweets about one event.

    The centroid is the mean over distinct member texts: retweets and exact
    duplicates count toward size (public attention) but contribute one
    vector, so retweet storms cannot drag the centroid.
    """

    def __init__(self, cluster_id: str, created_at: datetime):
        self.cluster_id = cluster_id
        self.tweets: list[Tweet] = []
        self.vectors: dict[str, SparseVector] = {}
        self.created_at = created_at
        self.updated_at = created_at
        self.summary: Optional[str] = None  # member tweet id
        self.topic: Optional[TopicLabel] = None
        self.newsworthiness: Optional[NewsworthinessScore] = None
        self.veracity = None  # VeracityScore, set by context layer
        self.geo = None  # GeoTag
        self.impact = None  # ImpactLevel
        self.status = ClusterStatus.ACTIVE
        # distinct-text centroid bookkeeping
        self._text_counts: dict[str, int] = {}
        self._centroid_sum: dict[int, float] = {}
        self._centroid_n = 0

    @property
    def size(self) -> int:
        return len(self.tweets)

    @property
    def centroid(self) -> SparseVector:
        if self._centroid_n == 0:
            return SparseVector()
        n = float(self._centroid_n)
        return SparseVector({t: w / n for t, w in self._centroid_sum.items()})

    def add(self, tweet: Tweet, vector: SparseVector) -> None:
        if self.status is ClusterStatus.ARCHIVED:
            raise RuntimeError(f"cluster {self.cluster_id} is archived")
        self.tweets.append(tweet)
        self.vectors[tweet.id] = vector
        key = normalize_text(tweet.text)
        seen = self._text_counts.get(key, 0)
        self._text_counts[key] = seen + 1
        if seen == 0:
            for t, w in vector.entries.items():
                self._centroid_sum[t] = self._centroid_sum.get(t, 0.0) + w
            self._centroid_n += 1
        if tweet.created_at > self.updated_at:
            self.updated_at = tweet.created_at

    def recomputed_centroid(self) -> SparseVector:
        """From-scratch centroid, for invariant checks against the
        incrementally maintained one."""
        seen: set[str] = set()
        distinct = []
        for tw in self.tweets:
            key = normalize_text(tw.text)
            if key not in seen:
                seen.add(key)
                distinct.append(self.vectors[tw.id])
        return mean_vector(distinct)

    def member_ids(self) -> list[str]:
        return [t.id for t in self.tweets]

    def archive(self) -> None:
        self.status = ClusterStatus.ARCHIVED

    def to_json(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "tweets": [tweet_to_json(t) for t in self.tweets],
            "vectors": {tid: v.to_json() for tid, v in sorted(self.vectors.items())},
            "created_at": format_ts(self.created_at),
            "updated_at": format_ts(self.updated_at),
            "summary": self.summary,
            "topic": self.topic.value if self.topic else None,
            "newsworthiness": self.newsworthiness.to_json() if self.newsworthiness else None,
            "veracity": self.veracity.to_json() if self.veracity else None,
            "geo": self.geo.to_json() if self.geo else None,
            "impact": self.impact.to_json() if self.impact else None,
            "status": self.status.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EventCluster":
        cluster = cls(obj["cluster_id"], parse_ts(obj["created_at"]))
        vectors = {tid: SparseVector.from_json(v) for tid, v in obj["vectors"].items()}
        for tobj in obj["tweets"]:
            tweet = tweet_from_json(tobj)
            cluster.add(tweet, vectors[tweet.id])
        cluster.created_at = parse_ts(obj["created_at"])
        cluster.updated_at = parse_ts(obj["updated_at"])
        cluster.summary = obj.get("summary")
        cluster.topic = TopicLabel(obj["topic"]) if obj.get("topic") else None
        if obj.get("newsworthiness"):
            cluster.newsworthiness = NewsworthinessScore.from_json(obj["newsworthiness"])
        if obj.get("veracity"):
            from newswire.veracity import VeracityScore

            cluster.veracity = VeracityScore.from_json(obj["veracity"])
        if obj.get("geo"):
            from newswire.geo import GeoTag

            cluster.geo = GeoTag.from_json(obj["geo"])
        if obj.get("impact"):
            from newswire.disseminate import ImpactLevel

            cluster.impact = ImpactLevel.from_json(obj["impact"])
        cluster.status = ClusterStatus(obj.get("status", "active"))
        return cluster

    def __repr__(self) -> str:
        return f"EventCluster({self.cluster_id}, size={self.size}, status={self.status.value})"

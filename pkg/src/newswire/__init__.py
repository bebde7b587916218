"""newswire: streaming social-media news detection for a single desk.

Ingest tweets, strip noise, cluster into events, score newsworthiness and
veracity, pick headlines, and fan results out to channels and feeds.
"""

from newswire.model import (
    AccountClass,
    ClusterStatus,
    DocumentFrequencyTable,
    EventCluster,
    MalformedTweet,
    NewsworthinessScore,
    SparseVector,
    StreamTag,
    TopicLabel,
    Tweet,
    UserRef,
    cosine,
    mean_vector,
    normalize_text,
    parse_ts,
    format_ts,
    term_id,
    tfidf_vector,
    tokenize,
    tweet_from_json,
    tweet_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "AccountClass",
    "ClusterStatus",
    "DocumentFrequencyTable",
    "EventCluster",
    "MalformedTweet",
    "NewsworthinessScore",
    "SparseVector",
    "StreamTag",
    "TopicLabel",
    "Tweet",
    "UserRef",
    "cosine",
    "mean_vector",
    "normalize_text",
    "parse_ts",
    "format_ts",
    "term_id",
    "tfidf_vector",
    "tokenize",
    "tweet_from_json",
    "tweet_to_json",
    "__version__",
]

"""Headline selection for event clusters.

Each cluster is summarized by one of its own member tweets: the member
whose vector sits closest to the cluster centroid, discounted by how
informal its language is. The penalty keeps chatty eyewitness texts from
beating a clean rewrite of the same fact. Selection reruns after every
merge, and the stored summary id only changes when the winner changes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from newswire import resources
from newswire.entities import entity_surfaces
from newswire.model import EventCluster, Tweet, cosine

# Informal-language rules and their contribution to the score. Each rule
# fires at most once per tweet; the weighted sum is capped at 1.
DEFAULT_WEIGHTS: Mapping[str, float] = {
    "oov": 0.25,
    "pronouns": 0.20,
    "mid_hashtag": 0.15,
    "repeat_punct": 0.15,
    "shouting": 0.15,
    "handles": 0.10,
}

DEFAULT_LAMBDA = 0.3

RULE_NAMES = frozenset(DEFAULT_WEIGHTS)

_FIRST_SECOND_PERSON = frozenset({
    "i", "me", "my", "mine", "myself",
    "we", "us", "our", "ours", "ourselves",
    "you", "your", "yours", "yourself", "yourselves",
    "u", "ur", "im", "ive", "weve", "youre", "youve",
})

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_HANDLE_RE = re.compile(r"@[A-Za-z_][A-Za-z0-9_]*")
_HASHTAG_RE = re.compile(r"#[A-Za-z_][A-Za-z0-9_]*")
_WORD_RE = re.compile(r"[A-Za-z']+")
_REPEAT_PUNCT_RE = re.compile(r"[!?]{3,}|\.{3,}|,{3,}|…")
_CAPS_RE = re.compile(r"(?<![A-Za-z])[A-Z]{2,}(?![a-z])")


@dataclass(frozen=True)
class SummarizerConfig:
    """Penalty strength and rule weights, loadable from pipeline config."""

    lam: float = DEFAULT_LAMBDA
    weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_WEIGHTS)
    )

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        unknown = set(self.weights) - RULE_NAMES
        if unknown:
            raise ValueError(f"unknown informality rules: {sorted(unknown)}")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"rule weights must sum to 1, got {total}")
        for name, w in self.weights.items():
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight for {name} outside [0, 1]: {w}")

    def to_json(self) -> dict:
        return {"lambda": self.lam, "weights": dict(self.weights)}

    @classmethod
    def from_json(cls, obj: dict) -> "SummarizerConfig":
        return cls(
            lam=float(obj.get("lambda", DEFAULT_LAMBDA)),
            weights={str(k): float(v) for k, v in obj["weights"].items()}
            if "weights" in obj
            else dict(DEFAULT_WEIGHTS),
        )


_DEFAULT_CONFIG = SummarizerConfig()


def _strip_markup(text: str) -> str:
    return _HANDLE_RE.sub(" ", _URL_RE.sub(" ", text))


def _lexicon_words() -> frozenset[str]:
    global _LEXICON_WORDS
    if _LEXICON_WORDS is None:
        pool: set[str] = set()
        for name in resources.person_lexicon() | resources.org_lexicon():
            pool.update(_WORD_RE.findall(name))
        for place in resources.gazetteer():
            for name in place.all_names():
                pool.update(_WORD_RE.findall(name.lower()))
        _LEXICON_WORDS = frozenset(pool)
    return _LEXICON_WORDS


_LEXICON_WORDS: Optional[frozenset[str]] = None


def _rule_oov(text: str) -> bool:
    # Dictionary words plus named entities: both the ones extracted from
    # this text and any word of the bundled name lexicons (a city inside
    # a hashtag never reads as a misspelling). Hashtag bodies are spelled
    # out, so a typo hidden inside a tag still counts.
    words = resources.english_words()
    acro = resources.acronyms()
    exempt: set[str] = set(_lexicon_words())
    for surface in entity_surfaces(text):
        exempt.update(_WORD_RE.findall(surface))
    for token in _WORD_RE.findall(_strip_markup(text).lower()):
        token = token.strip("'")
        if len(token) < 2:
            continue
        if token in words or token in exempt or token.upper() in acro:
            continue
        return True
    return False


def _rule_mid_hashtag(text: str) -> bool:
    # Trailing tag blocks are newsroom convention; a tag used as a word
    # mid-sentence is not.
    tail = text
    while True:
        stripped = tail.rstrip()
        m = re.search(r"(#[A-Za-z_][A-Za-z0-9_]*|https?://\S+)$", stripped)
        if not m:
            tail = stripped
            break
        tail = stripped[: m.start()]
    return bool(_HASHTAG_RE.search(tail))


def _rule_handles(text: str) -> bool:
    allowed = (
        resources.org_accounts()
        | resources.news_accounts()
        | resources.high_profile_accounts()
    )
    for m in _HANDLE_RE.finditer(text):
        if m.group(0)[1:].lower() not in allowed:
            return True
    return False


def _rule_pronouns(text: str) -> bool:
    for token in _WORD_RE.findall(_strip_markup(text).lower()):
        if token.replace("'", "") in _FIRST_SECOND_PERSON:
            return True
    return False


def _rule_repeat_punct(text: str) -> bool:
    return bool(_REPEAT_PUNCT_RE.search(text))


def _rule_shouting(text: str) -> bool:
    acro = resources.acronyms()
    caps_ok = resources.newsroom_caps()
    for token in _CAPS_RE.findall(_strip_markup(text)):
        if token in acro or token in caps_ok:
            continue
        return True
    return False


_RULES = {
    "oov": _rule_oov,
    "mid_hashtag": _rule_mid_hashtag,
    "handles": _rule_handles,
    "pronouns": _rule_pronouns,
    "repeat_punct": _rule_repeat_punct,
    "shouting": _rule_shouting,
}


def informality(tweet: Tweet, config: Optional[SummarizerConfig] = None) -> float:
    """Weighted share of informal-language rules the tweet violates, in [0, 1]."""
    cfg = config or _DEFAULT_CONFIG
    total = 0.0
    for name, weight in cfg.weights.items():
        if weight > 0.0 and _RULES[name](tweet.text):
            total += weight
    return min(1.0, total)


def select_summary(cluster: EventCluster, config: Optional[SummarizerConfig] = None) -> str:
    """Id of the member maximizing cosine to centroid minus lam * informality.

    Ties go to the earlier created_at, then the lower tweet id.
    """
    cfg = config or _DEFAULT_CONFIG
    if cluster.size < 3:
        raise ValueError(f"cluster {cluster.cluster_id} too small to summarize")
    centroid = cluster.centroid
    order = sorted(cluster.tweets, key=lambda t: (t.created_at, t.id))
    best_id: Optional[str] = None
    best_score = 0.0
    for tweet in order:
        vec = cluster.vectors[tweet.id]
        score = cosine(vec, centroid) - cfg.lam * informality(tweet, cfg)
        # strict > keeps the first (earliest) member on exact ties
        if best_id is None or score > best_score:
            best_id = tweet.id
            best_score = score
    assert best_id is not None
    return best_id


def resummarize_on_merge(
    cluster: EventCluster, config: Optional[SummarizerConfig] = None
) -> Optional[str]:
    """Rerun selection after a merge; store and return the id only if it changed."""
    new_id = select_summary(cluster, config)
    if new_id != cluster.summary:
        cluster.summary = new_id
        return new_id
    return None

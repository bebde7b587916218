"""Toponym detection and resolution for event clusters.

Two detection layers: large geographies (continents, countries, states)
match by exact string only, while cities, landmarks, and state
misspellings go through a fuzzy matcher that combines exact aliases,
abbreviations and prefixes, and small edit distances into one
reciprocal-rank score. Resolution to coordinates weighs population,
author profile locations, and the other place names in the cluster.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional

from newswire import resources
from newswire.model import EventCluster
from newswire.resources import Place


class Granularity(Enum):
    CONTINENT = "continent"
    COUNTRY = "country"
    STATE = "state"
    CITY = "city"
    DISTRICT = "district"
    LANDMARK = "landmark"


# finer granularity wins when a cluster mentions places at several levels
_SPECIFICITY = {
    Granularity.LANDMARK: 5,
    Granularity.DISTRICT: 4,
    Granularity.CITY: 3,
    Granularity.STATE: 2,
    Granularity.COUNTRY: 1,
    Granularity.CONTINENT: 0,
}

_LARGE = frozenset({"continent", "country", "state"})
_FUZZY_POOL = frozenset({"city", "landmark", "state", "district"})

_EDIT_CAP = 2
_MIN_FUZZY_LEN = 5
_MIN_PREFIX_LEN = 4


@dataclass(frozen=True)
class GeoTag:
    toponym: str
    resolved_name: str
    lat: float
    lon: float
    granularity: Granularity
    confidence: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")

    def to_json(self) -> dict:
        return {
            "toponym": self.toponym,
            "resolved_name": self.resolved_name,
            "lat": self.lat,
            "lon": self.lon,
            "granularity": self.granularity.value,
            "confidence": self.confidence,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeoTag":
        return cls(
            toponym=obj["toponym"],
            resolved_name=obj["resolved_name"],
            lat=float(obj["lat"]),
            lon=float(obj["lon"]),
            granularity=Granularity(obj["granularity"]),
            confidence=float(obj["confidence"]),
        )


@dataclass(frozen=True)
class ToponymCandidate:
    surface: str
    name: str
    layer: int  # 1 = large geography, 2 = city/landmark path
    score: float
    places: tuple[Place, ...]
    mentions: int = 1


def _edit_distance(a: str, b: str, cap: int = _EDIT_CAP) -> int:
    """Levenshtein distance, returning cap + 1 as soon as it is exceeded."""
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        best = i
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + cost))
            best = min(best, cur[-1])
        if best > cap:
            return cap + 1
        prev = cur
    return prev[-1]


@lru_cache(maxsize=1)
def _large_exact() -> dict[str, tuple[Place, ...]]:
    index: dict[str, list[Place]] = {}
    for p in resources.gazetteer():
        if p.granularity not in _LARGE:
            continue
        for n in p.all_names():
            index.setdefault(n.lower(), []).append(p)
    return {k: tuple(v) for k, v in index.items()}


@lru_cache(maxsize=1)
def _state_abbrevs() -> dict[str, Place]:
    # two-letter codes whose lowercase form is an English word (IN, OK,
    # OR, ...) are unusable as geo signals and are dropped
    words = resources.english_words()
    out = {}
    for p in resources.gazetteer():
        if p.granularity != "state":
            continue
        for a in p.abbreviations:
            if a.lower() not in words:
                out[a] = p
    return out


@lru_cache(maxsize=1)
def _fuzzy_places() -> tuple[Place, ...]:
    return tuple(p for p in resources.gazetteer() if p.granularity in _FUZZY_POOL)


@lru_cache(maxsize=1)
def _known_lowercase() -> frozenset[str]:
    """Lowercased names, aliases, and abbreviations eligible as bare tokens.

    Abbreviations that spell an English word when lowercased (IN, OK,
    OR) would fire on ordinary prose and are left out.
    """
    words = resources.english_words()
    out: set[str] = set()
    for p in _fuzzy_places():
        for n in p.all_names():
            out.add(n.lower())
        for a in p.abbreviations:
            if a.lower() not in words:
                out.add(a.lower())
    return frozenset(out)


@lru_cache(maxsize=4096)
def _match_fuzzy(surface: str) -> tuple[tuple[Place, float], ...]:
    """Reciprocal-rank match of one surface against the fuzzy pool.

    Three channels are ranked independently (exact name or alias,
    abbreviation or prefix, edit distance at most 2); a place scores the
    sum of 1/rank over the channels that produced it.
    """
    s = surface.lower()
    if not s:
        return ()

    exact = [p for p in _fuzzy_places() if s in (n.lower() for n in p.all_names())]
    exact.sort(key=lambda p: (-p.population, p.name))

    words = resources.english_words()
    abbrev = [
        p for p in _fuzzy_places()
        if any(s == a.lower() and a.lower() not in words for a in p.abbreviations)
    ]
    abbrev.sort(key=lambda p: (-p.population, p.name))
    if len(s) >= _MIN_PREFIX_LEN:
        prefixes = [
            p for p in _fuzzy_places()
            if p not in abbrev
            and any(n.lower().startswith(s) and n.lower() != s for n in p.all_names())
        ]
        prefixes.sort(key=lambda p: (-p.population, p.name))
        abbrev.extend(prefixes)

    edits: list[tuple[int, Place]] = []
    if len(s) >= _MIN_FUZZY_LEN:
        for p in _fuzzy_places():
            best = min(_edit_distance(s, n.lower()) for n in p.all_names())
            if 1 <= best <= _EDIT_CAP:
                edits.append((best, p))
        edits.sort(key=lambda dp: (dp[0], -dp[1].population, dp[1].name))

    scores: dict[Place, float] = {}
    for channel in (exact, abbrev, [p for _, p in edits]):
        for rank, p in enumerate(channel, 1):
            scores[p] = scores.get(p, 0.0) + 1.0 / rank
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], -kv[0].population, kv[0].name))
    return tuple(ranked)


_SPAN_RE = re.compile(
    r"\b[A-Z][a-zA-Z'.]*(?:[ ](?:of[ ]|de[ ])?[A-Z][a-zA-Z'.]*)*"
)
_HASHTAG_RE = re.compile(r"#([A-Za-z][A-Za-z0-9_]*)")
_HANDLE_RE = re.compile(r"@[A-Za-z_][A-Za-z0-9_]*")
_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_LOWER_TOKEN_RE = re.compile(r"\b[a-z][a-z.]+\b")
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Za-z])(?=[0-9])|(?<=[0-9])(?=[A-Za-z])")


def _candidate_strings(text: str) -> list[str]:
    """Surfaces worth matching: capitalized spans, hashtag bodies, and
    bare tokens that are either known names or fuzzy-eligible unknowns."""
    clean = _HANDLE_RE.sub(" ", _URL_RE.sub(" ", text))
    out: list[str] = []
    seen: set[str] = set()

    def push(s: str):
        s = s.strip(" .,")
        if len(s) >= 2 and s.lower() not in seen:
            seen.add(s.lower())
            out.append(s)

    no_tags = _HASHTAG_RE.sub(" ", clean)
    for m in _SPAN_RE.finditer(no_tags):
        push(m.group(0))

    aliases = resources.hashtag_aliases()
    for m in _HASHTAG_RE.finditer(clean):
        body = m.group(1)
        mapped = aliases.get(body.lower())
        if mapped:
            push(mapped)
        else:
            push(_CAMEL_RE.sub(" ", body))

    words = resources.english_words()
    known = _known_lowercase()
    for m in _LOWER_TOKEN_RE.finditer(no_tags):
        token = m.group(0).strip(".")
        if token in known:
            push(token)
        elif len(token) >= _MIN_FUZZY_LEN and token not in words:
            push(token)
    return out


def _match_surface(surface: str) -> Optional[tuple[str, int, float, tuple[Place, ...]]]:
    """Resolve one surface to (canonical name, layer, score, places)."""
    s = surface.lower()
    large = _large_exact().get(s)
    if not large:
        hit = _state_abbrevs().get(surface)
        if hit is not None:
            large = (hit,)
    if large:
        # same name can also label a city (New York); keep those rows so
        # resolution can weigh both readings
        extra = tuple(
            p for p, _ in _match_fuzzy(surface)
            if p not in large and s in (n.lower() for n in p.all_names())
        )
        return large[0].name, 1, 2.0, large + extra

    ranked = _match_fuzzy(surface)
    if not ranked:
        return None
    best_place, best_score = ranked[0]
    # every row sharing the winning canonical name stays in play
    rows = tuple(
        p for p, _ in ranked if p.name == best_place.name
    ) or (best_place,)
    return best_place.name, 2, best_score, rows


def geoparse(cluster: EventCluster) -> list[ToponymCandidate]:
    """Toponym candidates across distinct member texts, best match per span."""
    counts: dict[str, int] = {}
    first_surface: dict[str, str] = {}
    seen_texts: set[str] = set()
    for tweet in cluster.tweets:
        text = tweet.text
        if text in seen_texts:
            continue
        seen_texts.add(text)
        for surface in _candidate_strings(text):
            key = surface.lower()
            counts[key] = counts.get(key, 0) + 1
            first_surface.setdefault(key, surface)

    out: list[ToponymCandidate] = []
    for key, n in counts.items():
        surface = first_surface[key]
        hit = _match_surface(surface)
        if hit is None:
            continue
        name, layer, score, places = hit
        out.append(ToponymCandidate(
            surface=surface, name=name, layer=layer, score=score,
            places=places, mentions=n,
        ))
    out.sort(key=lambda c: (-c.score * c.mentions, c.name))
    return out


def _resolves_near(text: str, place: Place) -> bool:
    """True when a freeform location string is consistent with place."""
    low = text.lower()
    parts = [p.strip() for p in re.split(r"[,/|]", low) if p.strip()]
    # also try individual words ("Fort Worth TX") and state codes
    tokens = re.findall(r"[A-Za-z][A-Za-z.']*", text)
    names = {place.name.lower(), place.admin1.lower(), place.country.lower()}
    names.discard("")

    def consistent(q: Place) -> bool:
        if q.name == place.name and q.granularity == place.granularity:
            return True
        if place.admin1 and place.admin1 in (q.admin1, q.name):
            return True
        if place.granularity in _LARGE and q.admin1 == place.name:
            return True
        if place.country and q.country == place.country and q.granularity == "country":
            return True
        return False

    for part in parts:
        if part in names:
            return True
        for q in resources.gazetteer_by_name().get(part, ()):
            if consistent(q):
                return True
    for token in tokens:
        if token.lower() in names:
            return True
        hit = _state_abbrevs().get(token.upper())
        if hit is not None and consistent(hit):
            return True
    return False


def geocode(
    candidate: ToponymCandidate,
    profile_locations: Iterable[str] = (),
    cooccurring: Iterable[ToponymCandidate] = (),
) -> Optional[GeoTag]:
    """Pick one gazetteer row for a candidate and return its GeoTag.

    Disambiguation score sums three terms: population prior, share of
    author profile locations consistent with the row, and share of
    co-occurring toponyms consistent with it. Direct evidence outweighs
    the prior, so one prominent namesake cannot silence local context.
    """
    if not candidate.places:
        return None
    places = candidate.places
    max_pop = max(p.population for p in places)
    profiles = [s for s in profile_locations if s and s.strip()]
    others = [c for c in cooccurring if c.name != candidate.name]

    totals: list[tuple[float, Place]] = []
    for p in places:
        pop = (p.population / max_pop) if max_pop > 0 else 0.0
        prof = (
            sum(1 for s in profiles if _resolves_near(s, p)) / len(profiles)
            if profiles else 0.0
        )
        cooc = 0.0
        if others:
            consistent = 0
            for other in others:
                if any(
                    (p.admin1 and q.name == p.admin1)
                    or (p.admin1 and q.admin1 == p.admin1 and q.country == p.country)
                    or (p.country and q.name == p.country)
                    or (p.country and q.country == p.country and q.granularity == "country")
                    for q in other.places
                ):
                    consistent += 1
            cooc = consistent / len(others)
        totals.append((pop + 2.0 * prof + 1.5 * cooc, p))

    totals.sort(key=lambda tp: (-tp[0], -tp[1].population, tp[1].name))
    best_total, winner = totals[0]
    denom = sum(t for t, _ in totals)
    confidence = best_total / denom if denom > 0 else 1.0 / len(totals)
    return GeoTag(
        toponym=candidate.surface,
        resolved_name=winner.name,
        lat=winner.lat,
        lon=winner.lon,
        granularity=Granularity(winner.granularity),
        confidence=min(1.0, max(0.0, confidence)),
    )


def localize_cluster(cluster: EventCluster) -> Optional[GeoTag]:
    """One GeoTag for the cluster, favoring the finest-grained mention."""
    candidates = geoparse(cluster)
    if not candidates:
        return None

    def finest(c: ToponymCandidate) -> int:
        return max(_SPECIFICITY[Granularity(p.granularity)] for p in c.places)

    ordered = sorted(
        candidates,
        key=lambda c: (-finest(c), -c.mentions, -c.score, c.name),
    )
    pick = ordered[0]
    profiles = [
        t.author.profile_location
        for t in cluster.tweets
        if t.author.profile_location
    ]
    return geocode(pick, profiles, [c for c in candidates if c is not pick])

"""Feed-facing filtering: novelty, scope, location floors, and composition.

Clusters arriving from the context layers are checked for staleness
(old-news wording, resolved event times), for near-duplication against
recently reported items, and for scope. Feed profiles then turn the
surviving clusters into per-audience item streams with hard caps.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from newswire import resources
from newswire.entities import extract_entities
from newswire.geo import Granularity, _SPECIFICITY
from newswire.model import EventCluster, TopicLabel, format_ts, parse_ts, tokenize

# ---------------------------------------------------------------------------
# scope / impact


class ImpactValue(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


_IMPACT_ORDER = {ImpactValue.LOW: 0, ImpactValue.MEDIUM: 1, ImpactValue.HIGH: 2}

UNITS = ("dead", "injured", "missing", "magnitude", "acres", "buildings", "monetary")

_IMPACT_TOPICS = frozenset({TopicLabel.CRISIS, TopicLabel.LAW_CRIME, TopicLabel.WEATHER})


@dataclass(frozen=True)
class ImpactLevel:
    value: ImpactValue
    cardinals: tuple[tuple[float, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "value": self.value.value,
            "cardinals": [[v, u] for v, u in self.cardinals],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ImpactLevel":
        return cls(
            value=ImpactValue(obj["value"]),
            cardinals=tuple((float(v), str(u)) for v, u in obj.get("cardinals", [])),
        )


_NUM_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50, "sixty": 60,
    "seventy": 70, "eighty": 80, "ninety": 90, "dozen": 12, "dozens": 24,
}
_MULTIPLIERS = {"hundred": 100, "thousand": 1_000, "million": 1_000_000,
                "billion": 1_000_000_000}

_UNIT_WORDS = {
    "dead": ("dead", "killed", "deaths", "died", "fatalities", "kills"),
    "injured": ("injured", "hurt", "wounded", "hospitalized", "injures", "injuries"),
    "missing": ("missing", "unaccounted", "trapped"),
    "magnitude": ("magnitude",),
    "acres": ("acres", "acre", "hectares"),
    "buildings": ("buildings", "homes", "houses", "structures"),
    "monetary": ("dollars", "damage", "damages", "losses", "cost"),
}
_WORD_TO_UNIT = {w: u for u, ws in _UNIT_WORDS.items() for w in ws}

_CARD_TOKEN_RE = re.compile(r"\$|\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|[a-z]+")
_NUMERAL_RE = re.compile(r"^[\d,]+(?:\.\d+)?$")
_CHAIN_MULTIPLIERS = dict(_MULTIPLIERS, dozen=12)


def extract_cardinals(text: str) -> list[tuple[float, str]]:
    """Numbers with attached units, in text order.

    Digits and number words both count; a unit word within the next few
    tokens (or "magnitude" just before) claims the number. Negated
    counts ("no one dead") are skipped.
    """
    low = text.lower()
    toks = [(m.start(), m.group(0)) for m in _CARD_TOKEN_RE.finditer(low)]
    found: list[tuple[float, str]] = []

    i = 0
    while i < len(toks):
        pos, tok = toks[i]
        dollar = False
        if tok == "$" and i + 1 < len(toks) and _NUMERAL_RE.match(toks[i + 1][1]):
            dollar = True
            i += 1
            pos, tok = toks[i]
        if _NUMERAL_RE.match(tok):
            value = float(tok.replace(",", ""))
        elif tok in _NUM_WORDS:
            value = float(_NUM_WORDS[tok])
        else:
            i += 1
            continue
        negated = i > 0 and toks[i - 1][1] == "no"
        start = i
        j = i + 1
        while j < len(toks) and toks[j][1] in _CHAIN_MULTIPLIERS:
            value *= _CHAIN_MULTIPLIERS[toks[j][1]]
            j += 1
        unit = "monetary" if dollar else None
        if unit is None:
            for _, nxt in toks[j:j + 3]:
                if nxt in _WORD_TO_UNIT:
                    unit = _WORD_TO_UNIT[nxt]
                    break
            if unit is None and start > 0 and toks[start - 1][1] == "magnitude":
                unit = "magnitude"
        if unit and not negated:
            found.append((value, unit))
        i = j

    out: list[tuple[float, str]] = []
    for card in found:
        if card not in out:
            out.append(card)
    return out


_HIGH_KW = ("earthquake", "hurricane", "tsunami", "bombing", "bomb", "massacre",
            "derailment", "tornado", "eruption")
_MED_KW = ("explosion", "pipeline", "wildfire", "chemical", "hazmat", "refinery",
           "oil", "collapse", "derailed", "spill")
_LOW_KW = ("minor", "small", "contained", "brief", "fender", "no injuries",
           "no damage", "smoke only")

N_IMPACT_FEATURES = len(UNITS) + 3 + 3


def impact_features(text: str, topic: TopicLabel) -> np.ndarray:
    low = text.lower()
    cards = extract_cardinals(low)
    best: dict[str, float] = {}
    for value, unit in cards:
        best[unit] = max(best.get(unit, 0.0), value)
    x = np.zeros(N_IMPACT_FEATURES)
    for i, unit in enumerate(UNITS):
        v = best.get(unit, 0.0)
        if unit == "magnitude":
            x[i] = v
        elif unit == "monetary":
            x[i] = math.log10(1.0 + v)
        else:
            x[i] = math.log1p(v)
    x[len(UNITS) + 0] = float(any(k in low for k in _HIGH_KW))
    x[len(UNITS) + 1] = float(any(k in low for k in _MED_KW))
    x[len(UNITS) + 2] = float(any(k in low for k in _LOW_KW))
    offset = len(UNITS) + 3
    for j, t in enumerate((TopicLabel.CRISIS, TopicLabel.LAW_CRIME, TopicLabel.WEATHER)):
        x[offset + j] = float(topic is t)
    return x


def _fit_logistic(X: np.ndarray, y: np.ndarray, l2: float = 1.0) -> tuple[np.ndarray, float]:
    n, d = X.shape

    def nll(params):
        w, b = params[:d], params[d]
        z = X @ w + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -35, 35)))
        p = np.clip(p, 1e-12, 1 - 1e-12)
        loss = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)) + 0.5 * l2 * w @ w / n
        grad_z = (p - y) / n
        return loss, np.concatenate([X.T @ grad_z + l2 * w / n, [grad_z.sum()]])

    res = minimize(nll, np.zeros(d + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": 500})
    return res.x[:d], float(res.x[d])


class UntrainedModel(RuntimeError):
    pass


class ImpactModel:
    """One-vs-rest linear classifier over cardinal and keyword features."""

    LEVELS = (ImpactValue.LOW, ImpactValue.MEDIUM, ImpactValue.HIGH)

    def __init__(self, weights: dict[str, tuple[np.ndarray, float]]):
        self.weights = weights

    def classify(self, x: np.ndarray) -> ImpactValue:
        scores = {}
        for level in self.LEVELS:
            w, b = self.weights[level.value]
            scores[level] = float(x @ w + b)
        return max(self.LEVELS, key=lambda lv: scores[lv])

    def to_json(self) -> dict:
        return {
            lv: {"w": list(map(float, w)), "b": b}
            for lv, (w, b) in sorted(self.weights.items())
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ImpactModel":
        return cls({
            lv: (np.asarray(spec["w"], dtype=float), float(spec["b"]))
            for lv, spec in obj.items()
        })

    def save(self, path) -> None:
        import json
        from pathlib import Path

        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "ImpactModel":
        import json
        from pathlib import Path

        return cls.from_json(json.loads(Path(path).read_text()))


def train_impact_model(labeled: Sequence[tuple[str, TopicLabel, ImpactValue]]) -> ImpactModel:
    if not labeled:
        raise ValueError("empty impact training set")
    X = np.vstack([impact_features(text, topic) for text, topic, _ in labeled])
    weights = {}
    for level in ImpactModel.LEVELS:
        y = np.array([1.0 if lv is level else 0.0 for _, _, lv in labeled])
        weights[level.value] = _fit_logistic(X, y)
    return ImpactModel(weights)


_DEFAULT_IMPACT: Optional[ImpactModel] = None


def default_impact_model() -> ImpactModel:
    """Classifier trained on the bundled labeled snippets, cached."""
    global _DEFAULT_IMPACT
    if _DEFAULT_IMPACT is None:
        from newswire import synthcorpus

        rows = [
            (text, TopicLabel(topic), ImpactValue(level))
            for text, topic, level in synthcorpus.impact_snippets()
        ]
        _DEFAULT_IMPACT = train_impact_model(rows)
    return _DEFAULT_IMPACT


def assess_impact_text(text: str, topic: TopicLabel, model: ImpactModel) -> ImpactLevel:
    cards = tuple(extract_cardinals(text))
    if topic not in _IMPACT_TOPICS:
        return ImpactLevel(ImpactValue.LOW, ())
    return ImpactLevel(model.classify(impact_features(text, topic)), cards)


def extract_impact(cluster: EventCluster, model: ImpactModel) -> ImpactLevel:
    """Impact over the cluster's distinct texts; off-topic clusters are low."""
    topic = cluster.topic or TopicLabel.OTHER
    if topic not in _IMPACT_TOPICS:
        return ImpactLevel(ImpactValue.LOW, ())
    seen: set[str] = set()
    cards: list[tuple[float, str]] = []
    joined: list[str] = []
    for t in cluster.tweets:
        if t.text in seen:
            continue
        seen.add(t.text)
        joined.append(t.text)
        for c in extract_cardinals(t.text):
            if c not in cards:
                cards.append(c)
    value = model.classify(impact_features(" ".join(joined), topic))
    return ImpactLevel(value, tuple(cards))


# ---------------------------------------------------------------------------
# novelty: staleness, temporal resolution, duplicates


FIELDS = ("persons", "organizations", "places", "actions", "temporal", "residual")

# residual keywords dominate: updates to the same story share names and
# places, and should still read as a new headline when the facts moved
FIELD_WEIGHTS = {
    "persons": 0.15,
    "organizations": 0.10,
    "places": 0.15,
    "actions": 0.15,
    "temporal": 0.15,
    "residual": 0.30,
}

THETA_DUP = 0.7
DUP_WINDOW = timedelta(hours=12)
STALE_AGE = timedelta(hours=12)


@dataclass(frozen=True)
class NoveltyVerdict:
    novel: bool
    reason: Optional[str] = None  # expression | resolved_time | duplicate
    duplicate_of: Optional[str] = None
    field_similarities: Mapping[str, float] = field(default_factory=dict)
    unparsed: int = 0

    def __post_init__(self):
        if self.novel and self.reason is not None:
            raise ValueError("novel verdicts carry no reason")
        if not self.novel and self.reason not in ("expression", "resolved_time", "duplicate"):
            raise ValueError(f"bad staleness reason: {self.reason}")
        if (self.duplicate_of is not None) != (self.reason == "duplicate"):
            raise ValueError("duplicate_of is set exactly when reason is duplicate")


_YEAR_RE = re.compile(r"\bin (1[89]\d{2}|20\d{2})\b")
_UNKNOWN_DAY_RE = re.compile(r"\bon [a-z]+day\b")

_WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday",
             "saturday", "sunday")


def _has_stale_cue(text: str, now: datetime) -> bool:
    low = text.lower()
    for cue in resources.staleness_expressions():
        if cue in low:
            return True
    for m in _YEAR_RE.finditer(low):
        if int(m.group(1)) < now.year:
            return True
    return False


def _day_start(ts: datetime) -> datetime:
    return ts.replace(hour=0, minute=0, second=0, microsecond=0)


def _resolve_temporal(expr: str, ts: datetime) -> Optional[datetime]:
    """End of the interval the expression names, relative to the tweet time."""
    day = _day_start(ts)
    if expr == "this morning":
        return day + timedelta(hours=12)
    if expr == "this afternoon":
        return day + timedelta(hours=17)
    if expr == "this evening":
        return day + timedelta(hours=21)
    if expr == "tonight":
        return day + timedelta(hours=24)
    if expr == "today":
        return day + timedelta(hours=24)
    if expr in ("earlier today", "just now", "moments ago", "right now",
                "currently", "at this hour"):
        return ts
    if expr.startswith("on "):
        name = expr[3:]
        if name in _WEEKDAYS:
            target = _WEEKDAYS.index(name)
            back = (ts.weekday() - target) % 7
            return _day_start(ts - timedelta(days=back)) + timedelta(hours=24)
    return None


def detect_staleness(cluster: EventCluster, now: datetime) -> NoveltyVerdict:
    """Expression and resolved-time staleness; duplicate check is separate.

    A staleness cue must be carried by a strict majority of members.
    Temporal expressions resolve against each tweet's own UTC timestamp
    to the end of the named interval; the latest resolved time stands
    for the event.
    """
    stale_members = sum(1 for t in cluster.tweets if _has_stale_cue(t.text, now))
    if stale_members * 2 > cluster.size:
        return NoveltyVerdict(novel=False, reason="expression")

    unparsed = 0
    resolved: list[datetime] = []
    known = resources.temporal_expressions()
    for t in cluster.tweets:
        low = t.text.lower()
        for expr in known:
            if expr in low:
                end = _resolve_temporal(expr, t.created_at)
                if end is None:
                    unparsed += 1
                else:
                    resolved.append(end)
        for m in _UNKNOWN_DAY_RE.finditer(low):
            if m.group(0)[3:] not in _WEEKDAYS:
                unparsed += 1
    if resolved and max(resolved) < now - STALE_AGE:
        return NoveltyVerdict(novel=False, reason="resolved_time", unparsed=unparsed)
    return NoveltyVerdict(novel=True, unparsed=unparsed)


def field_vectors(cluster: EventCluster) -> dict[str, Counter]:
    """Six named bags of terms over the cluster's distinct texts."""
    seen: set[str] = set()
    texts = []
    for tweet in cluster.tweets:
        if tweet.text not in seen:
            seen.add(tweet.text)
            texts.append(tweet.text)
    return field_vectors_from_texts(texts)


def field_vectors_from_texts(texts: Iterable[str]) -> dict[str, Counter]:
    actions = resources.action_verbs()
    stop = resources.stopwords()
    temporal_cues = resources.temporal_expressions() + resources.staleness_expressions()

    bags: dict[str, Counter] = {f: Counter() for f in FIELDS}
    for text in texts:
        low = text.lower()

        claimed: set[str] = set()
        for surface, kind in extract_entities(text):
            words = surface.lower().split()
            claimed.update(words)
            target = {"person": "persons", "org": "organizations",
                      "place": "places"}.get(kind)
            if target:
                bags[target][surface.lower()] += 1

        for cue in temporal_cues:
            if cue in low:
                bags["temporal"][cue] += 1
                claimed.update(cue.split())
        for m in _YEAR_RE.finditer(low):
            bags["temporal"][m.group(1)] += 1
            claimed.add(m.group(1))

        for token in tokenize(text):
            if token in claimed or token in stop:
                continue
            if token in actions:
                bags["actions"][token] += 1
            else:
                bags["residual"][token] += 1
    return bags


def _cosine_counts(a: Counter, b: Counter) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    if a == b:
        return 1.0
    dot = sum(v * b.get(k, 0) for k, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return min(1.0, max(0.0, dot / (na * nb)))


@dataclass(frozen=True)
class HistoryItem:
    cluster_id: str
    emitted_at: datetime
    fields: Mapping[str, Counter]

    @classmethod
    def from_cluster(cls, cluster: EventCluster, emitted_at: datetime) -> "HistoryItem":
        return cls(cluster.cluster_id, emitted_at, field_vectors(cluster))


def weighted_field_similarity(
    a: Mapping[str, Counter], b: Mapping[str, Counter],
) -> tuple[float, dict[str, float]]:
    """Weighted six-field cosine; symmetric in its arguments.

    Fields empty on both sides report 1.0 but carry no evidence, so the
    combined score reweights over the informative fields only. Returns
    (combined, per-field similarities).
    """
    sims = {f: _cosine_counts(a.get(f, Counter()), b.get(f, Counter()))
            for f in FIELDS}
    live = [f for f in FIELDS if a.get(f) or b.get(f)]
    if not live:
        return 1.0, sims
    mass = sum(FIELD_WEIGHTS[f] for f in live)
    return sum(FIELD_WEIGHTS[f] * sims[f] for f in live) / mass, sims


def novelty_check(
    cluster: EventCluster,
    history: Iterable[HistoryItem],
    now: datetime,
    theta: float = THETA_DUP,
) -> NoveltyVerdict:
    """Duplicate path: weighted six-field similarity against recent items."""
    bags = field_vectors(cluster)
    best_sim = -1.0
    best: Optional[tuple[HistoryItem, dict[str, float]]] = None
    for item in history:
        age = now - item.emitted_at
        if age < timedelta(0) or age >= DUP_WINDOW:
            continue
        weighted, sims = weighted_field_similarity(bags, item.fields)
        if weighted > best_sim:
            best_sim = weighted
            best = (item, sims)
    if best is not None and best_sim >= theta:
        item, sims = best
        return NoveltyVerdict(
            novel=False, reason="duplicate", duplicate_of=item.cluster_id,
            field_similarities=sims,
        )
    return NoveltyVerdict(
        novel=True,
        field_similarities=best[1] if best else {},
    )


def assess_novelty(
    cluster: EventCluster,
    history: Iterable[HistoryItem],
    now: datetime,
    theta: float = THETA_DUP,
) -> NoveltyVerdict:
    verdict = detect_staleness(cluster, now)
    if not verdict.novel:
        return verdict
    dup = novelty_check(cluster, history, now, theta)
    if dup.novel and verdict.unparsed:
        return NoveltyVerdict(
            novel=True, field_similarities=dup.field_similarities,
            unparsed=verdict.unparsed,
        )
    return dup


# ---------------------------------------------------------------------------
# feed profiles


@dataclass(frozen=True)
class FeedProfile:
    name: str
    topics: frozenset[TopicLabel] = frozenset()
    require_novel: bool = True
    impact_min: ImpactValue = ImpactValue.LOW
    impact_max: ImpactValue = ImpactValue.HIGH
    geo_floor: Mapping[str, str] = field(default_factory=dict)  # topic value or "*" -> granularity value
    min_veracity: float = -1.0
    max_items_per_day: int = 1000

    def floor_for(self, topic: Optional[TopicLabel]) -> Optional[Granularity]:
        key = topic.value if topic else "*"
        raw = self.geo_floor.get(key, self.geo_floor.get("*"))
        return Granularity(raw) if raw else None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "topics": sorted(t.value for t in self.topics),
            "require_novel": self.require_novel,
            "impact_min": self.impact_min.value,
            "impact_max": self.impact_max.value,
            "geo_floor": dict(self.geo_floor),
            "min_veracity": self.min_veracity,
            "max_items_per_day": self.max_items_per_day,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeedProfile":
        return cls(
            name=obj["name"],
            topics=frozenset(TopicLabel(t) for t in obj.get("topics", [])),
            require_novel=bool(obj.get("require_novel", True)),
            impact_min=ImpactValue(obj.get("impact_min", "low")),
            impact_max=ImpactValue(obj.get("impact_max", "high")),
            geo_floor=dict(obj.get("geo_floor", {})),
            min_veracity=float(obj.get("min_veracity", -1.0)),
            max_items_per_day=int(obj.get("max_items_per_day", 1000)),
        )


@dataclass(frozen=True)
class FeedItem:
    headline: str
    cluster_id: str
    topic: Optional[TopicLabel]
    geo: Optional[object]  # GeoTag
    impact: Optional[ImpactLevel]
    veracity_dots: Optional[int]
    emitted_at: datetime

    def to_json(self) -> dict:
        return {
            "headline": self.headline,
            "cluster_id": self.cluster_id,
            "topic": self.topic.value if self.topic else None,
            "geo": self.geo.to_json() if self.geo else None,
            "impact": self.impact.to_json() if self.impact else None,
            "veracity_dots": self.veracity_dots,
            "emitted_at": format_ts(self.emitted_at),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeedItem":
        from newswire.geo import GeoTag

        return cls(
            headline=obj["headline"],
            cluster_id=obj["cluster_id"],
            topic=TopicLabel(obj["topic"]) if obj.get("topic") else None,
            geo=GeoTag.from_json(obj["geo"]) if obj.get("geo") else None,
            impact=ImpactLevel.from_json(obj["impact"]) if obj.get("impact") else None,
            veracity_dots=obj.get("veracity_dots"),
            emitted_at=parse_ts(obj["emitted_at"]),
        )


class PredicateReport(dict):
    """Predicate name -> bool; holds the reason a cluster was held back."""

    @property
    def passed(self) -> bool:
        return all(self.values())


def evaluate_profile(
    profile: FeedProfile,
    cluster: EventCluster,
    novelty: Optional[NoveltyVerdict],
) -> PredicateReport:
    report = PredicateReport()
    if profile.topics:
        report["topic"] = cluster.topic in profile.topics
    if profile.require_novel:
        report["novel"] = bool(novelty and novelty.novel)
    impact = cluster.impact
    lo = _IMPACT_ORDER[profile.impact_min]
    hi = _IMPACT_ORDER[profile.impact_max]
    rank = _IMPACT_ORDER[impact.value] if impact else 0
    report["impact"] = lo <= rank <= hi
    floor = profile.floor_for(cluster.topic)
    if floor is not None:
        report["geo"] = (
            cluster.geo is not None
            and _SPECIFICITY[cluster.geo.granularity] >= _SPECIFICITY[floor]
        )
    if profile.min_veracity > -1.0:
        report["veracity"] = (
            cluster.veracity is not None
            and cluster.veracity.value >= profile.min_veracity
        )
    return report


class FeedComposer:
    """Stateful per-profile emitter: once per cluster, capped per day."""

    def __init__(self, profile: FeedProfile):
        self.profile = profile
        self.emitted_ids: set[str] = set()
        self.history: list[HistoryItem] = []
        self.log: list[dict] = []  # {"item": ..., "cluster": ...} JSON rows
        self._daily: Counter = Counter()

    def offer(self, cluster: EventCluster, now: datetime) -> Optional[FeedItem]:
        """Emit iff every predicate holds right now; otherwise hold.

        A held cluster may be offered again later (say, once its
        veracity score crosses the floor); an emitted one never re-emits.
        """
        if cluster.cluster_id in self.emitted_ids:
            return None
        day = now.date().isoformat()
        if self._daily[day] >= self.profile.max_items_per_day:
            return None
        novelty = (
            assess_novelty(cluster, self.history, now)
            if self.profile.require_novel else None
        )
        report = evaluate_profile(self.profile, cluster, novelty)
        if not report.passed:
            return None
        if cluster.summary is None:
            raise ValueError(f"cluster {cluster.cluster_id} offered before summarization")
        by_id = {t.id: t for t in cluster.tweets}
        item = FeedItem(
            headline=by_id[cluster.summary].text,
            cluster_id=cluster.cluster_id,
            topic=cluster.topic,
            geo=cluster.geo,
            impact=cluster.impact,
            veracity_dots=cluster.veracity.dots if cluster.veracity else None,
            emitted_at=now,
        )
        self.emitted_ids.add(cluster.cluster_id)
        self._daily[day] += 1
        self.history.append(HistoryItem.from_cluster(cluster, now))
        self.log.append({"item": item.to_json(), "cluster": cluster.to_json()})
        return item


def audit_feed_log(entries: Sequence[dict], profile: FeedProfile) -> dict:
    """Replay profile predicates over an emission log.

    Checks that no cluster was emitted twice, daily caps held, headlines
    matched the summary at emission time, and every non-novelty predicate
    still passes on the stored snapshot.
    """
    seen: set[str] = set()
    double = []
    daily: Counter = Counter()
    violations = []
    for row in entries:
        item = FeedItem.from_json(row["item"])
        cluster = EventCluster.from_json(row["cluster"])
        if item.cluster_id in seen:
            double.append(item.cluster_id)
        seen.add(item.cluster_id)
        daily[item.emitted_at.date().isoformat()] += 1
        report = evaluate_profile(profile, cluster, None)
        report.pop("novel", None)  # history state is not in the snapshot
        if not report.passed:
            violations.append((item.cluster_id, dict(report)))
        by_id = {t.id: t for t in cluster.tweets}
        if cluster.summary is None or by_id[cluster.summary].text != item.headline:
            violations.append((item.cluster_id, {"headline": False}))
    return {
        "items": len(entries),
        "double_emissions": double,
        "daily_cap_ok": all(v <= profile.max_items_per_day for v in daily.values()),
        "predicate_violations": violations,
        "ok": not double
        and not violations
        and all(v <= profile.max_items_per_day for v in daily.values()),
    }


DEFAULT_PROFILES = {
    "disaster": FeedProfile(
        name="disaster",
        topics=frozenset({TopicLabel.CRISIS, TopicLabel.LAW_CRIME, TopicLabel.WEATHER}),
        require_novel=True,
        impact_min=ImpactValue.MEDIUM,
        impact_max=ImpactValue.HIGH,
        geo_floor={"Crisis": "city", "Law/Crime": "city", "Weather": "state"},
        min_veracity=0.6,
        max_items_per_day=200,
    ),
    "supply_chain": FeedProfile(
        name="supply_chain",
        topics=frozenset({TopicLabel.CRISIS, TopicLabel.WEATHER, TopicLabel.BUSINESS}),
        require_novel=True,
        impact_min=ImpactValue.LOW,
        impact_max=ImpactValue.HIGH,
        geo_floor={"*": "city"},
        min_veracity=0.3,
        max_items_per_day=500,
    ),
}

"""Offline scoring of pipeline output against labeled references.

Five reports: detection coverage against a gold headline set, lead time
against media alerts, ranking quality (NDCG), veracity precision and
recall under three judgement regimes, and feed alertability accounting.
Every report is a pure function of its inputs: same files in, same
numbers out. Each returns a plain dict ready for json.dump, and
render_table() turns any of them into an aligned text table.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Mapping, Optional, Sequence

from newswire.disseminate import field_vectors_from_texts, weighted_field_similarity
from newswire.model import EventCluster, format_ts, parse_ts

VERACITY_GRADES = ("true", "likely_true", "false", "likely_false")
TRUTH_GRADES = frozenset({"true", "likely_true"})
RUMOR_GRADES = frozenset({"false", "likely_false"})

GRADE_GAIN = {"not_newsworthy": 0, "partially_newsworthy": 1, "newsworthy": 2}


@dataclass(frozen=True)
class GoldEvent:
    event_id: str
    description: str
    true_time: datetime
    headlines: tuple = ()  # (outlet, timestamp) pairs, timestamp may be None
    newsworthiness: Optional[str] = None
    veracity: Optional[str] = None
    categories: tuple = ()  # e.g. ("unexpected", "domestic")

    def __post_init__(self):
        if self.newsworthiness is not None and self.newsworthiness not in GRADE_GAIN:
            raise ValueError(f"unknown newsworthiness grade {self.newsworthiness!r}")
        if self.veracity is not None and self.veracity not in VERACITY_GRADES:
            raise ValueError(f"unknown veracity grade {self.veracity!r}")

    def to_json(self) -> dict:
        return {
            "event_id": self.event_id,
            "description": self.description,
            "true_time": format_ts(self.true_time),
            "headlines": [{"outlet": o, "timestamp": format_ts(t) if t else None}
                          for o, t in self.headlines],
            "newsworthiness": self.newsworthiness,
            "veracity": self.veracity,
            "categories": list(self.categories),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GoldEvent":
        return cls(
            event_id=obj["event_id"],
            description=obj["description"],
            true_time=parse_ts(obj["true_time"]),
            headlines=tuple(
                (h["outlet"], parse_ts(h["timestamp"]) if h.get("timestamp") else None)
                for h in obj.get("headlines", ())),
            newsworthiness=obj.get("newsworthiness"),
            veracity=obj.get("veracity"),
            categories=tuple(obj.get("categories", ())),
        )


# ------------------------------------------------------------------ coverage


def coverage_eval(
    gold: Sequence[GoldEvent],
    clusters: Sequence[EventCluster],
    window: timedelta = timedelta(hours=24),
    threshold: float = 0.35,
) -> dict:
    """Recall of the gold set: an event counts covered when some cluster
    created within the window around its true time carries a member text
    matching the headline at or above the field-similarity threshold.
    Matching per distinct member text keeps a cluster that absorbed two
    stories able to answer for both."""
    prepared = []
    for c in clusters:
        texts, seen = [], set()
        for t in c.tweets:
            if t.text not in seen:
                seen.add(t.text)
                texts.append(t.text)
        prepared.append((c, [field_vectors_from_texts([x]) for x in texts]))
    rows = []
    covered = 0
    for event in gold:
        bags = field_vectors_from_texts([event.description])
        best_sim, best_id = -1.0, None
        in_window = 0
        for cluster, text_bags in prepared:
            if abs(cluster.created_at - event.true_time) > window:
                continue
            in_window += 1
            sim = max(weighted_field_similarity(bags, tb)[0] for tb in text_bags)
            if sim > best_sim:
                best_sim, best_id = sim, cluster.cluster_id
        hit = best_id is not None and best_sim >= threshold
        covered += hit
        rows.append({
            "event_id": event.event_id,
            "covered": hit,
            "best_cluster": best_id,
            "best_similarity": round(best_sim, 4) if best_id else None,
            "clusters_in_window": in_window,
            "reason": None if hit else (
                "no cluster inside the window" if in_window == 0
                else f"best similarity {best_sim:.4f} below {threshold}"),
        })
    return {
        "report": "coverage",
        "total": len(gold),
        "covered": covered,
        "recall": round(covered / len(gold), 4) if gold else None,
        "window_hours": window.total_seconds() / 3600.0,
        "threshold": threshold,
        "rows": rows,
        "misses": [r for r in rows if not r["covered"]],
    }


# ----------------------------------------------------------------- lead time


def lead_time(
    gold: Sequence[GoldEvent],
    detected_at: Mapping[str, datetime],
) -> dict:
    """Signed per-event deltas, positive when detection precedes the
    reference. Events missing from detected_at are skipped and counted;
    events with no media timestamp are excluded from the media aggregate
    and counted there."""
    rows = []
    missing_detection = 0
    missing_media = 0
    for event in gold:
        found = detected_at.get(event.event_id)
        if found is None:
            missing_detection += 1
            continue
        vs_event = (event.true_time - found).total_seconds()
        stamps = [t for _, t in event.headlines if t is not None]
        vs_media = (min(stamps) - found).total_seconds() if stamps else None
        if vs_media is None:
            missing_media += 1
        rows.append({
            "event_id": event.event_id,
            "categories": list(event.categories),
            "lead_vs_event_s": vs_event,
            "lead_vs_media_s": vs_media,
        })

    def aggregate(keyed_rows):
        with_media = [r["lead_vs_media_s"] for r in keyed_rows
                      if r["lead_vs_media_s"] is not None]
        return {
            "events": len(keyed_rows),
            "with_media": len(with_media),
            "mean_lead_vs_event_s": round(
                sum(r["lead_vs_event_s"] for r in keyed_rows) / len(keyed_rows), 3)
            if keyed_rows else None,
            "mean_lead_vs_media_s": round(sum(with_media) / len(with_media), 3)
            if with_media else None,
        }

    categories = sorted({c for r in rows for c in r["categories"]})
    return {
        "report": "lead_time",
        "rows": rows,
        "overall": aggregate(rows),
        "by_category": {
            c: aggregate([r for r in rows if c in r["categories"]])
            for c in categories},
        "missing_detection": missing_detection,
        "missing_media_timestamp": missing_media,
    }


# --------------------------------------------------------------------- NDCG


def ndcg_eval(scored: Sequence[tuple[float, int]]) -> dict:
    """NDCG of the score-descending ranking; gains must be 0, 1, or 2.
    All-zero gains leave the metric undefined and the report says so."""
    for _, gain in scored:
        if gain not in (0, 1, 2):
            raise ValueError(f"gain {gain!r} outside {{0, 1, 2}}")
    ranked = [row[1] for _, row in
              sorted(enumerate(scored), key=lambda kv: (-kv[1][0], kv[0]))]

    def dcg(gains):
        return sum(g / math.log2(i + 2) for i, g in enumerate(gains))

    ideal = dcg(sorted(ranked, reverse=True))
    if ideal == 0:
        return {"report": "ndcg", "n": len(scored), "ndcg": None,
                "defined": False, "note": "all gains zero"}
    return {
        "report": "ndcg",
        "n": len(scored),
        "ndcg": round(dcg(ranked) / ideal, 6),
        "defined": True,
    }


# ----------------------------------------------------------------- veracity

# prediction margins per judgement regime; green and red follow the
# indicator bins (green = 4-5 dots, red = 1-2)
_REGIMES = {
    "strict": {"truth": lambda v: v >= 0.2, "rumor": lambda v: v < -0.2},
    "fair": {"truth": lambda v: v > 0.0, "rumor": lambda v: v < 0.0},
    "loose": {"truth": lambda v: v >= -0.2, "rumor": lambda v: v < 0.2},
}


def veracity_eval(rows: Sequence[tuple[float, float, str]]) -> dict:
    """rows: (score at size 3, score at size 30, four-grade label).

    Precision and recall for truth and rumor predictions at both sizes,
    under strict, fair, and loose margins.
    """
    for _, _, grade in rows:
        if grade not in VERACITY_GRADES:
            raise ValueError(f"unknown veracity grade {grade!r}")

    def stats(values_with_labels, predicate, positive_grades):
        predicted = [(v, g) for v, g in values_with_labels if predicate(v)]
        actual = [g for _, g in values_with_labels if g in positive_grades]
        correct = sum(1 for _, g in predicted if g in positive_grades)
        return {
            "predicted": len(predicted),
            "correct": correct,
            "precision": round(correct / len(predicted), 4) if predicted else None,
            "recall": round(correct / len(actual), 4) if actual else None,
        }

    out = {"report": "veracity", "n": len(rows), "by_size": {}}
    for size, idx in (("3", 0), ("30", 1)):
        pairs = [(row[idx], row[2]) for row in rows]
        out["by_size"][size] = {
            regime: {
                "truth": stats(pairs, preds["truth"], TRUTH_GRADES),
                "rumor": stats(pairs, preds["rumor"], RUMOR_GRADES),
            }
            for regime, preds in _REGIMES.items()
        }
    return out


# ------------------------------------------------------------- alertability


def alertability_report(
    emissions: Sequence[dict],
    labels: Mapping[str, bool],
    curated_events: Optional[Mapping[str, str]] = None,
) -> dict:
    """emissions: FeedItem JSON rows; labels: cluster id -> alertable.

    Items without a label are excluded from the ratio and counted. With a
    curated event list (cluster id -> event id), also reports precision
    and recall of the emissions against it.
    """
    labeled = []
    unlabeled = 0
    per_day: Counter = Counter()
    per_topic: Counter = Counter()
    per_topic_alertable: Counter = Counter()
    for item in emissions:
        day = item["emitted_at"][:10]
        per_day[day] += 1
        verdict = labels.get(item["cluster_id"])
        if verdict is None:
            unlabeled += 1
            continue
        labeled.append(verdict)
        topic = item.get("topic") or "untagged"
        per_topic[topic] += 1
        per_topic_alertable[topic] += verdict

    alertable = sum(labeled)
    report = {
        "report": "alertability",
        "emitted": len(emissions),
        "labeled": len(labeled),
        "unlabeled": unlabeled,
        "alertable": alertable,
        "ratio": round(alertable / len(labeled), 4) if labeled else None,
        "defined": bool(labeled),
        "per_day": dict(sorted(per_day.items())),
        "per_topic": {
            t: {"emitted": per_topic[t], "alertable": per_topic_alertable[t],
                "ratio": round(per_topic_alertable[t] / per_topic[t], 4)}
            for t in sorted(per_topic)},
    }
    if not labeled:
        report["note"] = "no labeled emissions; ratio undefined"

    if curated_events is not None:
        emitted_ids = {item["cluster_id"] for item in emissions}
        matched_events = {curated_events[cid] for cid in emitted_ids
                          if cid in curated_events}
        all_events = set(curated_events.values())
        hits = sum(1 for cid in emitted_ids if cid in curated_events)
        report["curated"] = {
            "events": len(all_events),
            "events_matched": len(matched_events),
            "precision": round(hits / len(emitted_ids), 4) if emitted_ids else None,
            "recall": round(len(matched_events) / len(all_events), 4)
            if all_events else None,
        }
    return report


# ------------------------------------------------------------------- output


def render_table(report: dict) -> str:
    """Flatten any report dict into an aligned two-column text table."""
    lines: list[tuple[str, str]] = []

    def walk(prefix: str, value) -> None:
        if isinstance(value, dict):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(value, list):
            if len(value) > 12:
                lines.append((prefix, f"[{len(value)} rows]"))
            else:
                for i, v in enumerate(value):
                    walk(f"{prefix}[{i}]", v)
        else:
            lines.append((prefix, "-" if value is None else str(value)))

    walk("", report)
    width = max((len(k) for k, _ in lines), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in lines) + "\n"

"""Noise cascade: spam, ads, chit-chat, general info, in that order.

Each stage is an independent logistic scorer over hashed text features
plus a few dense signals. The cascade stops at the first stage whose
score crosses its calibrated threshold; survivors are news candidates.
Thresholds are tuned so the cascade loses almost no real news.
"""
from __future__ import annotations

import json
import logging
import math
import os
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np
from scipy import optimize, sparse

from newswire.model import Tweet, is_handle, is_hashtag, is_url, normalize_text, tokenize

log = logging.getLogger(__name__)

STAGES = ("spam", "advertisement", "chitchat", "general_info")

HASH_DIM = 1 << 16
_DENSE = ("url_count", "hashtag_density", "mention_density", "emoji_count",
          "log_followers", "dup_freq", "allcaps_ratio")
DIM = HASH_DIM + len(_DENSE)

_DUP_WINDOW = timedelta(minutes=10)


def _hash_feat(kind: str, text: str) -> int:
    return zlib.crc32((kind + ":" + text).encode("utf-8")) % HASH_DIM


class DuplicateTextWindow:
    """Trailing-window counter of exact normalized-text repeats."""

    def __init__(self, window: timedelta = _DUP_WINDOW):
        self.window = window
        self._seen: dict[str, list[datetime]] = {}

    def count(self, text: str, now: datetime) -> int:
        key = normalize_text(text)
        times = self._seen.get(key)
        if not times:
            return 0
        cutoff = now - self.window
        fresh = [t for t in times if t >= cutoff]
        if len(fresh) != len(times):
            self._seen[key] = fresh
        return len(fresh)

    def add(self, text: str, now: datetime) -> None:
        self._seen.setdefault(normalize_text(text), []).append(now)

    def snapshot(self) -> dict:
        from newswire.model import format_ts
        return {k: [format_ts(t) for t in v] for k, v in self._seen.items()}

    @classmethod
    def restore(cls, obj: dict, window: timedelta = _DUP_WINDOW) -> "DuplicateTextWindow":
        from newswire.model import parse_ts
        inst = cls(window)
        inst._seen = {k: [parse_ts(t) for t in v] for k, v in obj.items()}
        return inst


def _emoji_count(text: str) -> int:
    return sum(1 for ch in text if ord(ch) >= 0x1F300)


def _allcaps_ratio(text: str) -> float:
    words = [w for w in text.split() if len(w) >= 2 and any(c.isalpha() for c in w)]
    if not words:
        return 0.0
    caps = sum(1 for w in words if w.isupper())
    return caps / len(words)


def featurize(tweet: Tweet, dup_count: int = 0) -> sparse.csr_matrix:
    toks = tokenize(tweet.text)
    idx: dict[int, float] = {}
    words = [t for t in toks if not is_url(t)]
    for t in words:
        i = _hash_feat("u", t)
        idx[i] = idx.get(i, 0.0) + 1.0
    for a, b in zip(words, words[1:]):
        i = _hash_feat("b", a + " " + b)
        idx[i] = idx.get(i, 0.0) + 1.0
    n_tok = max(len(toks), 1)
    url_count = sum(1 for t in toks if is_url(t)) + len(tweet.urls)
    dense = (
        float(url_count),
        sum(1 for t in toks if is_hashtag(t)) / n_tok,
        sum(1 for t in toks if is_handle(t)) / n_tok,
        float(_emoji_count(tweet.text)),
        math.log10(1 + tweet.author.followers),
        math.log1p(dup_count),
        _allcaps_ratio(tweet.text),
    )
    for j, v in enumerate(dense):
        if v:
            idx[HASH_DIM + j] = v
    cols = sorted(idx)
    data = [idx[c] for c in cols]
    return sparse.csr_matrix((data, ([0] * len(cols), cols)), shape=(1, DIM))


def featurize_batch(tweets_with_dups: list[tuple[Tweet, int]]) -> sparse.csr_matrix:
    rows = [featurize(t, d) for t, d in tweets_with_dups]
    return sparse.vstack(rows, format="csr")


# ---------------------------------------------------------------------------
# logistic stage model


@dataclass
class StageModel:
    stage: str
    weights: np.ndarray  # shape (DIM,)
    bias: float
    threshold: float = 1.0
    version: int = 1

    def score_features(self, x: sparse.csr_matrix) -> float:
        z = float(x.dot(self.weights)[0]) + self.bias
        return 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, z))))

    def to_json(self) -> dict:
        nz = np.nonzero(self.weights)[0]
        return {
            "version": self.version,
            "stage": self.stage,
            "bias": self.bias,
            "threshold": self.threshold,
            "dim": DIM,
            "weights": {str(int(i)): float(self.weights[i]) for i in nz},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StageModel":
        w = np.zeros(obj["dim"])
        for k, v in obj["weights"].items():
            w[int(k)] = v
        return cls(stage=obj["stage"], weights=w, bias=obj["bias"],
                   threshold=obj.get("threshold", 1.0), version=obj.get("version", 1))


def _train_logistic(X: sparse.csr_matrix, y: np.ndarray, l2: float = 1.0) -> tuple[np.ndarray, float]:
    n, d = X.shape
    Xb = sparse.hstack([X, np.ones((n, 1))], format="csr")

    def nll(wb):
        z = Xb.dot(wb)
        z = np.clip(z, -60, 60)
        # log(1+exp(-yz)) with y in {-1,+1}
        yz = y * z
        loss = np.logaddexp(0, -yz).sum() + 0.5 * l2 * np.dot(wb[:-1], wb[:-1])
        p = 1.0 / (1.0 + np.exp(-z))
        grad = Xb.T.dot(p - (y + 1) / 2)
        grad[:-1] += l2 * wb[:-1]
        return loss, grad

    w0 = np.zeros(d + 1)
    res = optimize.minimize(nll, w0, jac=True, method="L-BFGS-B",
                            options={"maxiter": 200, "ftol": 1e-8})
    wb = res.x
    return wb[:-1], float(wb[-1])


def train_stage_models(corpus: list[tuple[Tweet, str]], l2: float = 1.0) -> dict[str, StageModel]:
    """One-vs-rest logistic scorer per noise kind, deterministic given
    corpus order."""
    dup = DuplicateTextWindow()
    feats = []
    for tweet, _ in corpus:
        feats.append(featurize(tweet, dup.count(tweet.text, tweet.created_at)))
        dup.add(tweet.text, tweet.created_at)
    X = sparse.vstack(feats, format="csr")
    models = {}
    for stage in STAGES:
        y = np.array([1.0 if label == stage else -1.0 for _, label in corpus])
        w, b = _train_logistic(X, y, l2)
        models[stage] = StageModel(stage=stage, weights=w, bias=b)
    return models


# ---------------------------------------------------------------------------
# cascade


@dataclass
class NoiseVerdict:
    outcome: str  # "noise" | "candidate"
    stage: str | None
    stage_scores: dict[str, float] = field(default_factory=dict)

    @property
    def is_noise(self) -> bool:
        return self.outcome == "noise"


class NoiseFilter:
    """Applies the stage cascade with calibrated thresholds.

    A failing or missing stage scorer is skipped (fail-open) and counted,
    never crashes the stream.
    """

    def __init__(self, models: dict[str, StageModel], dup_window: DuplicateTextWindow | None = None):
        self.models = models
        self.dup_window = dup_window or DuplicateTextWindow()
        self.incidents = 0

    def classify(self, tweet: Tweet, update_window: bool = True) -> NoiseVerdict:
        dup_count = self.dup_window.count(tweet.text, tweet.created_at)
        x = featurize(tweet, dup_count)
        if update_window:
            self.dup_window.add(tweet.text, tweet.created_at)
        scores: dict[str, float] = {}
        for stage in STAGES:
            model = self.models.get(stage)
            if model is None:
                continue
            try:
                s = model.score_features(x)
            except Exception:
                self.incidents += 1
                continue
            scores[stage] = s
            if s >= model.threshold:
                return NoiseVerdict("noise", stage, scores)
        return NoiseVerdict("candidate", None, scores)

    def save(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for stage, model in self.models.items():
            with open(os.path.join(out_dir, f"stage_{stage}.json"), "w") as fh:
                json.dump(model.to_json(), fh)

    @classmethod
    def load(cls, model_dir: str) -> "NoiseFilter":
        models = {}
        for stage in STAGES:
            path = os.path.join(model_dir, f"stage_{stage}.json")
            if not os.path.exists(path):
                raise FileNotFoundError(f"missing stage model: {path}")
            with open(path) as fh:
                models[stage] = StageModel.from_json(json.load(fh))
        return cls(models)


# ---------------------------------------------------------------------------
# threshold calibration


@dataclass
class CalibrationReport:
    thresholds: dict[str, float]
    filtered_fraction: float
    news_false_negative_rate: float
    infeasible: bool = False


_GRID = [round(0.05 + 0.005 * i, 3) for i in range(191)]  # 0.05 .. 1.0


def calibrate_thresholds(
    models: dict[str, StageModel],
    corpus: list[tuple[Tweet, str]],
    max_false_negative_rate: float = 0.01,
    news_labels: tuple[str, ...] = ("news", "event"),
) -> CalibrationReport:
    """Greedy per-stage sweep in cascade order.

    Each stage takes the lowest grid threshold (largest recall) that keeps
    the cumulative news false-negative rate within the bound, given the
    thresholds already fixed for earlier stages.
    """
    dup = DuplicateTextWindow()
    feats = []
    for tweet, _ in corpus:
        feats.append(featurize(tweet, dup.count(tweet.text, tweet.created_at)))
        dup.add(tweet.text, tweet.created_at)

    scores = {}
    for stage in STAGES:
        m = models[stage]
        scores[stage] = np.array([m.score_features(x) for x in feats])

    is_news = np.array([label in news_labels for _, label in corpus])
    n_news = max(int(is_news.sum()), 1)
    n_total = len(corpus)

    thresholds: dict[str, float] = {}
    removed = np.zeros(n_total, dtype=bool)
    infeasible = False
    for stage in STAGES:
        s = scores[stage]
        best = None
        for th in _GRID:
            hit = removed | (s >= th)
            fn = float((hit & is_news).sum()) / n_news
            if fn <= max_false_negative_rate:
                best = th
                break  # grid ascends; first feasible is the most aggressive
        if best is None:
            best = 1.0
            infeasible = True
        thresholds[stage] = best
        removed |= scores[stage] >= best

    fn_rate = float((removed & is_news).sum()) / n_news
    if not infeasible and fn_rate > max_false_negative_rate:
        raise AssertionError("calibration left false-negative rate above bound")
    report = CalibrationReport(
        thresholds=thresholds,
        filtered_fraction=float(removed.sum()) / n_total,
        news_false_negative_rate=fn_rate,
        infeasible=infeasible,
    )
    for stage, th in thresholds.items():
        models[stage].threshold = th
    return report

"""Latent topic models over news-account tweets.

Collapsed Gibbs sampling with fixed seeds and iteration counts, so a
given corpus always yields the same tables. Model selection runs each
candidate topic count and keeps the one with the lowest held-out
perplexity. Scoring-time inference re-samples topic assignments for one
tweet with the trained topics frozen.
"""
from __future__ import annotations

import json
import math
import random
import zlib

import numpy as np

from newswire import resources
from newswire.model import is_handle, is_url, tokenize

TRAIN_SWEEPS = 80
INFER_SWEEPS = 20
ALPHA = 0.5  # symmetric Dirichlet prior on per-doc topic weights
BETA = 0.01
HOLDOUT_EVERY = 10  # every 10th doc held out for perplexity


def topic_tokens(text: str) -> list[str]:
    """Tokens that participate in topic modeling: no urls, handles,
    stopwords, or bare numbers; hashtags keep their word."""
    stop = resources.stopwords()
    out = []
    for t in tokenize(text):
        if is_url(t) or is_handle(t):
            continue
        if t.startswith("#") or t.startswith("$"):
            t = t[1:]
        if not t or t.isdigit() or t in stop or len(t) < 2:
            continue
        out.append(t)
    return out


class TopicModel:
    """Trained term distributions plus bookkeeping for model selection."""

    def __init__(self, n: int, vocab: dict[str, int], phi: np.ndarray,
                 trained_window: str, perplexity_by_n: dict[int, float]):
        self.n = n
        self.vocab = vocab
        self.phi = phi  # shape (n, V), rows sum to 1
        self.trained_window = trained_window
        self.perplexity_by_n = perplexity_by_n
        self._theta_cache: dict[str, np.ndarray] = {}

    # ------------------------------------------------------------ inference

    def infer(self, tokens: list[str], seed: int, sweeps: int = INFER_SWEEPS) -> np.ndarray:
        """Per-document topic distribution with the trained topics frozen."""
        ids = [self.vocab[t] for t in tokens if t in self.vocab]
        alpha = ALPHA
        if not ids:
            return np.full(self.n, 1.0 / self.n)
        rng = random.Random(seed)
        z = [rng.randrange(self.n) for _ in ids]
        counts = np.zeros(self.n)
        for k in z:
            counts[k] += 1
        for _ in range(sweeps):
            for i, w in enumerate(ids):
                counts[z[i]] -= 1
                p = (counts + alpha) * self.phi[:, w]
                total = p.sum()
                if total <= 0:
                    k = rng.randrange(self.n)
                else:
                    r = rng.random() * total
                    acc = 0.0
                    k = self.n - 1
                    for j in range(self.n):
                        acc += p[j]
                        if r < acc:
                            k = j
                            break
                z[i] = k
                counts[k] += 1
        return (counts + alpha) / (len(ids) + self.n * alpha)

    def infer_tweet(self, tweet_id: str, text: str) -> np.ndarray:
        """Cached per-tweet inference, seeded by the tweet id."""
        cached = self._theta_cache.get(tweet_id)
        if cached is not None:
            return cached
        seed = zlib.crc32(tweet_id.encode("utf-8"))
        theta = self.infer(topic_tokens(text), seed)
        self._theta_cache[tweet_id] = theta
        return theta

    def top_k_mass(self, theta: np.ndarray, k: int = 5) -> float:
        if self.n <= k:
            return float(theta.sum())
        return float(np.sort(theta)[-k:].sum())

    # ------------------------------------------------------------ persist

    def to_json(self) -> dict:
        return {
            "version": 1,
            "n": self.n,
            "trained_window": self.trained_window,
            "vocab": self.vocab,
            "phi": [[round(float(x), 10) for x in row] for row in self.phi],
            "perplexity_by_n": {str(k): v for k, v in self.perplexity_by_n.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TopicModel":
        phi = np.array(obj["phi"])
        return cls(obj["n"], {k: int(v) for k, v in obj["vocab"].items()}, phi,
                   obj["trained_window"],
                   {int(k): v for k, v in obj["perplexity_by_n"].items()})

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "TopicModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _gibbs_train(docs: list[list[int]], n: int, v_size: int, seed: int,
                 sweeps: int = TRAIN_SWEEPS) -> np.ndarray:
    alpha = ALPHA
    rng = random.Random(seed)
    ndk = np.zeros((len(docs), n))
    nwt = np.zeros((n, v_size))
    nt = np.zeros(n)
    z: list[list[int]] = []
    for d, doc in enumerate(docs):
        zs = []
        for w in doc:
            k = rng.randrange(n)
            zs.append(k)
            ndk[d, k] += 1
            nwt[k, w] += 1
            nt[k] += 1
        z.append(zs)
    vbeta = v_size * BETA
    for _ in range(sweeps):
        for d, doc in enumerate(docs):
            zs = z[d]
            row = ndk[d]
            for i, w in enumerate(doc):
                k = zs[i]
                row[k] -= 1
                nwt[k, w] -= 1
                nt[k] -= 1
                p = (row + alpha) * (nwt[:, w] + BETA) / (nt + vbeta)
                total = p.sum()
                r = rng.random() * total
                acc = 0.0
                k = n - 1
                for j in range(n):
                    acc += p[j]
                    if r < acc:
                        k = j
                        break
                zs[i] = k
                row[k] += 1
                nwt[k, w] += 1
                nt[k] += 1
    phi = (nwt + BETA) / (nt[:, None] + vbeta)
    return phi / phi.sum(axis=1, keepdims=True)


def _perplexity(model_phi: np.ndarray, n: int, docs: list[list[int]], seed: int) -> float:
    alpha = ALPHA
    tmp = TopicModel(n, {}, model_phi, "tmp", {})
    loglik = 0.0
    n_tokens = 0
    rng = random.Random(seed)
    for doc in docs:
        if not doc:
            continue
        # quick theta estimate by frozen-phi sampling
        ids = doc
        z = [rng.randrange(n) for _ in ids]
        counts = np.zeros(n)
        for k in z:
            counts[k] += 1
        for _ in range(INFER_SWEEPS):
            for i, w in enumerate(ids):
                counts[z[i]] -= 1
                p = (counts + alpha) * model_phi[:, w]
                total = p.sum()
                if total <= 0:
                    k = rng.randrange(n)
                else:
                    r = rng.random() * total
                    acc = 0.0
                    k = n - 1
                    for j in range(n):
                        acc += p[j]
                        if r < acc:
                            k = j
                            break
                z[i] = k
                counts[k] += 1
        theta = (counts + alpha) / (len(ids) + n * alpha)
        for w in ids:
            pw = float(theta @ model_phi[:, w])
            loglik += math.log(max(pw, 1e-300))
            n_tokens += 1
    del tmp
    return math.exp(-loglik / max(n_tokens, 1))


class CorpusTooSmall(ValueError):
    pass


def train_topic_model(texts: list[str], n_candidates: list[int],
                      trained_window: str, seed: int = 7001) -> TopicModel:
    """Train each candidate topic count, keep the lowest-perplexity model.

    Refuses corpora smaller than 10x the largest candidate: tables that
    size are noise.
    """
    if not n_candidates:
        raise ValueError("need at least one candidate topic count")
    docs_tok = [topic_tokens(t) for t in texts]
    if len(docs_tok) < 10 * max(n_candidates):
        raise CorpusTooSmall(
            f"{len(docs_tok)} documents < 10 x {max(n_candidates)} topics")
    vocab: dict[str, int] = {}
    for toks in docs_tok:
        for t in toks:
            if t not in vocab:
                vocab[t] = len(vocab)
    docs = [[vocab[t] for t in toks] for toks in docs_tok]
    train = [d for i, d in enumerate(docs) if i % HOLDOUT_EVERY != 0]
    held = [d for i, d in enumerate(docs) if i % HOLDOUT_EVERY == 0]

    results: dict[int, tuple[float, np.ndarray]] = {}
    for n in sorted(n_candidates):
        phi = _gibbs_train(train, n, len(vocab), seed=seed + n)
        perp = _perplexity(phi, n, held, seed=seed + n + 1)
        results[n] = (perp, phi)
    best_n = min(results, key=lambda n: (results[n][0], n))
    perps = {n: results[n][0] for n in results}
    return TopicModel(best_n, vocab, results[best_n][1], trained_window, perps)

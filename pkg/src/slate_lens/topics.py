"""LDA topic profiling of reviewers via collapsed Gibbs sampling.

Topic count is chosen by document co-occurrence coherence; reviewer topic
vectors come from inferring the mixture of one concatenated document of
their publication abstracts.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _gibbs
from .lexical import tokenize

TOPIC_MODEL_SCHEMA = "slate-lens/topic-model/v1"

# Minimal english stopword list for abstract preprocessing; shipping it as
# code keeps runs reproducible without external downloads.
STOPWORDS = frozenset(
    """a an the and or of to in for on with by from as at is are was were be
    been being this that these those it its we our their his her they them i
    you your he she which who whom what where when how not no nor but if then
    than so such can could should would may might will shall do does did done
    has have had having more most less least very also both each few other
    some any all into over under between through during about against
    using use used based via per due new""".split()
)


class TopicModelError(ValueError):
    pass


@dataclass
class TopicModel:
    K: int
    topic_word: np.ndarray  # (K, V); rows are probability distributions
    alpha: float
    beta: float
    vocabulary: tuple[str, ...]
    seed: int
    loglik: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.K < 2:
            raise TopicModelError("K must be >= 2")
        rows = self.topic_word.sum(axis=1)
        if np.any(self.topic_word < 0) or np.any(np.abs(rows - 1.0) > 1e-6):
            raise TopicModelError("topic_word rows must be probability distributions")

    @property
    def word_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.vocabulary)}

    def top_words(self, topic: int, top_m: int) -> list[str]:
        order = np.argsort(-self.topic_word[topic], kind="stable")[:top_m]
        return [self.vocabulary[i] for i in order]

    def save(self, path: Path | str) -> None:
        obj = {
            "schema": TOPIC_MODEL_SCHEMA,
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "vocabulary": list(self.vocabulary),
            "topic_word": self.topic_word.ravel().tolist(),
        }
        Path(path).write_text(json.dumps(obj, sort_keys=True))

    @staticmethod
    def load(path: Path | str) -> "TopicModel":
        obj = json.loads(Path(path).read_text())
        if obj.get("schema") != TOPIC_MODEL_SCHEMA:
            raise TopicModelError(f"unexpected schema {obj.get('schema')!r}")
        vocab = tuple(obj["vocabulary"])
        tw = np.array(obj["topic_word"], dtype=np.float64).reshape(obj["K"], len(vocab))
        return TopicModel(
            K=int(obj["K"]),
            topic_word=tw,
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            vocabulary=vocab,
            seed=int(obj["seed"]),
        )


def preprocess_documents(
    raw_docs: Sequence[str], min_df: int = 2
) -> list[list[str]]:
    """Lowercase, tokenize, drop stopwords and tokens below the document
    frequency floor."""
    token_docs = [[t for t in tokenize(doc) if t not in STOPWORDS] for doc in raw_docs]
    df: dict[str, int] = {}
    for doc in token_docs:
        for t in set(doc):
            df[t] = df.get(t, 0) + 1
    keep = {t for t, c in df.items() if c >= min_df}
    return [[t for t in doc if t in keep] for doc in token_docs]


def _encode(docs: Sequence[Sequence[str]]):
    vocab = tuple(sorted({t for doc in docs for t in doc}))
    index = {w: i for i, w in enumerate(vocab)}
    doc_ids = []
    word_ids = []
    for d, doc in enumerate(docs):
        for t in doc:
            doc_ids.append(d)
            word_ids.append(index[t])
    return (
        vocab,
        np.array(doc_ids, dtype=np.int32),
        np.array(word_ids, dtype=np.int32),
    )


def _sample_mask(iterations: int, burn_in: int, spacing: int, n_samples: int) -> np.ndarray:
    mask = np.zeros(iterations, dtype=np.bool_)
    pos = iterations - 1
    taken = 0
    while pos >= burn_in and taken < n_samples:
        mask[pos] = True
        taken += 1
        pos -= spacing
    if taken == 0:
        mask[iterations - 1] = True
    return mask


def fit_lda(
    docs: Sequence[Sequence[str]],
    K: int,
    alpha: Optional[float] = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
    burn_in: Optional[int] = None,
    sample_spacing: int = 50,
    n_samples: int = 10,
) -> TopicModel:
    """Collapsed Gibbs sampler; topic_word averages smoothed counts over the
    last n_samples states spaced sample_spacing apart after burn-in."""
    docs = [list(d) for d in docs]
    if not docs or all(len(d) == 0 for d in docs):
        raise TopicModelError("empty corpus")
    if K > len(docs):
        raise TopicModelError(f"K={K} exceeds document count {len(docs)}")
    if K < 2:
        raise TopicModelError("K must be >= 2")
    if alpha is None:
        alpha = 50.0 / K
    if burn_in is None:
        burn_in = iterations // 2
    vocab, doc_ids, word_ids = _encode(docs)
    if not vocab:
        raise TopicModelError("empty vocabulary after preprocessing")
    mask = _sample_mask(iterations, burn_in, sample_spacing, n_samples)
    acc, n_acc, loglik = _gibbs.gibbs_fit(
        doc_ids, word_ids, len(docs), K, len(vocab),
        float(alpha), float(beta), int(iterations), mask, int(seed),
    )
    topic_word = acc / n_acc
    topic_word = topic_word / topic_word.sum(axis=1, keepdims=True)
    return TopicModel(
        K=K,
        topic_word=topic_word,
        alpha=float(alpha),
        beta=float(beta),
        vocabulary=vocab,
        seed=int(seed),
        loglik=loglik,
    )


def topic_coherence(
    model: TopicModel, docs: Sequence[Sequence[str]], top_m: int = 10
) -> float:
    """Mean over topics of pairwise document co-occurrence coherence of the
    top-m words (add-one smoothing); higher is better."""
    if top_m < 2:
        raise TopicModelError("top_m must be >= 2")
    if top_m > len(model.vocabulary):
        raise TopicModelError("top_m exceeds vocabulary size")
    doc_sets = [set(doc) for doc in docs]
    scores = []
    for k in range(model.K):
        words = model.top_words(k, top_m)
        pair_scores = []
        for j in range(1, len(words)):
            for i in range(j):
                w_i, w_j = words[i], words[j]
                d_j = sum(1 for s in doc_sets if w_j in s)
                d_ij = sum(1 for s in doc_sets if w_i in s and w_j in s)
                pair_scores.append(np.log((d_ij + 1.0) / max(d_j, 1)))
        scores.append(float(np.mean(pair_scores)))
    return float(np.mean(scores))


def per_topic_coherence(
    model: TopicModel, docs: Sequence[Sequence[str]], top_m: int = 10
) -> list[float]:
    doc_sets = [set(doc) for doc in docs]
    out = []
    for k in range(model.K):
        words = model.top_words(k, top_m)
        pair_scores = []
        for j in range(1, len(words)):
            for i in range(j):
                d_j = sum(1 for s in doc_sets if words[j] in s)
                d_ij = sum(1 for s in doc_sets if words[i] in s and words[j] in s)
                pair_scores.append(np.log((d_ij + 1.0) / max(d_j, 1)))
        out.append(float(np.mean(pair_scores)))
    return out


def select_topic_count(
    docs: Sequence[Sequence[str]],
    K_grid: Sequence[int],
    seed: int = 0,
    top_m: int = 10,
    **fit_kwargs,
) -> int:
    """K maximizing coherence over the grid; exact ties break toward the
    smaller K."""
    if not K_grid:
        raise TopicModelError("empty K grid")
    best_k = None
    best_score = -np.inf
    for K in sorted(K_grid):
        model = fit_lda(docs, K, seed=seed, **fit_kwargs)
        score = topic_coherence(model, docs, top_m=top_m)
        if score > best_score:
            best_score = score
            best_k = K
    return int(best_k)


def infer_reviewer_topics(
    model: TopicModel,
    abstracts: Sequence[Sequence[str]],
    iterations: int = 200,
    seed: int = 0,
) -> np.ndarray:
    """Topic mixture of the single document made of all the reviewer's
    abstracts, with topic_word held fixed. Out-of-vocabulary tokens drop;
    a fully out-of-vocabulary reviewer gets a uniform vector plus warning.
    """
    index = model.word_index
    word_ids = np.array(
        [index[t] for doc in abstracts for t in doc if t in index], dtype=np.int32
    )
    if word_ids.size == 0:
        warnings.warn("reviewer has no in-vocabulary tokens; returning uniform topics")
        return np.full(model.K, 1.0 / model.K)
    theta = _gibbs.gibbs_infer(
        word_ids, model.topic_word, model.alpha, int(iterations),
        int(iterations // 2), int(seed),
    )
    return theta / theta.sum()

"""Tokenization, n-gram extraction, lexical coverage and redundancy.

All functions are pure and stateless; raw scores are calibrated to [0,1]
downstream.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import CorpusError, ReviewDoc, Submission

NGRAM_ORDERS = (1, 2, 3)

_PUNCT = string.punctuation


def tokenize(sentence: str) -> list[str]:
    """Lowercase, split on whitespace, strip leading/trailing punctuation.

    Numerals are kept; tokens that are pure punctuation disappear.
    """
    out = []
    for raw in sentence.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class NgramSet:
    """Per-order sets of token tuples (orders 1..3, within-sentence only)."""

    grams: dict[int, frozenset[tuple[str, ...]]] = field(default_factory=dict)

    def __getitem__(self, n: int) -> frozenset[tuple[str, ...]]:
        return self.grams.get(n, frozenset())

    def union(self, other: "NgramSet") -> "NgramSet":
        return NgramSet({n: self[n] | other[n] for n in NGRAM_ORDERS})


def extract_ngrams(sentences: Iterable[str], n_max: int = 3) -> NgramSet:
    """N-grams per order up to ``n_max``, computed within each sentence.

    Set semantics: duplicates collapse. Empty input gives empty sets.
    """
    grams: dict[int, set[tuple[str, ...]]] = {n: set() for n in range(1, n_max + 1)}
    for sentence in sentences:
        tokens = tokenize(sentence)
        for n in range(1, n_max + 1):
            for i in range(len(tokens) - n + 1):
                grams[n].add(tuple(tokens[i:i + n]))
    return NgramSet({n: frozenset(s) for n, s in grams.items()})


def lexical_coverage_grams(
    review1: NgramSet, review2: NgramSet, abstract: NgramSet
) -> float:
    """Fraction of abstract n-grams present in either review, summed over
    n = 1..3. Orders where the abstract has no n-grams contribute 0."""
    if not abstract[1]:
        raise CorpusError("lexical coverage: abstract has no tokens")
    total = 0.0
    for n in NGRAM_ORDERS:
        denom = len(abstract[n])
        if denom == 0:
            continue
        total += len((review1[n] | review2[n]) & abstract[n]) / denom
    return total


def lexical_redundancy_grams(review1: NgramSet, review2: NgramSet) -> float:
    """Count of n-grams shared by the two reviews, summed over n = 1..3."""
    return float(sum(len(review1[n] & review2[n]) for n in NGRAM_ORDERS))


def lexical_coverage_sentences(
    review1: Sequence[str], review2: Sequence[str], abstract: Sequence[str]
) -> float:
    return lexical_coverage_grams(
        extract_ngrams(review1), extract_ngrams(review2), extract_ngrams(abstract)
    )


def lexical_redundancy_sentences(
    review1: Sequence[str], review2: Sequence[str]
) -> float:
    return lexical_redundancy_grams(extract_ngrams(review1), extract_ngrams(review2))


def lexical_coverage(r1: ReviewDoc, r2: ReviewDoc, s: Submission) -> float:
    if r1.submission_id != s.submission_id or r2.submission_id != s.submission_id:
        raise CorpusError("lexical coverage: reviews do not belong to the submission")
    return lexical_coverage_sentences(r1.sentences, r2.sentences, s.abstract_sentences)


def lexical_redundancy(r1: ReviewDoc, r2: ReviewDoc) -> float:
    return lexical_redundancy_sentences(r1.sentences, r2.sentences)

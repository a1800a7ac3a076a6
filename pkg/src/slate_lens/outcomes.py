"""Outcome registry: the eight per-pair review-utility measures.

Raw scores for the calibrated measures flow through the calibration module;
type coverage is already in [0,1] and bypasses it.
"""

from __future__ import annotations

from typing import Optional

from . import lexical, semantic
from .corpus import ReviewCorpus, abstract_doc_id, review_doc_id
from .semantic import AnnotatedDoc

# Outcomes needing min-max calibration.
CALIBRATED_OUTCOMES = (
    "lexical_coverage",
    "semantic_coverage",
    "lexical_redundancy",
    "semantic_redundancy",
    "weighted_semantic_redundancy_argument",
    "weighted_semantic_redundancy_aspect",
)

# Already unit-interval by construction.
UNIT_OUTCOMES = (
    "type_coverage_argument",
    "type_coverage_aspect",
)

ALL_OUTCOMES = UNIT_OUTCOMES[:1] + UNIT_OUTCOMES[1:] + CALIBRATED_OUTCOMES

COVERAGE_OUTCOMES = (
    "type_coverage_argument",
    "type_coverage_aspect",
    "lexical_coverage",
    "semantic_coverage",
)
REDUNDANCY_OUTCOMES = (
    "lexical_redundancy",
    "semantic_redundancy",
    "weighted_semantic_redundancy_argument",
    "weighted_semantic_redundancy_aspect",
)


class OutcomeError(ValueError):
    pass


def raw_pair_measures(
    review1_sentences,
    review2_sentences,
    abstract_sentences,
    ann1: AnnotatedDoc,
    ann2: AnnotatedDoc,
    ann_abstract: AnnotatedDoc,
    grams1=None,
    grams2=None,
    grams_abstract=None,
) -> dict[str, float]:
    """All eight raw measures for one review pair of one submission.

    Pre-extracted n-gram sets may be passed for the three documents; batch
    callers share them across the pairs of a slate."""
    if grams1 is None:
        grams1 = lexical.extract_ngrams(review1_sentences)
    if grams2 is None:
        grams2 = lexical.extract_ngrams(review2_sentences)
    if grams_abstract is None:
        grams_abstract = lexical.extract_ngrams(abstract_sentences)
    return {
        "type_coverage_argument": semantic.type_coverage(ann1, ann2, "argument"),
        "type_coverage_aspect": semantic.type_coverage(ann1, ann2, "aspect"),
        "lexical_coverage": lexical.lexical_coverage_grams(
            grams1, grams2, grams_abstract
        ),
        "semantic_coverage": semantic.semantic_coverage(ann1, ann2, ann_abstract),
        "lexical_redundancy": lexical.lexical_redundancy_grams(grams1, grams2),
        "semantic_redundancy": semantic.semantic_redundancy(ann1, ann2),
        "weighted_semantic_redundancy_argument": semantic.weighted_semantic_redundancy(
            ann1, ann2, "argument"
        ),
        "weighted_semantic_redundancy_aspect": semantic.weighted_semantic_redundancy(
            ann1, ann2, "aspect"
        ),
    }


def iter_review_pairs(corpus: ReviewCorpus):
    """Yield (submission_id, review_a, review_b) for every unordered review
    pair of every submission, in deterministic reviewer-id order."""
    for sid in sorted(corpus.submissions):
        reviews = corpus.reviews_of(sid)
        for i in range(len(reviews)):
            for j in range(i + 1, len(reviews)):
                yield sid, reviews[i], reviews[j]


def compute_pair_outcomes(
    corpus: ReviewCorpus,
    annotations: dict[str, AnnotatedDoc],
    calibration_table=None,
) -> dict[tuple[str, str, str], dict[str, float]]:
    """Measures for every review pair, keyed (submission_id, reviewer_a,
    reviewer_b) with reviewer ids sorted. Normalized when a calibration
    table is given, raw otherwise."""
    out: dict[tuple[str, str, str], dict[str, float]] = {}
    gram_cache: dict[str, object] = {}

    def _grams(key, sentences):
        if key not in gram_cache:
            gram_cache[key] = lexical.extract_ngrams(sentences)
        return gram_cache[key]

    for sid, rev_a, rev_b in iter_review_pairs(corpus):
        sub = corpus.submissions[sid]
        try:
            ann_a = annotations[review_doc_id(rev_a.review_id)]
            ann_b = annotations[review_doc_id(rev_b.review_id)]
            ann_s = annotations[abstract_doc_id(sid)]
        except KeyError as e:
            raise OutcomeError(f"missing annotations for document {e.args[0]!r}") from e
        raw = raw_pair_measures(
            rev_a.sentences, rev_b.sentences, sub.abstract_sentences, ann_a, ann_b, ann_s,
            grams1=_grams(review_doc_id(rev_a.review_id), rev_a.sentences),
            grams2=_grams(review_doc_id(rev_b.review_id), rev_b.sentences),
            grams_abstract=_grams(abstract_doc_id(sid), sub.abstract_sentences),
        )
        if calibration_table is not None:
            from .calibration import normalize_outcome

            for measure in CALIBRATED_OUTCOMES:
                raw[measure] = normalize_outcome(raw[measure], measure, calibration_table)
        out[(sid, rev_a.reviewer_id, rev_b.reviewer_id)] = raw
    return out


def pair_key(sid: str, reviewer_a: str, reviewer_b: str) -> tuple[str, str, str]:
    a, b = sorted((reviewer_a, reviewer_b))
    return (sid, a, b)

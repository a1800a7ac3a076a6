"""Reviewer profile vectors and pairwise slate-diversity treatments.

Treatment values are signed: +1 diverse, -1 non-diverse, and 0 whenever a
profile field the dimension needs is missing for either reviewer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import ReviewCorpus, ReviewerRecord
from .lexical import tokenize
from .stats import derive_seed
from .topics import TopicModel, infer_reviewer_topics

DIMENSIONS = ("organization", "geographical", "seniority", "topical", "coauthorship")

N_REGIONS = 12
N_SENIORITY = 2  # [non-senior, senior]

DIVERSE = 1
NON_DIVERSE = -1
UNKNOWN = 0


class DiversityError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileVectors:
    """Per-dimension encodings of one reviewer; None marks a missing field."""

    reviewer_id: str
    organization: Optional[np.ndarray]  # multi-hot over the corpus org vocab
    region: Optional[np.ndarray]  # one-hot, length 12
    seniority: Optional[np.ndarray]  # one-hot, [non-senior, senior]
    coauthors: Optional[frozenset[int]]  # sparse binary set-vector
    topics: Optional[np.ndarray]  # probability vector, length K


@dataclass(frozen=True)
class SlatePairTreatment:
    reviewer_a: str
    reviewer_b: str
    deltas: dict[str, int]  # dimension -> -1/0/+1
    topical_similarity: Optional[float]
    coauthor_distance: Optional[float]  # math.inf when further than 2


@dataclass(frozen=True)
class Thresholds:
    h_index: int
    topical_similarity: float

    @staticmethod
    def load(path: Path | str) -> "Thresholds":
        obj = json.loads(Path(path).read_text())
        return Thresholds(
            h_index=int(obj["h_index"]),
            topical_similarity=float(obj["topical_similarity"]),
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(
            {"h_index": self.h_index, "topical_similarity": self.topical_similarity},
            sort_keys=True,
        ))


def build_profile_vectors(
    rec: ReviewerRecord,
    topic_vector: Optional[np.ndarray],
    n_organizations: int,
    h_index_threshold: int,
) -> ProfileVectors:
    """Encode one reviewer record. Missing fields stay missing; seniority is
    senior iff h_index exceeds the corpus threshold."""
    organization = None
    if rec.organization_ids:
        organization = np.zeros(n_organizations)
        for i in rec.organization_ids:
            organization[i] = 1.0
    region = None
    if rec.region_id is not None:
        region = np.zeros(N_REGIONS)
        region[rec.region_id] = 1.0
    seniority = None
    if rec.h_index is not None:
        seniority = np.zeros(N_SENIORITY)
        seniority[1 if rec.h_index > h_index_threshold else 0] = 1.0
    topics = None
    if topic_vector is not None:
        topics = np.asarray(topic_vector, dtype=np.float64)
        if abs(topics.sum() - 1.0) > 1e-6 or np.any(topics < 0):
            raise DiversityError(f"{rec.reviewer_id}: topic vector is not a distribution")
    return ProfileVectors(
        reviewer_id=rec.reviewer_id,
        organization=organization,
        region=region,
        seniority=seniority,
        coauthors=rec.coauthor_ids,
        topics=topics,
    )


def topical_similarity(t1: np.ndarray, t2: np.ndarray) -> float:
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    if t1.shape != t2.shape:
        raise DiversityError("topic vectors have mismatched lengths")
    return float(t1 @ t2)


def coauthor_distance(r1: ReviewerRecord, r2: ReviewerRecord, coauthor_index: dict[str, int]):
    """0 same reviewer, 1 direct co-authors, 2 shared co-author, inf beyond.

    None when either coauthor set is missing (handled as delta = 0 upstream).
    Distances past 2 are not resolved further.
    """
    if r1.reviewer_id == r2.reviewer_id:
        return 0
    if r1.coauthor_ids is None or r2.coauthor_ids is None:
        return None
    own1 = coauthor_index.get(r1.reviewer_id)
    own2 = coauthor_index.get(r2.reviewer_id)
    if (own2 is not None and own2 in r1.coauthor_ids) or (
        own1 is not None and own1 in r2.coauthor_ids
    ):
        return 1
    if r1.coauthor_ids & r2.coauthor_ids:
        return 2
    return math.inf


def pair_diversity(
    p1: ProfileVectors,
    p2: ProfileVectors,
    dimension: str,
    topical_threshold: Optional[float] = None,
    coauthor_dist=None,
) -> int:
    """Signed diversity along one dimension: shared 1s (or similarity above
    threshold, or co-author distance <= 2) means non-diverse."""
    if dimension == "organization":
        if p1.organization is None or p2.organization is None:
            return UNKNOWN
        return NON_DIVERSE if float(p1.organization @ p2.organization) > 0 else DIVERSE
    if dimension == "geographical":
        if p1.region is None or p2.region is None:
            return UNKNOWN
        return NON_DIVERSE if float(p1.region @ p2.region) > 0 else DIVERSE
    if dimension == "seniority":
        if p1.seniority is None or p2.seniority is None:
            return UNKNOWN
        return NON_DIVERSE if float(p1.seniority @ p2.seniority) > 0 else DIVERSE
    if dimension == "topical":
        if p1.topics is None or p2.topics is None:
            return UNKNOWN
        if topical_threshold is None:
            raise DiversityError("topical dimension requires a threshold")
        return NON_DIVERSE if topical_similarity(p1.topics, p2.topics) >= topical_threshold else DIVERSE
    if dimension == "coauthorship":
        if coauthor_dist is None:
            if p1.coauthors is None or p2.coauthors is None:
                return UNKNOWN
            raise DiversityError("coauthorship dimension requires a distance")
        return NON_DIVERSE if coauthor_dist <= 2 else DIVERSE
    raise DiversityError(f"unknown dimension {dimension!r}")


def compute_h_index_threshold(corpus: ReviewCorpus) -> int:
    values = sorted(
        rec.h_index for rec in corpus.reviewers.values() if rec.h_index is not None
    )
    if not values:
        raise DiversityError("no reviewer has an h-index; cannot compute threshold")
    return int(np.median(values))


def infer_all_topic_vectors(
    corpus: ReviewCorpus,
    topic_model: Optional[TopicModel],
    seed: int = 0,
    iterations: int = 200,
) -> dict[str, Optional[np.ndarray]]:
    """Per-reviewer topic mixtures from publication abstracts. Reviewers
    without abstracts (or without a fitted model) stay missing."""
    out: dict[str, Optional[np.ndarray]] = {}
    for rid in sorted(corpus.reviewers):
        rec = corpus.reviewers[rid]
        if topic_model is None or rec.publication_abstracts is None:
            out[rid] = None
            continue
        token_docs = [tokenize(a) for a in rec.publication_abstracts]
        out[rid] = infer_reviewer_topics(
            topic_model, token_docs, iterations=iterations,
            seed=derive_seed(seed, "topic-infer", rid),
        )
    return out


def build_all_profiles(
    corpus: ReviewCorpus,
    topic_vectors: dict[str, Optional[np.ndarray]],
    h_index_threshold: Optional[int] = None,
) -> dict[str, ProfileVectors]:
    if h_index_threshold is None:
        h_index_threshold = compute_h_index_threshold(corpus)
    n_orgs = len(corpus.organization_index)
    return {
        rid: build_profile_vectors(
            corpus.reviewers[rid], topic_vectors.get(rid), n_orgs, h_index_threshold
        )
        for rid in sorted(corpus.reviewers)
    }


def compute_topical_threshold(
    corpus: ReviewCorpus, profiles: dict[str, ProfileVectors]
) -> float:
    """Median pairwise topical similarity over assigned pairs with topics
    present (the corpus-statistic default; can be pinned via thresholds)."""
    sims = []
    for sid in sorted(corpus.submissions):
        reviewers = sorted(corpus.submissions[sid].assigned_reviewers)
        for i in range(len(reviewers)):
            for j in range(i + 1, len(reviewers)):
                t1 = profiles[reviewers[i]].topics
                t2 = profiles[reviewers[j]].topics
                if t1 is not None and t2 is not None:
                    sims.append(topical_similarity(t1, t2))
    if not sims:
        raise DiversityError("no assigned pair has topic vectors on both sides")
    return float(np.median(sims))


def compute_treatments(
    corpus: ReviewCorpus,
    profiles: dict[str, ProfileVectors],
    thresholds: Optional[Thresholds] = None,
) -> dict[tuple[str, str, str], SlatePairTreatment]:
    """Treatments for every assigned reviewer pair of every submission,
    keyed (submission_id, reviewer_a, reviewer_b) with sorted reviewer ids."""
    if thresholds is not None:
        topical_threshold = thresholds.topical_similarity
    else:
        topical_threshold = compute_topical_threshold(corpus, profiles)
    out: dict[tuple[str, str, str], SlatePairTreatment] = {}
    for sid in sorted(corpus.submissions):
        reviewers = sorted(corpus.submissions[sid].assigned_reviewers)
        for i in range(len(reviewers)):
            for j in range(i + 1, len(reviewers)):
                ra, rb = reviewers[i], reviewers[j]
                p1, p2 = profiles[ra], profiles[rb]
                dist = coauthor_distance(
                    corpus.reviewers[ra], corpus.reviewers[rb], corpus.coauthor_index
                )
                sim = None
                if p1.topics is not None and p2.topics is not None:
                    sim = topical_similarity(p1.topics, p2.topics)
                deltas = {}
                for dim in DIMENSIONS:
                    deltas[dim] = pair_diversity(
                        p1, p2, dim,
                        topical_threshold=topical_threshold,
                        coauthor_dist=dist if dim == "coauthorship" else None,
                    )
                out[(sid, ra, rb)] = SlatePairTreatment(
                    reviewer_a=ra,
                    reviewer_b=rb,
                    deltas=deltas,
                    topical_similarity=sim,
                    coauthor_distance=dist,
                )
    return out

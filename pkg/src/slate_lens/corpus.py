"""Peer-review corpus: loading, validation, anonymization, sentence handling.

The corpus is the single source of truth for downstream modules. It is
immutable after load and safe to share across parallel workers.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional


class CorpusError(ValueError):
    """Schema violation or referential-integrity failure in corpus files."""


class DanglingReferenceError(CorpusError):
    """A record references a submission or reviewer that does not exist."""


class EmptyReviewError(CorpusError):
    """All review text fields are empty."""


class AnonymizationCollisionError(CorpusError):
    """Two distinct identifiers hashed to the same pseudonym; re-salt."""


@dataclass(frozen=True)
class Submission:
    submission_id: str
    abstract_sentences: tuple[str, ...]
    assigned_reviewers: tuple[str, ...]

    def validate(self) -> None:
        if not self.abstract_sentences:
            raise CorpusError(f"submission {self.submission_id}: empty abstract")
        n = len(self.assigned_reviewers)
        if not 2 <= n <= 4:
            raise CorpusError(
                f"submission {self.submission_id}: {n} assigned reviewers (need 2-4)"
            )
        if len(set(self.assigned_reviewers)) != n:
            raise CorpusError(
                f"submission {self.submission_id}: duplicate assigned reviewers"
            )


@dataclass(frozen=True)
class ReviewDoc:
    review_id: str
    submission_id: str
    reviewer_id: str
    sentences: tuple[str, ...]
    score: Optional[int] = None
    meta_rating: Optional[int] = None

    def validate(self) -> None:
        if not self.sentences:
            raise CorpusError(f"review {self.review_id}: no sentences")
        if self.score is not None and not 1 <= self.score <= 10:
            raise CorpusError(f"review {self.review_id}: score {self.score} not in [1,10]")
        if self.meta_rating is not None and not 1 <= self.meta_rating <= 5:
            raise CorpusError(
                f"review {self.review_id}: meta_rating {self.meta_rating} not in [1,5]"
            )


@dataclass(frozen=True)
class ReviewerRecord:
    """Profile of one reviewer. ``None`` marks a missing field; the corpus
    layer never imputes (the diversity layer applies its own missing rule)."""

    reviewer_id: str
    organization_ids: Optional[frozenset[int]] = None
    region_id: Optional[int] = None
    h_index: Optional[int] = None
    coauthor_ids: Optional[frozenset[int]] = None
    publication_abstracts: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class ReviewCorpus:
    submissions: dict[str, Submission]
    reviews: dict[str, ReviewDoc]  # keyed by review_id
    reviewers: dict[str, ReviewerRecord]
    # (reviewer_id, submission_id) -> expertise value or None when missing
    expertise: dict[tuple[str, str], Optional[float]]
    organization_index: dict[str, int] = field(default_factory=dict)
    coauthor_index: dict[str, int] = field(default_factory=dict)
    region_names: tuple[str, ...] = ()

    def reviews_of(self, submission_id: str) -> list[ReviewDoc]:
        out = [r for r in self.reviews.values() if r.submission_id == submission_id]
        out.sort(key=lambda r: r.reviewer_id)
        return out

    def validate(self) -> None:
        for sub in self.submissions.values():
            sub.validate()
            for rid in sub.assigned_reviewers:
                if rid not in self.reviewers:
                    raise DanglingReferenceError(
                        f"submission {sub.submission_id}: unknown reviewer {rid}"
                    )
        seen_pairs = set()
        for rev in self.reviews.values():
            rev.validate()
            if rev.submission_id not in self.submissions:
                raise DanglingReferenceError(
                    f"review {rev.review_id}: unknown submission {rev.submission_id}"
                )
            if rev.reviewer_id not in self.reviewers:
                raise DanglingReferenceError(
                    f"review {rev.review_id}: unknown reviewer {rev.reviewer_id}"
                )
            key = (rev.submission_id, rev.reviewer_id)
            if key in seen_pairs:
                raise CorpusError(f"duplicate review for {key}")
            seen_pairs.add(key)
        for (rid, sid), val in self.expertise.items():
            if sid not in self.submissions:
                raise DanglingReferenceError(f"expertise: unknown submission {sid}")
            if rid not in self.reviewers:
                raise DanglingReferenceError(f"expertise: unknown reviewer {rid}")
            if val is not None and not (val == val and abs(val) != float("inf")):
                raise CorpusError(f"expertise for ({rid}, {sid}) not finite")


# --- sentence segmentation -------------------------------------------------

# Lowercased tokens that end with '.' but do not terminate a sentence.
_ABBREVIATIONS = {
    "e.g", "i.e", "etc", "cf", "vs", "al", "fig", "figs", "eq", "eqs",
    "sec", "no", "vol", "resp", "approx", "dr", "prof", "mr", "mrs", "ms",
    "ca", "incl", "dept", "univ",
}

_BOUNDARY = re.compile(r"[.!?]+(?=\s|$)")


def split_sentences(text: str) -> list[str]:
    """Deterministic rule-based sentence splitter.

    Splits on terminal punctuation followed by whitespace, guarding common
    abbreviations and decimals. Concatenating the result (modulo whitespace)
    reconstructs the input; whitespace-only input gives an empty list.
    """
    if not text.strip():
        return []
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        prefix = text[start:m.start()]
        last_word = prefix.rsplit(None, 1)[-1] if prefix.split() else ""
        if last_word.lower().lstrip("(\"'") in _ABBREVIATIONS:
            continue
        chunk = text[start:end].strip()
        if chunk:
            sentences.append(chunk)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def merge_review_fields(
    summary: str, strengths: str, weaknesses: str, comments: str
) -> str:
    """Concatenate the four review fields in fixed order with one separator."""
    parts = [p.strip() for p in (summary, strengths, weaknesses, comments)]
    parts = [p for p in parts if p]
    if not parts:
        raise EmptyReviewError("all review fields are empty")
    return "\n".join(parts)


# --- anonymization ---------------------------------------------------------

def _pseudonym(identifier: str, salt: bytes) -> str:
    h = hashlib.blake2b(identifier.encode("utf-8"), key=salt, digest_size=8)
    return "r_" + h.hexdigest()


def anonymize(raw: ReviewCorpus, salt: bytes) -> ReviewCorpus:
    """Replace reviewer identifiers (and coauthor names) by keyed-hash
    pseudonyms. Injective under a fixed salt; collisions are rejected."""
    ids = sorted(raw.reviewers)
    mapping = {rid: _pseudonym(rid, salt) for rid in ids}
    if len(set(mapping.values())) != len(mapping):
        raise AnonymizationCollisionError("pseudonym collision; use a different salt")

    coauthor_names = sorted(raw.coauthor_index)
    co_mapping = {name: _pseudonym(name, salt) for name in coauthor_names}
    if len(set(co_mapping.values())) != len(co_mapping):
        raise AnonymizationCollisionError("pseudonym collision; use a different salt")

    submissions = {
        sid: replace(sub, assigned_reviewers=tuple(mapping[r] for r in sub.assigned_reviewers))
        for sid, sub in raw.submissions.items()
    }
    reviews = {
        rid: replace(rev, reviewer_id=mapping[rev.reviewer_id])
        for rid, rev in raw.reviews.items()
    }
    reviewers = {
        mapping[rid]: replace(rec, reviewer_id=mapping[rid])
        for rid, rec in raw.reviewers.items()
    }
    expertise = {(mapping[r], s): v for (r, s), v in raw.expertise.items()}
    coauthor_index = {co_mapping[name]: idx for name, idx in raw.coauthor_index.items()}
    return ReviewCorpus(
        submissions=submissions,
        reviews=reviews,
        reviewers=reviewers,
        expertise=expertise,
        organization_index=dict(raw.organization_index),
        coauthor_index=coauthor_index,
        region_names=raw.region_names,
    )


# --- loading ---------------------------------------------------------------

@dataclass(frozen=True)
class CorpusPaths:
    submissions: Path
    reviews: Path
    reviewers: Path
    assignments: Path
    regions: Optional[Path] = None  # defaults to the shipped mapping

    @staticmethod
    def in_dir(directory: Path | str) -> "CorpusPaths":
        d = Path(directory)
        regions = d / "regions.json"
        return CorpusPaths(
            submissions=d / "submissions.jsonl",
            reviews=d / "reviews.jsonl",
            reviewers=d / "reviewers.jsonl",
            assignments=d / "assignments.jsonl",
            regions=regions if regions.exists() else None,
        )


def default_region_mapping() -> dict[str, str]:
    with resources.files("slate_lens.data").joinpath("regions.json").open("rb") as f:
        return json.load(f)


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    if not Path(path).exists():
        raise CorpusError(f"corpus file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e})") from e
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected an object")
            yield lineno, obj


def _require(obj: dict, key: str, typ, path: Path, lineno: int):
    if key not in obj:
        raise CorpusError(f"{path}:{lineno}: missing field '{key}'")
    val = obj[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise CorpusError(f"{path}:{lineno}: field '{key}' has wrong type")
    return val


def load_corpus(paths: CorpusPaths) -> ReviewCorpus:
    """Load and cross-validate the JSONL corpus file set.

    Schema violations and dangling references are rejected with file and
    line number. Missing optional profile fields stay flagged as missing.
    """
    if paths.regions is not None:
        with open(paths.regions, "r", encoding="utf-8") as f:
            region_mapping = json.load(f)
    else:
        region_mapping = default_region_mapping()
    region_names = tuple(sorted(set(region_mapping.values())))
    if len(region_names) > 12:
        raise CorpusError(
            f"region mapping defines {len(region_names)} regions; at most 12 supported"
        )
    region_ids = {name: i for i, name in enumerate(region_names)}

    # First pass over reviewers to build corpus-wide vocabularies.
    reviewer_rows = list(_read_jsonl(paths.reviewers))
    org_names: set[str] = set()
    coauthor_names: set[str] = set()
    for lineno, obj in reviewer_rows:
        rid = _require(obj, "id", str, paths.reviewers, lineno)
        orgs = _require(obj, "organizations", list, paths.reviewers, lineno)
        org_names.update(str(o) for o in orgs)
        coauthor_names.add(rid)
        if obj.get("coauthors") is not None:
            if not isinstance(obj["coauthors"], list):
                raise CorpusError(f"{paths.reviewers}:{lineno}: 'coauthors' must be a list")
            coauthor_names.update(str(c) for c in obj["coauthors"])
    organization_index = {name: i for i, name in enumerate(sorted(org_names))}
    coauthor_index = {name: i for i, name in enumerate(sorted(coauthor_names))}

    reviewers: dict[str, ReviewerRecord] = {}
    for lineno, obj in reviewer_rows:
        rid = obj["id"]
        if rid in reviewers:
            raise CorpusError(f"{paths.reviewers}:{lineno}: duplicate reviewer id {rid}")
        orgs = frozenset(organization_index[str(o)] for o in obj["organizations"])
        region_id = None
        country = obj.get("country")
        if country is not None:
            region_name = region_mapping.get(str(country))
            region_id = region_ids[region_name] if region_name is not None else None
        h_index = obj.get("h_index")
        if h_index is not None and (not isinstance(h_index, int) or h_index < 0):
            raise CorpusError(f"{paths.reviewers}:{lineno}: 'h_index' must be a non-negative int")
        coauthors = None
        if obj.get("coauthors") is not None:
            coauthors = frozenset(
                {coauthor_index[str(c)] for c in obj["coauthors"]}
                | {coauthor_index[rid]}
            )
        abstracts = None
        if obj.get("abstracts") is not None:
            if not isinstance(obj["abstracts"], list):
                raise CorpusError(f"{paths.reviewers}:{lineno}: 'abstracts' must be a list")
            abstracts = tuple(str(a) for a in obj["abstracts"])
        reviewers[rid] = ReviewerRecord(
            reviewer_id=rid,
            organization_ids=orgs if orgs else None,
            region_id=region_id,
            h_index=h_index,
            coauthor_ids=coauthors,
            publication_abstracts=abstracts,
        )

    assignments: dict[str, list[str]] = {}
    expertise: dict[tuple[str, str], Optional[float]] = {}
    for lineno, obj in _read_jsonl(paths.assignments):
        sid = _require(obj, "submission_id", str, paths.assignments, lineno)
        rid = _require(obj, "reviewer_id", str, paths.assignments, lineno)
        if rid not in reviewers:
            raise DanglingReferenceError(
                f"{paths.assignments}:{lineno}: unknown reviewer {rid}"
            )
        assignments.setdefault(sid, []).append(rid)
        exp = obj.get("expertise")
        if exp is not None and not isinstance(exp, (int, float)):
            raise CorpusError(f"{paths.assignments}:{lineno}: 'expertise' must be a number")
        expertise[(rid, sid)] = float(exp) if exp is not None else None

    submissions: dict[str, Submission] = {}
    for lineno, obj in _read_jsonl(paths.submissions):
        sid = _require(obj, "id", str, paths.submissions, lineno)
        if sid in submissions:
            raise CorpusError(f"{paths.submissions}:{lineno}: duplicate submission id {sid}")
        abstract = _require(obj, "abstract", str, paths.submissions, lineno)
        sentences = tuple(split_sentences(abstract))
        if not sentences:
            raise CorpusError(f"{paths.submissions}:{lineno}: empty abstract")
        assigned = tuple(assignments.get(sid, []))
        submissions[sid] = Submission(
            submission_id=sid,
            abstract_sentences=sentences,
            assigned_reviewers=assigned,
        )

    for sid in assignments:
        if sid not in submissions:
            raise DanglingReferenceError(
                f"{paths.assignments}: unknown submission {sid}"
            )

    reviews: dict[str, ReviewDoc] = {}
    for lineno, obj in _read_jsonl(paths.reviews):
        rid = _require(obj, "id", str, paths.reviews, lineno)
        if rid in reviews:
            raise CorpusError(f"{paths.reviews}:{lineno}: duplicate review id {rid}")
        sid = _require(obj, "submission_id", str, paths.reviews, lineno)
        reviewer = _require(obj, "reviewer_id", str, paths.reviews, lineno)
        fields = []
        for key in ("summary", "strengths", "weaknesses", "comments"):
            fields.append(str(obj.get(key, "")))
        try:
            text = merge_review_fields(*fields)
        except EmptyReviewError as e:
            raise CorpusError(f"{paths.reviews}:{lineno}: {e}") from e
        score = obj.get("score")
        meta_rating = obj.get("meta_rating")
        if score is not None and not isinstance(score, int):
            raise CorpusError(f"{paths.reviews}:{lineno}: 'score' must be an int")
        if meta_rating is not None and not isinstance(meta_rating, int):
            raise CorpusError(f"{paths.reviews}:{lineno}: 'meta_rating' must be an int")
        reviews[rid] = ReviewDoc(
            review_id=rid,
            submission_id=sid,
            reviewer_id=reviewer,
            sentences=tuple(split_sentences(text)),
            score=score,
            meta_rating=meta_rating,
        )

    corpus = ReviewCorpus(
        submissions=submissions,
        reviews=reviews,
        reviewers=reviewers,
        expertise=expertise,
        organization_index=organization_index,
        coauthor_index=coauthor_index,
        region_names=region_names,
    )
    corpus.validate()
    return corpus


# --- doc-id convention shared with annotation files ------------------------

def review_doc_id(review_id: str) -> str:
    return f"review:{review_id}"


def abstract_doc_id(submission_id: str) -> str:
    return f"abstract:{submission_id}"

"""Semantic coverage/redundancy measures over per-sentence annotations.

Annotations come either from the external annotator sidecar (a JSONL file)
or from the deterministic fallback annotator defined here. Embeddings are
L2-normalized on ingestion so dot products equal cosine similarities.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .lexical import tokenize

ANNOTATIONS_SCHEMA = "slate-lens/annotations/v1"

ASPECT_TYPES = (
    "Summary",
    "Motivation/Impact",
    "Originality",
    "Soundness/Correctness",
    "Substance",
    "Replicability",
    "Meaningful Comparison",
    "Clarity",
)
ARGUMENT_TYPES = ("Evaluation", "Fact", "Request", "Reference", "Quote")

N_ASPECTS = len(ASPECT_TYPES)
N_ARGUMENTS = len(ARGUMENT_TYPES)

_PROB_TOL = 1e-6


class AnnotationError(ValueError):
    """Malformed annotation data (dimensions, probabilities, references)."""


@dataclass(frozen=True)
class AnnotatedDoc:
    """Sentence-level annotations for one document.

    embeddings: (m, dim) unit-norm rows; aspect_probs: (m, 8); argument_probs:
    (m, 5). Type channels may be absent (e.g. for abstracts).
    """

    doc_id: str
    embeddings: np.ndarray
    aspect_probs: Optional[np.ndarray] = None
    argument_probs: Optional[np.ndarray] = None

    @property
    def n_sentences(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @staticmethod
    def build(
        doc_id: str,
        embeddings: np.ndarray,
        aspect_probs: Optional[np.ndarray] = None,
        argument_probs: Optional[np.ndarray] = None,
    ) -> "AnnotatedDoc":
        emb = np.asarray(embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[0] == 0:
            raise AnnotationError(f"{doc_id}: embeddings must be a non-empty 2-d array")
        norms = np.linalg.norm(emb, axis=1)
        if np.any(norms == 0):
            raise AnnotationError(f"{doc_id}: zero-norm embedding")
        emb = emb / norms[:, None]

        def _check_probs(p, width, name):
            if p is None:
                return None
            p = np.asarray(p, dtype=np.float64)
            if p.shape != (emb.shape[0], width):
                raise AnnotationError(f"{doc_id}: {name} shape {p.shape} != ({emb.shape[0]}, {width})")
            if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > _PROB_TOL):
                raise AnnotationError(f"{doc_id}: {name} rows are not probability vectors")
            return p

        return AnnotatedDoc(
            doc_id=doc_id,
            embeddings=emb,
            aspect_probs=_check_probs(aspect_probs, N_ASPECTS, "aspect_probs"),
            argument_probs=_check_probs(argument_probs, N_ARGUMENTS, "argument_probs"),
        )

    def type_probs(self, channel: str) -> np.ndarray:
        if channel == "aspect":
            probs = self.aspect_probs
        elif channel == "argument":
            probs = self.argument_probs
        else:
            raise AnnotationError(f"unknown type channel {channel!r}")
        if probs is None:
            raise AnnotationError(f"{self.doc_id}: missing {channel} type vectors")
        return probs


def _check_pair(a: AnnotatedDoc, b: AnnotatedDoc) -> None:
    if a.dim != b.dim:
        raise AnnotationError(f"embedding dimension mismatch: {a.dim} vs {b.dim}")


def semantic_coverage(r1: AnnotatedDoc, r2: AnnotatedDoc, abstract: AnnotatedDoc) -> float:
    """Sum over abstract sentences of the best dot product against any
    sentence of either review."""
    _check_pair(r1, abstract)
    _check_pair(r2, abstract)
    if abstract.n_sentences == 0:
        raise AnnotationError("semantic coverage: empty abstract")
    review_emb = np.vstack([r1.embeddings, r2.embeddings])
    sims = abstract.embeddings @ review_emb.T
    return float(sims.max(axis=1).sum())


def semantic_redundancy(r1: AnnotatedDoc, r2: AnnotatedDoc) -> float:
    """Each review's sentences matched to their best counterpart in the
    other review, both directions summed. Symmetric by construction."""
    _check_pair(r1, r2)
    if r1.n_sentences == 0 or r2.n_sentences == 0:
        raise AnnotationError("semantic redundancy: empty review")
    sims = r1.embeddings @ r2.embeddings.T
    return float(sims.max(axis=1).sum() + sims.max(axis=0).sum())


def weighted_semantic_redundancy(
    r1: AnnotatedDoc, r2: AnnotatedDoc, type_channel: str
) -> float:
    """All-pairs sum of embedding dot products weighted by type-vector dot
    products for the chosen channel ('aspect' or 'argument')."""
    _check_pair(r1, r2)
    weights = r1.type_probs(type_channel) @ r2.type_probs(type_channel).T
    sims = r1.embeddings @ r2.embeddings.T
    return float((weights * sims).sum())


def type_coverage(r1: AnnotatedDoc, r2: AnnotatedDoc, type_channel: str) -> float:
    """Fraction of types appearing as some sentence's argmax across the
    pair of reviews. Already in [0,1]; bypasses calibration."""
    p1 = r1.type_probs(type_channel)
    p2 = r2.type_probs(type_channel)
    width = p1.shape[1]
    present = set(np.argmax(p1, axis=1)) | set(np.argmax(p2, axis=1))
    return len(present) / width


# --- deterministic fallback annotator ---------------------------------------

_ASPECT_KEYWORDS = {
    "Summary": ("paper", "propose", "present", "study", "overview"),
    "Motivation/Impact": ("motivation", "important", "impact", "useful", "significance"),
    "Originality": ("novel", "new", "original", "contribution", "first"),
    "Soundness/Correctness": ("correct", "proof", "sound", "valid", "error"),
    "Substance": ("experiment", "result", "evaluation", "dataset", "analysis"),
    "Replicability": ("code", "reproduce", "replicate", "implementation", "details"),
    "Meaningful Comparison": ("baseline", "compare", "comparison", "related", "prior"),
    "Clarity": ("clear", "writing", "written", "presentation", "readable"),
}
_ARGUMENT_KEYWORDS = {
    "Evaluation": ("good", "weak", "strong", "interesting", "poor"),
    "Fact": ("is", "are", "uses", "shows", "method"),
    "Request": ("should", "please", "would", "suggest", "could"),
    "Reference": ("cite", "citation", "reference", "work", "literature"),
    "Quote": ("quote", "states", "says", "writes", "according"),
}

_token_vector_cache: dict[tuple[str, int, int], np.ndarray] = {}


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    key = (token, dim, seed)
    vec = _token_vector_cache.get(key)
    if vec is None:
        digest = hashlib.blake2b(
            f"{seed}:{token}".encode("utf-8"), digest_size=8
        ).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))
        vec = rng.standard_normal(dim)
        _token_vector_cache[key] = vec
    return vec


def _keyword_probs(tokens: list[str], keyword_map: dict) -> np.ndarray:
    counts = np.ones(len(keyword_map))  # add-one smoothing
    token_set = set(tokens)
    for i, words in enumerate(keyword_map.values()):
        counts[i] += sum(1 for w in words if w in token_set)
    return counts / counts.sum()


def fallback_annotate(
    doc_id: str, sentences: Sequence[str], dim: int = 768, seed: int = 0
) -> AnnotatedDoc:
    """Deterministic annotator for tests and sidecar-free runs.

    Embedding: hashed token vectors summed over the token multiset, then
    L2-normalized (bag semantics). Type vectors: smoothed keyword counts.
    """
    if not sentences:
        raise AnnotationError(f"{doc_id}: cannot annotate an empty document")
    emb = np.zeros((len(sentences), dim))
    aspects = np.zeros((len(sentences), N_ASPECTS))
    arguments = np.zeros((len(sentences), N_ARGUMENTS))
    for i, sentence in enumerate(sentences):
        tokens = tokenize(sentence)
        if tokens:
            emb[i] = sum(_token_vector(t, dim, seed) for t in tokens)
        else:
            emb[i] = _token_vector("", dim, seed)
        aspects[i] = _keyword_probs(tokens, _ASPECT_KEYWORDS)
        arguments[i] = _keyword_probs(tokens, _ARGUMENT_KEYWORDS)
    return AnnotatedDoc.build(doc_id, emb, aspects, arguments)


# --- annotations file IO -----------------------------------------------------

def write_annotations(
    docs: Iterable[AnnotatedDoc], path: Path | str, model: str, dim: Optional[int] = None
) -> None:
    """Write the annotations JSONL file (header line first), atomically."""
    docs = list(docs)
    if dim is None:
        dim = docs[0].dim if docs else 0
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(json.dumps(
                {"schema": ANNOTATIONS_SCHEMA, "dim": dim, "model": model},
                sort_keys=True,
            ) + "\n")
            for doc in docs:
                if doc.dim != dim:
                    raise AnnotationError(
                        f"{doc.doc_id}: dim {doc.dim} != declared {dim}"
                    )
                for i in range(doc.n_sentences):
                    record = {
                        "doc_id": doc.doc_id,
                        "sentence_index": i,
                        "embedding": doc.embeddings[i].tolist(),
                    }
                    if doc.aspect_probs is not None:
                        record["aspect_probs"] = doc.aspect_probs[i].tolist()
                    if doc.argument_probs is not None:
                        record["argument_probs"] = doc.argument_probs[i].tolist()
                    f.write(json.dumps(record, sort_keys=True) + "\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_annotations(path: Path | str) -> dict[str, AnnotatedDoc]:
    """Load annotations keyed by doc_id; validates header and vectors."""
    path = Path(path)
    by_doc: dict[str, dict[int, dict]] = {}
    with open(path, "r", encoding="utf-8") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise AnnotationError(f"{path}:1: invalid header ({e})") from e
        if header.get("schema") != ANNOTATIONS_SCHEMA:
            raise AnnotationError(f"{path}:1: unexpected schema {header.get('schema')!r}")
        dim = header.get("dim")
        if not isinstance(dim, int) or dim <= 0:
            raise AnnotationError(f"{path}:1: invalid dim")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            emb = rec.get("embedding")
            if not isinstance(emb, list) or len(emb) != dim:
                raise AnnotationError(
                    f"{path}:{lineno}: embedding length != declared dim {dim}"
                )
            by_doc.setdefault(rec["doc_id"], {})[rec["sentence_index"]] = rec

    docs: dict[str, AnnotatedDoc] = {}
    for doc_id, rows in by_doc.items():
        indices = sorted(rows)
        if indices != list(range(len(indices))):
            raise AnnotationError(f"{doc_id}: sentence indices not contiguous from 0")
        emb = np.array([rows[i]["embedding"] for i in indices], dtype=np.float64)
        aspects = None
        arguments = None
        if all("aspect_probs" in rows[i] for i in indices):
            aspects = np.array([rows[i]["aspect_probs"] for i in indices])
        if all("argument_probs" in rows[i] for i in indices):
            arguments = np.array([rows[i]["argument_probs"] for i in indices])
        docs[doc_id] = AnnotatedDoc.build(doc_id, emb, aspects, arguments)
    return docs

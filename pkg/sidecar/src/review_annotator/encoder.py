"""Deterministic sentence encoders.

The default "heuristic-v1" encoder needs no model download: each token and
each character trigram is hashed to a handful of signed coordinates, the
contributions are summed over the sentence and the result is L2-normalized.
It is not a semantic model, but it is deterministic, order-stable, and has
the same interface a pretrained encoder would expose, which is all the
downstream pipeline contracts require.
"""

from __future__ import annotations

import hashlib

import numpy as np

DIM = 768

_FEATURES_PER_UNIT = 4


class EncoderUnavailable(RuntimeError):
    """Raised when the requested model cannot be loaded."""


def _tokens(sentence: str) -> list[str]:
    return [t for t in sentence.lower().split() if t]


def _char_trigrams(sentence: str) -> list[str]:
    s = " " + sentence.lower() + " "
    return [s[i:i + 3] for i in range(len(s) - 2)]


def _hash_into(unit: str, vec: np.ndarray) -> None:
    digest = hashlib.sha256(unit.encode("utf-8")).digest()
    for k in range(_FEATURES_PER_UNIT):
        idx = int.from_bytes(digest[4 * k:4 * k + 3], "big") % DIM
        sign = 1.0 if digest[4 * k + 3] & 1 else -1.0
        vec[idx] += sign


def embed_sentences(sentences: list[str], model: str = "heuristic-v1") -> np.ndarray:
    """One unit-norm vector of dimension 768 per sentence, order preserved."""
    if not sentences:
        raise ValueError("empty sentence list")
    if model != "heuristic-v1":
        raise EncoderUnavailable(
            f"encoder {model!r} is not available; only heuristic-v1 ships with this tool"
        )
    out = np.zeros((len(sentences), DIM))
    for row, sentence in enumerate(sentences):
        vec = out[row]
        for tok in _tokens(sentence):
            _hash_into("tok:" + tok, vec)
        for tri in _char_trigrams(sentence):
            _hash_into("tri:" + tri, vec)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # blank sentence: fall back to a fixed direction
            _hash_into("tok:<empty>", vec)
            norm = np.linalg.norm(vec)
        vec /= norm
    return out

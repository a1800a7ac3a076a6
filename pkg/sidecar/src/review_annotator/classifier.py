"""Keyword-lexicon type classifiers with softmax outputs.

Category order is fixed by the downstream schema and must not change:
aspects [Summary, Motivation/Impact, Originality, Soundness/Correctness,
Substance, Replicability, Meaningful Comparison, Clarity]; arguments
[Evaluation, Fact, Request, Reference, Quote].
"""

from __future__ import annotations

import math

ASPECTS = (
    "Summary",
    "Motivation/Impact",
    "Originality",
    "Soundness/Correctness",
    "Substance",
    "Replicability",
    "Meaningful Comparison",
    "Clarity",
)
ARGUMENTS = ("Evaluation", "Fact", "Request", "Reference", "Quote")

_ASPECT_LEXICON = {
    "Summary": ("paper", "propose", "proposes", "present", "presents", "study",
                "describes", "introduces"),
    "Motivation/Impact": ("motivation", "important", "impact", "useful",
                          "significance", "relevant", "practical"),
    "Originality": ("novel", "novelty", "new", "original", "contribution", "first"),
    "Soundness/Correctness": ("correct", "incorrect", "proof", "sound", "valid",
                              "error", "flaw", "justify"),
    "Substance": ("experiment", "experiments", "result", "results", "evaluation",
                  "dataset", "analysis", "ablation"),
    "Replicability": ("code", "reproduce", "reproducible", "replicate",
                      "implementation", "hyperparameters", "details"),
    "Meaningful Comparison": ("baseline", "baselines", "compare", "comparison",
                              "related", "prior", "previous"),
    "Clarity": ("clear", "unclear", "writing", "written", "presentation",
                "readable", "confusing", "typo"),
}
_ARGUMENT_LEXICON = {
    "Evaluation": ("good", "bad", "strong", "weak", "interesting", "convincing",
                   "well", "poorly", "impressive"),
    "Fact": ("is", "are", "uses", "shows", "reports", "contains", "based"),
    "Request": ("should", "please", "could", "would", "suggest", "recommend",
                "clarify", "add"),
    "Reference": ("et", "al", "cite", "citation", "reference", "see", "cf"),
    "Quote": ("quote", "states", "says", "according", "wrote"),
}

_SMOOTHING = 0.5
_SCALE = 1.0


def _softmax_counts(tokens: list[str], lexicon: dict, categories: tuple) -> list[float]:
    scores = []
    token_set = tokens
    for cat in categories:
        words = lexicon[cat]
        hits = sum(1 for t in token_set if t in words)
        scores.append(_SMOOTHING + _SCALE * hits)
    z = [math.exp(s - max(scores)) for s in scores]
    total = sum(z)
    return [v / total for v in z]


def classify_types(sentences: list[str]) -> tuple[list[list[float]], list[list[float]]]:
    """Per sentence: an 8-vector over aspects and a 5-vector over arguments,
    each a probability distribution."""
    if not sentences:
        raise ValueError("empty sentence list")
    aspect_rows = []
    argument_rows = []
    for sentence in sentences:
        tokens = [t.strip(".,;:!?()[]'\"") for t in sentence.lower().split()]
        tokens = [t for t in tokens if t]
        aspect_rows.append(_softmax_counts(tokens, _ASPECT_LEXICON, ASPECTS))
        argument_rows.append(_softmax_counts(tokens, _ARGUMENT_LEXICON, ARGUMENTS))
    return aspect_rows, argument_rows

"""End-to-end acceptance checks.

One test per release criterion. Each prints a single [PASS]/[FAIL] line on
stderr (bypassing capture) before asserting, so a full run yields a compact
scoreboard. The experiment-scale tests here run the real benchmark
configurations and take tens of minutes in total.
"""

import json
import sys
import time

import numpy as np
import pytest

from oracles import (
    brute_bh_adjusted,
    brute_bh_reject,
    brute_lexical_coverage,
    brute_lexical_redundancy,
    brute_semantic_coverage,
    brute_semantic_redundancy,
    brute_type_coverage,
    brute_weighted_semantic_redundancy,
    brute_wls,
)
from test_causal import _passthrough_fixture
from test_diversity import RULE_FIXTURES

import slate_lens.cli as cli
from slate_lens.causal import audit_matches, estimate_parametric, propensity_match
from slate_lens.corpus import ReviewerRecord
from slate_lens.diversity import DIMENSIONS, build_profile_vectors
from slate_lens.experiments import (
    _normalized_outcomes,
    lda_recovery,
    null_calibration,
    planted_recovery,
)
from slate_lens.lexical import lexical_coverage_sentences, lexical_redundancy_sentences
from slate_lens.semantic import (
    AnnotatedDoc,
    fallback_annotate,
    semantic_coverage,
    semantic_redundancy,
    type_coverage,
    weighted_semantic_redundancy,
)
from slate_lens.stats import bh_correct, fit_wls
from slate_lens.synth import CorpusGenerator, SynthConfig


@pytest.fixture
def verdict(capfd):
    """Report one [PASS]/[FAIL] line per criterion on the real stderr,
    outside pytest's capture, then assert."""

    def _verdict(name: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f"  ({detail})"
        with capfd.disabled():
            print(line, file=sys.stderr, flush=True)
        assert ok, line

    return _verdict


# --- measure correctness ------------------------------------------------------

def _random_sentences(rng, vocab, max_sentences=8):
    n = int(rng.integers(1, max_sentences + 1))
    return [
        " ".join(rng.choice(vocab, size=int(rng.integers(1, 7))))
        for _ in range(n)
    ]


def _random_annotated(rng, doc_id, dim, max_sentences=8):
    m = int(rng.integers(1, max_sentences + 1))
    emb = rng.normal(size=(m, dim))
    aspects = rng.uniform(0.01, 1.0, size=(m, 8))
    aspects /= aspects.sum(axis=1, keepdims=True)
    arguments = rng.uniform(0.01, 1.0, size=(m, 5))
    arguments /= arguments.sum(axis=1, keepdims=True)
    return AnnotatedDoc.build(doc_id, emb, aspects, arguments), emb, aspects, arguments


def test_measure_oracles_on_random_instances(verdict):
    """500 random small instances agree with brute-force reference
    implementations: exactly for the lexical and type measures, within 1e-9
    for the semantic ones."""
    t0 = time.time()
    rng = np.random.default_rng(20260823)
    vocab = np.array([f"w{i}" for i in range(20)])
    worst_sem = 0.0
    for _ in range(500):
        r1 = _random_sentences(rng, vocab)
        r2 = _random_sentences(rng, vocab)
        ab = _random_sentences(rng, vocab)
        assert lexical_coverage_sentences(r1, r2, ab) == brute_lexical_coverage(r1, r2, ab)
        assert lexical_redundancy_sentences(r1, r2) == brute_lexical_redundancy(r1, r2)

        dim = int(rng.integers(2, 5))
        d1, e1, asp1, arg1 = _random_annotated(rng, "review:a", dim)
        d2, e2, asp2, arg2 = _random_annotated(rng, "review:b", dim)
        da, ea, _, _ = _random_annotated(rng, "abstract:s", dim)
        worst_sem = max(
            worst_sem,
            abs(semantic_coverage(d1, d2, da) - brute_semantic_coverage(e1, e2, ea)),
            abs(semantic_redundancy(d1, d2) - brute_semantic_redundancy(e1, e2)),
            abs(weighted_semantic_redundancy(d1, d2, "aspect")
                - brute_weighted_semantic_redundancy(e1, asp1, e2, asp2)),
            abs(weighted_semantic_redundancy(d1, d2, "argument")
                - brute_weighted_semantic_redundancy(e1, arg1, e2, arg2)),
        )
        assert type_coverage(d1, d2, "aspect") == brute_type_coverage(asp1, asp2, 8)
        assert type_coverage(d1, d2, "argument") == brute_type_coverage(arg1, arg2, 5)
    elapsed = time.time() - t0
    ok = worst_sem <= 1e-9 and elapsed < 60
    verdict("measure oracles: 500 random instances",
             ok, f"max semantic deviation {worst_sem:.2e}, {elapsed:.1f}s")


# --- diversity rule fixtures --------------------------------------------------

def test_diversity_rule_fixtures_all_pass(verdict):
    failed = [desc for desc, fn, expected in RULE_FIXTURES if fn() != expected]

    def _rec(h):
        return ReviewerRecord(
            reviewer_id="r", organization_ids=None, region_id=None, h_index=h,
            coauthor_ids=None, publication_abstracts=None,
        )

    senior = build_profile_vectors(_rec(30), None, 0, h_index_threshold=22)
    at = build_profile_vectors(_rec(22), None, 0, h_index_threshold=22)
    if not (senior.seniority[1] == 1.0 and at.seniority[0] == 1.0):
        failed.append("h-index 30 above threshold 22 is senior; 22 is not")
    verdict("diversity rule fixtures", not failed, f"{len(RULE_FIXTURES) + 1} rules")


# --- estimator exactness ------------------------------------------------------

def test_estimator_exactness(verdict):
    """100 random weighted least-squares systems match the normal-equations
    oracle within 1e-8; a zero-covariate design passes a constant
    diverse-vs-non-diverse gap through exactly."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(12, 60))
        k = int(rng.integers(1, 6))
        X = rng.normal(size=(n, k))
        y = rng.normal(size=n)
        w = rng.uniform(0.2, 3.0, size=n)
        fit = fit_wls(X, y, w=w)
        beta, se = brute_wls(X, y, w=w)
        worst = max(
            worst,
            float(np.max(np.abs(fit.coefficients - beta))),
            float(np.max(np.abs(fit.standard_errors - se))),
        )

    c = 0.0375
    triples, outcomes, treatments, profiles, expertise = _passthrough_fixture(c)
    est, _ = estimate_parametric(
        triples, outcomes, treatments, profiles, expertise, "semantic_redundancy"
    )
    passthrough_err = abs(est.gamma - c)
    elapsed = time.time() - t0
    ok = worst <= 1e-8 and passthrough_err <= 1e-12 and elapsed < 60
    verdict("estimator exactness: 100 systems + pass-through",
             ok, f"max dev {worst:.2e}, pass-through err {passthrough_err:.2e}")


# --- planted-effect recovery --------------------------------------------------

def test_planted_effect_recovery(verdict):
    """Planted gamma* = -0.05 on (coauthorship x semantic redundancy) with
    active confounders: parametric within +-0.01 and nonparametric sign
    agreement in >= 95% of 20 seeds, under 10 minutes."""
    r = planted_recovery()
    ok = (r["hit_rate"] >= 0.95 and r["total_audit_violations"] == 0
          and r["runtime_s"] < 600)
    verdict("planted-effect recovery", ok,
             f"hit rate {r['hit_rate']:.2f}, max parametric error "
             f"{r['max_parametric_error']:.4f}, {r['runtime_s']:.0f}s")


# --- null calibration ---------------------------------------------------------

def test_null_calibration(verdict):
    """No planted effects, confounders active, 500 seeds: per-cell rejection
    rate at adjusted alpha = 0.01 stays at or below 0.02, and permutation
    p-values are KS-uniform at Bonferroni-adjusted alpha = 0.01, under 20
    minutes."""
    r = null_calibration()
    ok = (r["max_rejection_rate"] <= 0.02
          and r["min_ks_p"] >= r["ks_alpha_bonferroni"]
          and r["runtime_s"] < 1200)
    verdict("null calibration", ok,
             f"max rejection {r['max_rejection_rate']:.3f}, min KS p "
             f"{r['min_ks_p']:.4f} vs floor {r['ks_alpha_bonferroni']:.5f}, "
             f"{r['runtime_s']:.0f}s")


# --- matching audit -----------------------------------------------------------

def test_matching_audit_zero_violations(verdict):
    """Every matched pair respects the strict 0.1 propensity caliper and
    same-submission blocking."""
    violations = 0
    pairs = 0
    for seed in range(5):
        cfg = SynthConfig(seed=seed, n_submissions=300, n_reviewers=60)
        b = CorpusGenerator(cfg).generate()
        for dim in DIMENSIONS:
            matches, _ = propensity_match(
                b.corpus, b.treatments, b.profiles, b.corpus.expertise, dim,
                n_topics=cfg.n_topics,
            )
            pairs += len(matches)
            violations += len(audit_matches(matches, b.corpus, 0.1))
    verdict("matching audit", violations == 0,
             f"{violations} violations over {pairs} matched pairs")


# --- multiple-testing correction ----------------------------------------------

def test_bh_oracle_and_monotonicity(verdict):
    """1000 random p-vectors match the step-up oracle, and adjusted values
    are monotone along the sorted raw p-values."""
    rng = np.random.default_rng(99)
    for _ in range(1000):
        m = int(rng.integers(1, 40))
        p = rng.uniform(size=m)
        if rng.uniform() < 0.3:  # exercise ties and extremes
            p = np.round(p, 1)
        q = float(rng.uniform(0.01, 0.3))
        rejected, adjusted = bh_correct(p, q)
        assert list(rejected) == brute_bh_reject(list(p), q)
        assert np.allclose(adjusted, brute_bh_adjusted(list(p)), atol=1e-12)
        order = np.argsort(p, kind="stable")
        assert np.all(np.diff(adjusted[order]) >= -1e-15)
    verdict("multiple-testing correction oracle", True, "1000 vectors")


# --- topic-model recovery -----------------------------------------------------

def test_topic_model_recovery(verdict):
    """3-topic 500-document corpora: mean total-variation distance to the
    generating topics below 0.15 after optimal matching, and the coherence
    criterion picks K = 3 from {2, 3, 5} in >= 80% of 20 seeds, under 5
    minutes."""
    r = lda_recovery()
    ok = r["mean_tv"] < 0.15 and r["k_hit_rate"] >= 0.8 and r["runtime_s"] < 300
    verdict("topic-model recovery", ok,
             f"mean TV {r['mean_tv']:.3f}, K hit rate {r['k_hit_rate']:.2f}, "
             f"{r['runtime_s']:.0f}s")


# --- determinism --------------------------------------------------------------

def test_effects_deterministic_across_parallelism(tmp_path, verdict):
    data = tmp_path / "data"
    assert cli.main([
        "synth", "--out", str(data), "--seed", "5", "--submissions", "60",
        "--reviewers", "30", "--plant", "organization:semantic_redundancy:-0.08",
    ]) == 0
    outputs = []
    out = tmp_path / "out"
    for workers in ("1", "8"):
        assert cli.main([
            "run", "--data", str(data), "--out", str(out), "--seed", "11",
            "--permutations", "200", "--parallelism", workers,
        ]) == 0
        outputs.append((out / "effects.json").read_bytes())
    ok = outputs[0] == outputs[1]
    verdict("deterministic effects at parallelism 1 vs 8", ok,
             f"{len(outputs[0])} bytes")


# --- annotation contract without the sidecar ----------------------------------

def test_annotation_contract_via_fallback(verdict):
    """The built-in fallback annotator satisfies the external annotation
    contract (768-dim unit-norm embeddings, probability vectors, order
    preserved, idempotent) and nothing in this suite imports the sidecar."""
    sentences = [
        "The method is evaluated on two datasets.",
        "Please compare against stronger baselines.",
        "The proof of the main theorem is sound.",
    ]
    a = fallback_annotate("review:x", sentences)
    b = fallback_annotate("review:x", sentences)
    norms = np.linalg.norm(a.embeddings, axis=1)
    rev = fallback_annotate("review:x", sentences[::-1])
    ok = (
        a.dim == 768
        and bool(np.all(np.abs(norms - 1.0) <= 1e-4))
        and a.aspect_probs.shape == (3, 8)
        and a.argument_probs.shape == (3, 5)
        and bool(np.all(np.abs(a.aspect_probs.sum(axis=1) - 1.0) <= 1e-6))
        and bool(np.all(np.abs(a.argument_probs.sum(axis=1) - 1.0) <= 1e-6))
        and bool(np.array_equal(a.embeddings, b.embeddings))
        and bool(np.allclose(rev.embeddings, a.embeddings[::-1]))
        and "review_annotator" not in sys.modules
    )
    verdict("annotation contract via fallback annotator", ok)

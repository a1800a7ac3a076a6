import dataclasses

import numpy as np
import pytest

from slate_lens.causal import (
    CausalError,
    SlateTriple,
    audit_matches,
    build_triples,
    estimate_nonparametric,
    estimate_parametric,
    propensity_match,
    quality_correlation_check,
    run_effect_matrix,
)
from slate_lens.diversity import DIMENSIONS, ProfileVectors, SlatePairTreatment


def _pair_key(sid, r1, r2):
    a, b = sorted((r1, r2))
    return (sid, a, b)


def _passthrough_fixture(c, n=40):
    """Triples with no usable covariates and a constant diverse-vs-nondiverse
    outcome gap of exactly c."""
    triples, outcomes, treatments, profiles, expertise = [], {}, {}, {}, {}
    for i in range(n):
        sid = f"s{i:03d}"
        anchor, div, non = f"a{i}", f"d{i}", f"n{i}"
        for rid in (anchor, div, non):
            profiles[rid] = ProfileVectors(
                reviewer_id=rid, organization=None, region=None,
                seniority=None, coauthors=None, topics=None,
            )
            expertise[(rid, sid)] = 0.5
        base = 0.4 + 0.01 * (i % 7)
        for partner, delta, y in ((div, 1, base + c), (non, -1, base)):
            key = _pair_key(sid, anchor, partner)
            deltas = {d: 0 for d in DIMENSIONS}
            deltas["organization"] = delta
            treatments[key] = SlatePairTreatment(
                reviewer_a=key[1], reviewer_b=key[2], deltas=deltas,
                topical_similarity=None, coauthor_distance=None,
            )
            outcomes[key] = {"semantic_redundancy": y}
        triples.append(SlateTriple(
            submission_id=sid, anchor=anchor, diverse_partner=div,
            nondiverse_partner=non, dimension="organization",
        ))
    return triples, outcomes, treatments, profiles, expertise


def test_passthrough_recovers_constant_exactly():
    c = 0.0375
    triples, outcomes, treatments, profiles, expertise = _passthrough_fixture(c)
    est, _ = estimate_parametric(
        triples, outcomes, treatments, profiles, expertise, "semantic_redundancy"
    )
    assert est.gamma == pytest.approx(c, abs=1e-12)
    assert est.standard_error == pytest.approx(0.0, abs=1e-9)


def test_arm_swap_flips_gamma_sign():
    triples, outcomes, treatments, profiles, expertise = _passthrough_fixture(0.02)
    # perturb outcomes so the fit is not degenerate
    rng = np.random.default_rng(0)
    for key in outcomes:
        outcomes[key]["semantic_redundancy"] += 0.05 * rng.normal()
    est, _ = estimate_parametric(
        triples, outcomes, treatments, profiles, expertise, "semantic_redundancy"
    )
    swapped = [
        dataclasses.replace(
            t, diverse_partner=t.nondiverse_partner, nondiverse_partner=t.diverse_partner
        )
        for t in triples
    ]
    est_swapped, _ = estimate_parametric(
        swapped, outcomes, treatments, profiles, expertise, "semantic_redundancy"
    )
    assert est_swapped.gamma == pytest.approx(-est.gamma, abs=1e-12)


def test_outcome_translation_invariance():
    triples, outcomes, treatments, profiles, expertise = _passthrough_fixture(0.02)
    rng = np.random.default_rng(1)
    for key in outcomes:
        outcomes[key]["semantic_redundancy"] += 0.05 * rng.normal()
    est, _ = estimate_parametric(
        triples, outcomes, treatments, profiles, expertise, "semantic_redundancy"
    )
    shifted = {
        key: {"semantic_redundancy": v["semantic_redundancy"] + 0.37}
        for key, v in outcomes.items()
    }
    est_shifted, _ = estimate_parametric(
        triples, shifted, treatments, profiles, expertise, "semantic_redundancy"
    )
    assert est_shifted.gamma == pytest.approx(est.gamma, abs=1e-12)


def test_min_triples_floor_enforced():
    triples, outcomes, treatments, profiles, expertise = _passthrough_fixture(0.02, n=10)
    with pytest.raises(CausalError):
        estimate_parametric(
            triples, outcomes, treatments, profiles, expertise, "semantic_redundancy"
        )


def test_build_triples_satisfies_contrast(small_bundle):
    corpus = small_bundle.corpus
    treatments = small_bundle.treatments
    for dim in DIMENSIONS:
        triples = build_triples(corpus, treatments, dim)
        seen = set()
        for t in triples:
            assert t.submission_id not in seen  # one per submission
            seen.add(t.submission_id)
            key_d = _pair_key(t.submission_id, t.anchor, t.diverse_partner)
            key_n = _pair_key(t.submission_id, t.anchor, t.nondiverse_partner)
            assert treatments[key_d].deltas[dim] == 1
            assert treatments[key_n].deltas[dim] == -1


def test_build_triples_all_policy_is_superset(small_bundle):
    corpus = small_bundle.corpus
    treatments = small_bundle.treatments
    one = build_triples(corpus, treatments, "seniority")
    every = build_triples(corpus, treatments, "seniority", policy="all")
    assert len(every) >= len(one)
    assert set(one) <= set(every)


def test_matching_respects_caliper_and_slates(small_bundle):
    corpus = small_bundle.corpus
    matches, _ = propensity_match(
        corpus, small_bundle.treatments, small_bundle.profiles,
        corpus.expertise, "seniority", n_topics=small_bundle.config.n_topics,
    )
    assert matches
    assert audit_matches(matches, corpus, 0.1) == []
    used = set()
    for m in matches:
        assert abs(m.propensity_diverse - m.propensity_nondiverse) < 0.1
        slate = corpus.submissions[m.submission_id].assigned_reviewers
        assert {m.anchor, m.diverse_partner, m.nondiverse_partner} <= set(slate)
        # 1:1 within (submission, anchor): no pair reused across matches
        for partner in (m.diverse_partner, m.nondiverse_partner):
            token = (m.submission_id, m.anchor, partner)
            assert token not in used
            used.add(token)


def test_audit_flags_violations(small_bundle):
    corpus = small_bundle.corpus
    matches, _ = propensity_match(
        corpus, small_bundle.treatments, small_bundle.profiles,
        corpus.expertise, "seniority", n_topics=small_bundle.config.n_topics,
    )
    bad = [dataclasses.replace(matches[0], propensity_diverse=0.99,
                               propensity_nondiverse=0.01)]
    assert audit_matches(bad, corpus, 0.1)


def test_nonparametric_seed_determinism(small_bundle):
    from slate_lens.experiments import _normalized_outcomes

    outcomes = _normalized_outcomes(small_bundle)
    matches, _ = propensity_match(
        small_bundle.corpus, small_bundle.treatments, small_bundle.profiles,
        small_bundle.corpus.expertise, "seniority",
        n_topics=small_bundle.config.n_topics,
    )
    a = estimate_nonparametric(matches, outcomes, "seniority",
                               "semantic_redundancy", permutations=500, seed=9)
    b = estimate_nonparametric(matches, outcomes, "seniority",
                               "semantic_redundancy", permutations=500, seed=9)
    assert (a.gamma, a.p_value) == (b.gamma, b.p_value)


def test_effect_matrix_parallelism_invariant(small_bundle):
    from slate_lens.experiments import _normalized_outcomes

    outcomes = _normalized_outcomes(small_bundle)
    kwargs = dict(
        n_topics=small_bundle.config.n_topics,
        dimensions=("seniority", "topical"),
        measures=("semantic_redundancy", "lexical_coverage"),
        permutations=300, seed=2,
    )
    corpus = small_bundle.corpus
    seq = run_effect_matrix(
        corpus, small_bundle.treatments, small_bundle.profiles,
        corpus.expertise, outcomes, parallelism=1, **kwargs,
    )
    par = run_effect_matrix(
        corpus, small_bundle.treatments, small_bundle.profiles,
        corpus.expertise, outcomes, parallelism=4, **kwargs,
    )
    assert seq.estimates == par.estimates
    assert seq.failures == par.failures


def test_quality_correlation_check_runs(small_bundle):
    out = quality_correlation_check(small_bundle.corpus, small_bundle.treatments)
    assert set(out) <= set(DIMENSIONS)
    for r, p in out.values():
        assert -1.0 <= r <= 1.0 and 0.0 <= p <= 1.0

import json

import numpy as np
import pytest

from slate_lens.outcomes import ALL_OUTCOMES, compute_pair_outcomes
from slate_lens.synth import (
    CorpusGenerator,
    SynthConfig,
    SynthError,
    sample_topic_documents,
    sample_topic_model,
    write_corpus,
)

# measures whose raw values the encoder controls exactly per pair
EXACT_MEASURES = (
    "semantic_redundancy",
    "weighted_semantic_redundancy_argument",
    "weighted_semantic_redundancy_aspect",
)


def test_config_validation():
    with pytest.raises(SynthError):
        SynthConfig(n_submissions=0).validate()
    with pytest.raises(SynthError):
        SynthConfig(reviewers_per_paper=(0.5, 0.2, 0.2)).validate()
    with pytest.raises(SynthError):
        SynthConfig(noise_sd=-0.1).validate()


def test_plant_rejects_unknown_cell():
    gen = CorpusGenerator(SynthConfig(seed=0, n_submissions=10, n_reviewers=10))
    with pytest.raises(SynthError):
        gen.plant_effect("nope", "semantic_redundancy", 0.1)
    with pytest.raises(SynthError):
        gen.plant_effect("topical", "nope", 0.1)


def test_analytic_raw_matches_measured(mixed_bundle):
    """The generator's closed-form raw values must agree with the real
    measure implementations within the stated per-measure tolerances."""
    measured = compute_pair_outcomes(mixed_bundle.corpus, mixed_bundle.annotations)
    gt = mixed_bundle.ground_truth
    tol = gt.encoding_tolerance
    assert set(measured) == set(gt.analytic_raw)
    worst = {m: 0.0 for m in ALL_OUTCOMES}
    for key, vals in measured.items():
        for m in ALL_OUTCOMES:
            err = abs(vals[m] - gt.analytic_raw[key][m])
            worst[m] = max(worst[m], err)
    for m in ALL_OUTCOMES:
        assert worst[m] <= tol[m], f"{m}: worst error {worst[m]} > {tol[m]}"
    for m in EXACT_MEASURES:
        assert worst[m] <= 1e-9


def test_generation_deterministic():
    cfg = SynthConfig(seed=21, n_submissions=20, n_reviewers=15)
    a = CorpusGenerator(cfg).generate()
    b = CorpusGenerator(cfg).generate()
    assert a.raw_records == b.raw_records
    assert a.ground_truth.to_json() == b.ground_truth.to_json()


def test_zero_plant_leaves_stream_unchanged():
    """Planting a zero-magnitude effect must not perturb any random draw,
    so the emitted corpus is byte-identical to the unplanted one."""
    cfg = SynthConfig(seed=5, n_submissions=20, n_reviewers=15)
    plain = CorpusGenerator(cfg).generate()
    gen = CorpusGenerator(cfg)
    gen.plant_effect("coauthorship", "semantic_redundancy", 0.0)
    planted = gen.generate()
    assert plain.raw_records == planted.raw_records


def test_planted_shifts_only_target_measure():
    cfg = SynthConfig(seed=5, n_submissions=120, n_reviewers=40, noise_sd=0.02)
    plain = CorpusGenerator(cfg).generate()
    gen = CorpusGenerator(cfg)
    gen.plant_effect("coauthorship", "semantic_redundancy", -0.2)
    planted = gen.generate()

    def contrast(bundle, measure):
        gt = bundle.ground_truth
        lo, hi = gt.calibration_bounds[measure]
        diverse, nondiverse = [], []
        for key, t in bundle.treatments.items():
            delta = t.deltas["coauthorship"]
            y = (gt.analytic_raw[key][measure] - lo) / (hi - lo)
            if delta == 1:
                diverse.append(y)
            elif delta == -1:
                nondiverse.append(y)
        return np.mean(diverse) - np.mean(nondiverse)

    shift = contrast(planted, "semantic_redundancy") - contrast(plain, "semantic_redundancy")
    assert shift == pytest.approx(-0.2, abs=0.03)
    other = contrast(planted, "lexical_redundancy") - contrast(plain, "lexical_redundancy")
    assert abs(other) < 0.03


def test_ground_truth_roundtrip(tmp_path, small_bundle):
    write_corpus(small_bundle, tmp_path)
    obj = json.loads((tmp_path / "ground_truth.json").read_text())
    assert obj["schema"] == "slate-lens/ground-truth/v1"
    assert obj["seed"] == small_bundle.config.seed
    key = sorted(obj["analytic_raw"])[0]
    assert set(obj["analytic_raw"][key]) == set(ALL_OUTCOMES)


def test_expertise_emitted_for_all_assignments(small_bundle):
    corpus = small_bundle.corpus
    for sid, sub in corpus.submissions.items():
        for rid in sub.assigned_reviewers:
            e = corpus.expertise[(rid, sid)]
            assert e is not None and 0.0 <= e <= 1.0


def test_sample_topic_documents_match_model():
    phi = sample_topic_model(3, 4, 30)
    assert phi.shape == (4, 30)
    assert np.allclose(phi.sum(axis=1), 1.0)
    docs, thetas = sample_topic_documents(phi, 10, 25, 4)
    assert len(docs) == 10 and thetas.shape == (10, 4)
    assert all(len(d) == 25 for d in docs)

"""Slate analytics for peer review: coverage/redundancy measures of review
slates and causal estimation of reviewer-diversity effects on them."""

from .calibration import CalibrationError, CalibrationTable, fit_calibration, normalize_outcome
from .causal import (
    CausalError,
    EffectEstimate,
    EffectMatrixResult,
    MatchedPair,
    SlateTriple,
    audit_matches,
    build_triples,
    estimate_nonparametric,
    estimate_parametric,
    propensity_match,
    run_effect_matrix,
)
from .corpus import (
    CorpusError,
    CorpusPaths,
    ReviewCorpus,
    ReviewDoc,
    ReviewerRecord,
    Submission,
    abstract_doc_id,
    load_corpus,
    review_doc_id,
)
from .diversity import (
    DIMENSIONS,
    DiversityError,
    ProfileVectors,
    SlatePairTreatment,
    Thresholds,
    build_all_profiles,
    coauthor_distance,
    compute_treatments,
    pair_diversity,
    topical_similarity,
)
from .lexical import (
    NGRAM_ORDERS,
    extract_ngrams,
    lexical_coverage_sentences,
    lexical_redundancy_sentences,
    tokenize,
)
from .outcomes import (
    ALL_OUTCOMES,
    CALIBRATED_OUTCOMES,
    COVERAGE_OUTCOMES,
    REDUNDANCY_OUTCOMES,
    UNIT_OUTCOMES,
    compute_pair_outcomes,
    raw_pair_measures,
)
from .semantic import (
    AnnotatedDoc,
    AnnotationError,
    fallback_annotate,
    load_annotations,
    semantic_coverage,
    semantic_redundancy,
    type_coverage,
    weighted_semantic_redundancy,
    write_annotations,
)
from .stats import (
    RankDeficiencyError,
    RegressionFit,
    SeparationError,
    StatsError,
    bh_correct,
    derive_seed,
    fit_logistic,
    fit_wls,
    permutation_test_paired,
)
from .synth import CorpusGenerator, GroundTruth, SynthConfig, SynthError, write_corpus
from .topics import TopicModel, TopicModelError, fit_lda, infer_reviewer_topics, select_topic_count

__version__ = "0.1.0"

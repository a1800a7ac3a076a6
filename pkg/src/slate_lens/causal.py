"""Causal effect estimation of slate diversity on review outcomes.

Two estimators over anchored within-submission triples: a parametric
differencing regression whose intercept is the effect, and a non-parametric
propensity-matched mean difference with a sign-flip permutation test.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import ReviewCorpus
from .diversity import (
    DIMENSIONS,
    N_REGIONS,
    ProfileVectors,
    SlatePairTreatment,
)
from .outcomes import ALL_OUTCOMES
from .stats import (
    RankDeficiencyError,
    RegressionFit,
    StatsError,
    bh_correct,
    derive_seed,
    fit_logistic,
    fit_wls,
    pearson_r,
    permutation_test_paired,
)

DEFAULT_CALIPER = 0.1
DEFAULT_PERMUTATIONS = 10000
DEFAULT_MIN_TRIPLES = 30
DEFAULT_LOGISTIC_L2 = 1e-4
SIGNIFICANCE_THRESHOLD = 0.01


class CausalError(ValueError):
    pass


@dataclass(frozen=True)
class SlateTriple:
    submission_id: str
    anchor: str  # r1, shared by both arms
    diverse_partner: str  # r2, delta_{d*}(r1, r2) = +1
    nondiverse_partner: str  # r3, delta_{d*}(r1, r3) = -1
    dimension: str


@dataclass(frozen=True)
class MatchedPair:
    submission_id: str
    anchor: str
    diverse_partner: str
    nondiverse_partner: str
    propensity_diverse: float
    propensity_nondiverse: float


@dataclass
class EffectEstimate:
    dimension: str
    outcome: str
    method: str  # parametric | nonparametric
    gamma: float
    standard_error: float
    p_value: float
    n: int
    p_adjusted: Optional[float] = None
    significant: Optional[bool] = None
    n_dropped: int = 0

    def __post_init__(self):
        if self.n <= 0:
            raise CausalError("effect estimate needs n > 0")
        if not 0.0 <= self.p_value <= 1.0:
            raise CausalError("p-value outside [0,1]")


@dataclass
class CellFailure:
    dimension: str
    outcome: str
    method: str
    error: str


TreatmentMap = dict[tuple[str, str, str], SlatePairTreatment]
OutcomeMap = dict[tuple[str, str, str], dict[str, float]]


def _pair_delta(treatments: TreatmentMap, sid: str, r1: str, r2: str, dim: str) -> int:
    a, b = sorted((r1, r2))
    return treatments[(sid, a, b)].deltas[dim]


def _pair_outcome(outcomes: OutcomeMap, sid: str, r1: str, r2: str, measure: str) -> float:
    a, b = sorted((r1, r2))
    return outcomes[(sid, a, b)][measure]


def build_triples(
    corpus: ReviewCorpus,
    treatments: TreatmentMap,
    dimension: str,
    policy: str = "one-per-submission",
) -> list[SlateTriple]:
    """Anchored triples (r1; r2 diverse; r3 non-diverse) on one dimension.

    Pairs with delta 0 on the target dimension qualify as neither arm. The
    default policy keeps the lexicographically smallest (r1, r2, r3) per
    submission; "all" keeps every triple (observations are then dependent).
    """
    if dimension not in DIMENSIONS:
        raise CausalError(f"unknown dimension {dimension!r}")
    if policy not in ("one-per-submission", "all"):
        raise CausalError(f"unknown triple policy {policy!r}")
    out: list[SlateTriple] = []
    for sid in sorted(corpus.submissions):
        reviewers = sorted(corpus.submissions[sid].assigned_reviewers)
        found: list[tuple[str, str, str]] = []
        for r1 in reviewers:
            for r2 in reviewers:
                if r2 == r1 or _pair_delta(treatments, sid, r1, r2, dimension) != 1:
                    continue
                for r3 in reviewers:
                    if r3 in (r1, r2):
                        continue
                    if _pair_delta(treatments, sid, r1, r3, dimension) == -1:
                        found.append((r1, r2, r3))
        found.sort()
        if policy == "one-per-submission":
            found = found[:1]
        out.extend(
            SlateTriple(sid, r1, r2, r3, dimension) for r1, r2, r3 in found
        )
    return out


def _profile_feature_block(
    p: Optional[ProfileVectors], n_orgs: int, n_topics: int
) -> np.ndarray:
    """Flat covariate encoding of one reviewer's profile.

    Reference categories are dropped from the one-hot blocks (first
    organization, first region, non-senior, first topic) so difference
    designs stay full rank. Missing fields encode as zeros, mirroring the
    delta = 0 missing-data rule. The coauthor set is deliberately absent.
    """
    org = np.zeros(max(n_orgs - 1, 0))
    if p is not None and p.organization is not None:
        org = p.organization[1:]
    region = np.zeros(N_REGIONS - 1)
    if p is not None and p.region is not None:
        region = p.region[1:]
    senior = 0.0
    if p is not None and p.seniority is not None:
        senior = float(p.seniority[1])
    topics = np.zeros(max(n_topics - 1, 0))
    if p is not None and p.topics is not None:
        topics = p.topics[1:]
    return np.concatenate([org, region, [senior], topics])


def profile_feature_names(corpus: ReviewCorpus, n_topics: int) -> list[str]:
    orgs = sorted(corpus.organization_index, key=corpus.organization_index.get)
    names = [f"org[{o}]" for o in orgs[1:]]
    names += [f"region[{i}]" for i in range(1, N_REGIONS)]
    names += ["senior"]
    names += [f"topic[{k}]" for k in range(1, n_topics)]
    return names


def _triple_rows(
    triples: Sequence[SlateTriple],
    outcomes: OutcomeMap,
    treatments: TreatmentMap,
    profiles: dict[str, ProfileVectors],
    expertise: dict[tuple[str, str], Optional[float]],
    measure: str,
    n_orgs: int,
    n_topics: int,
):
    """Difference rows for the within-submission regression. Anchor covariates cancel by
    construction and never appear. Triples missing partner expertise drop."""
    ys, rows = [], []
    n_dropped = 0
    for t in triples:
        e2 = expertise.get((t.diverse_partner, t.submission_id))
        e3 = expertise.get((t.nondiverse_partner, t.submission_id))
        if e2 is None or e3 is None:
            n_dropped += 1
            continue
        y = _pair_outcome(outcomes, t.submission_id, t.anchor, t.diverse_partner, measure) - \
            _pair_outcome(outcomes, t.submission_id, t.anchor, t.nondiverse_partner, measure)
        delta_diffs = [
            float(
                _pair_delta(treatments, t.submission_id, t.anchor, t.diverse_partner, d)
                - _pair_delta(treatments, t.submission_id, t.anchor, t.nondiverse_partner, d)
            )
            for d in DIMENSIONS
            if d != t.dimension
        ]
        prof_diff = _profile_feature_block(profiles.get(t.diverse_partner), n_orgs, n_topics) - \
            _profile_feature_block(profiles.get(t.nondiverse_partner), n_orgs, n_topics)
        rows.append(np.concatenate([[1.0], delta_diffs, prof_diff, [e2 - e3]]))
        ys.append(y)
    return np.array(rows), np.array(ys), n_dropped


def estimate_parametric(
    triples: Sequence[SlateTriple],
    outcomes: OutcomeMap,
    treatments: TreatmentMap,
    profiles: dict[str, ProfileVectors],
    expertise: dict[tuple[str, str], Optional[float]],
    measure: str,
    corpus: Optional[ReviewCorpus] = None,
    n_topics: int = 0,
    min_triples: int = DEFAULT_MIN_TRIPLES,
    weights: Optional[np.ndarray] = None,
) -> tuple[EffectEstimate, RegressionFit]:
    """Differencing regression over anchored triples; the intercept is the
    effect of the target dimension (its +1 vs -1 contrast is the constant)."""
    if not triples:
        raise CausalError("no triples supplied")
    dims = {t.dimension for t in triples}
    if len(dims) != 1:
        raise CausalError(f"triples span multiple dimensions {sorted(dims)}")
    dimension = dims.pop()
    if measure not in ALL_OUTCOMES:
        raise CausalError(f"unknown outcome measure {measure!r}")
    n_orgs = len(corpus.organization_index) if corpus is not None else 0
    X, y, n_dropped = _triple_rows(
        triples, outcomes, treatments, profiles, expertise, measure, n_orgs, n_topics
    )
    if len(y) < min_triples:
        raise CausalError(
            f"{len(y)} usable triples after {n_dropped} expertise drops; floor is {min_triples}"
        )
    names = ["gamma"]
    names += [f"delta_diff[{d}]" for d in DIMENSIONS if d != dimension]
    if corpus is not None:
        names += [f"{nm}_diff" for nm in profile_feature_names(corpus, n_topics)]
    else:
        names += [f"profile_diff[{j}]" for j in range(X.shape[1] - len(names) - 1)]
    names += ["expertise_diff"]

    # prune structurally empty covariate columns; keep the intercept
    keep = [0] + [j for j in range(1, X.shape[1]) if np.any(X[:, j] != 0.0)]
    while True:
        kept_names = [names[j] for j in keep]
        try:
            fit = fit_wls(X[:, keep], y, w=weights, column_names=kept_names)
            break
        except RankDeficiencyError as e:
            # collinear covariates carry no extra information; drop them and
            # refit, but never sacrifice the effect column itself
            drop = {nm for nm in e.columns if nm != "gamma"}
            if not drop:
                raise
            keep = [j for j in keep if names[j] not in drop]
    est = EffectEstimate(
        dimension=dimension,
        outcome=measure,
        method="parametric",
        gamma=float(fit.coefficients[0]),
        standard_error=float(fit.standard_errors[0]),
        p_value=float(fit.p_values[0]),
        n=len(y),
        n_dropped=n_dropped,
    )
    return est, fit


def _arm_features(
    sid: str,
    anchor: str,
    partner: str,
    dimension: str,
    treatments: TreatmentMap,
    profiles: dict[str, ProfileVectors],
    expertise: dict[tuple[str, str], Optional[float]],
    n_orgs: int,
    n_topics: int,
) -> Optional[np.ndarray]:
    e = expertise.get((partner, sid))
    if e is None:
        return None
    prof = _profile_feature_block(profiles.get(partner), n_orgs, n_topics)
    delta_others = [
        float(_pair_delta(treatments, sid, anchor, partner, d))
        for d in DIMENSIONS
        if d != dimension
    ]
    return np.concatenate([[1.0], prof, [e], delta_others])


def propensity_match(
    corpus: ReviewCorpus,
    treatments: TreatmentMap,
    profiles: dict[str, ProfileVectors],
    expertise: dict[tuple[str, str], Optional[float]],
    dimension: str,
    n_topics: int = 0,
    caliper: float = DEFAULT_CALIPER,
    l2: float = DEFAULT_LOGISTIC_L2,
) -> tuple[list[MatchedPair], RegressionFit]:
    """Propensity-matched (diverse, non-diverse) arm pairs sharing an anchor.

    The propensity model scores each candidate pair from the partner's
    covariates; matching is 1:1 greedy by ascending score gap within each
    (submission, anchor), gaps at or past the caliper discarded.
    """
    if dimension not in DIMENSIONS:
        raise CausalError(f"unknown dimension {dimension!r}")
    n_orgs = len(corpus.organization_index)
    arms = []  # (sid, anchor, partner, label)
    feats = []
    for sid in sorted(corpus.submissions):
        reviewers = sorted(corpus.submissions[sid].assigned_reviewers)
        for anchor in reviewers:
            for partner in reviewers:
                if partner == anchor:
                    continue
                delta = _pair_delta(treatments, sid, anchor, partner, dimension)
                if delta == 0:
                    continue
                x = _arm_features(
                    sid, anchor, partner, dimension, treatments, profiles,
                    expertise, n_orgs, n_topics,
                )
                if x is None:
                    continue
                arms.append((sid, anchor, partner, 1 if delta == 1 else 0))
                feats.append(x)
    if not arms:
        raise CausalError("no candidate arms with usable covariates")
    labels = np.array([a[3] for a in arms], dtype=np.float64)
    if labels.min() == labels.max():
        raise CausalError("single-class treatment: both arm types required")
    X = np.array(feats)
    keep = [j for j in range(X.shape[1]) if np.any(X[:, j] != X[0, j]) or j == 0]
    fit = fit_logistic(X[:, keep], labels, l2=l2)
    scores = fit.probabilities

    by_slot: dict[tuple[str, str], dict[int, list[tuple[str, float]]]] = {}
    for (sid, anchor, partner, label), score in zip(arms, scores):
        by_slot.setdefault((sid, anchor), {0: [], 1: []})[label].append((partner, float(score)))

    matches: list[MatchedPair] = []
    for (sid, anchor) in sorted(by_slot):
        slot = by_slot[(sid, anchor)]
        candidates = sorted(
            (abs(s1 - s0), p1, p0, s1, s0)
            for p1, s1 in slot[1]
            for p0, s0 in slot[0]
        )
        used_d: set[str] = set()
        used_n: set[str] = set()
        for gap, p1, p0, s1, s0 in candidates:
            if gap >= caliper:
                break
            if p1 in used_d or p0 in used_n:
                continue
            used_d.add(p1)
            used_n.add(p0)
            matches.append(MatchedPair(sid, anchor, p1, p0, s1, s0))
    return matches, fit


def estimate_nonparametric(
    matches: Sequence[MatchedPair],
    outcomes: OutcomeMap,
    dimension: str,
    measure: str,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> EffectEstimate:
    """Mean matched outcome difference with a sign-flip permutation p-value."""
    if not matches:
        raise CausalError("no matched pairs")
    diffs = np.array([
        _pair_outcome(outcomes, m.submission_id, m.anchor, m.diverse_partner, measure)
        - _pair_outcome(outcomes, m.submission_id, m.anchor, m.nondiverse_partner, measure)
        for m in matches
    ])
    test = permutation_test_paired(diffs, permutations=permutations, seed=seed, mode="sampled")
    se = float(diffs.std(ddof=1) / math.sqrt(len(diffs))) if len(diffs) > 1 else 0.0
    return EffectEstimate(
        dimension=dimension,
        outcome=measure,
        method="nonparametric",
        gamma=float(test.statistic),
        standard_error=se,
        p_value=float(test.p_value),
        n=len(diffs),
    )


def audit_matches(
    matches: Sequence[MatchedPair],
    corpus: ReviewCorpus,
    caliper: float = DEFAULT_CALIPER,
) -> list[str]:
    """Post-hoc audit: every match must honor the caliper and live inside one
    submission's slate. Returns human-readable violations (empty = pass)."""
    violations = []
    for m in matches:
        if abs(m.propensity_diverse - m.propensity_nondiverse) >= caliper:
            violations.append(
                f"{m.submission_id}/{m.anchor}: propensity gap "
                f"{abs(m.propensity_diverse - m.propensity_nondiverse):.4f} >= {caliper}"
            )
        slate = corpus.submissions[m.submission_id].assigned_reviewers
        for rid in (m.anchor, m.diverse_partner, m.nondiverse_partner):
            if rid not in slate:
                violations.append(f"{m.submission_id}: {rid} not on the slate")
    return violations


def quality_correlation_check(
    corpus: ReviewCorpus,
    treatments: TreatmentMap,
    min_slates: int = 3,
) -> dict[str, tuple[float, float]]:
    """Per-dimension Pearson correlation between a slate's mean diversity and
    its mean meta-review rating; slates without ratings are skipped."""
    slate_delta: dict[str, dict[str, float]] = {}
    counts: dict[str, int] = {}
    for (sid, _, _), t in treatments.items():
        slate_delta.setdefault(sid, {d: 0.0 for d in DIMENSIONS})
        counts[sid] = counts.get(sid, 0) + 1
        for d in DIMENSIONS:
            slate_delta[sid][d] += t.deltas[d]
    ratings: dict[str, float] = {}
    by_submission: dict[str, list[float]] = {}
    for rev in corpus.reviews.values():
        if rev.meta_rating is not None:
            by_submission.setdefault(rev.submission_id, []).append(float(rev.meta_rating))
    for sid, vals in by_submission.items():
        ratings[sid] = float(np.mean(vals))

    usable = sorted(set(slate_delta) & set(ratings))
    if len(usable) < min_slates:
        raise CausalError(
            f"only {len(usable)} slates have meta ratings; need {min_slates}"
        )
    out = {}
    for d in DIMENSIONS:
        x = np.array([slate_delta[sid][d] / counts[sid] for sid in usable])
        y = np.array([ratings[sid] for sid in usable])
        out[d] = pearson_r(x, y)
    return out


@dataclass
class EffectMatrixResult:
    estimates: list[EffectEstimate]
    failures: list[CellFailure] = field(default_factory=list)


def _run_cell_parametric(args):
    (corpus, treatments, profiles, expertise, outcomes, dim, measure,
     policy, n_topics, min_triples) = args
    triples = build_triples(corpus, treatments, dim, policy=policy)
    est, _ = estimate_parametric(
        triples, outcomes, treatments, profiles, expertise, measure,
        corpus=corpus, n_topics=n_topics, min_triples=min_triples,
    )
    return est


def run_effect_matrix(
    corpus: ReviewCorpus,
    treatments: TreatmentMap,
    profiles: dict[str, ProfileVectors],
    expertise: dict[tuple[str, str], Optional[float]],
    outcomes: OutcomeMap,
    n_topics: int = 0,
    dimensions: Sequence[str] = DIMENSIONS,
    measures: Sequence[str] = ALL_OUTCOMES,
    methods: Sequence[str] = ("parametric", "nonparametric"),
    policy: str = "one-per-submission",
    min_triples: int = DEFAULT_MIN_TRIPLES,
    caliper: float = DEFAULT_CALIPER,
    l2: float = DEFAULT_LOGISTIC_L2,
    permutations: int = DEFAULT_PERMUTATIONS,
    fdr: float = 0.05,
    seed: int = 0,
    parallelism: int = 1,
) -> EffectMatrixResult:
    """Full (dimension x outcome x method) effect matrix.

    Cell failures never abort the run; they are collected with coordinates.
    BH correction is applied separately per method across the cells that
    succeeded; the per-cell permutation seed is derived from the master seed
    and cell coordinates, so results do not depend on the parallelism degree.
    """
    estimates: list[EffectEstimate] = []
    failures: list[CellFailure] = []

    # matching is per dimension, shared by every outcome of that dimension
    matched: dict[str, list[MatchedPair]] = {}
    if "nonparametric" in methods:
        for dim in dimensions:
            try:
                matched[dim], _ = propensity_match(
                    corpus, treatments, profiles, expertise, dim,
                    n_topics=n_topics, caliper=caliper, l2=l2,
                )
            except (CausalError, StatsError) as e:
                for measure in measures:
                    failures.append(CellFailure(dim, measure, "nonparametric", str(e)))

    def run_cell(dim: str, measure: str, method: str) -> EffectEstimate:
        if method == "parametric":
            triples = build_triples(corpus, treatments, dim, policy=policy)
            est, _ = estimate_parametric(
                triples, outcomes, treatments, profiles, expertise, measure,
                corpus=corpus, n_topics=n_topics, min_triples=min_triples,
            )
            return est
        return estimate_nonparametric(
            matched[dim], outcomes, dim, measure,
            permutations=permutations,
            seed=derive_seed(seed, "cell", dim, measure, method),
        )

    cells = [
        (dim, measure, method)
        for method in methods
        for dim in dimensions
        for measure in measures
        if not (method == "nonparametric" and dim not in matched)
    ]

    def worker(cell):
        dim, measure, method = cell
        try:
            return run_cell(dim, measure, method), None
        except (CausalError, StatsError, KeyError) as e:
            return None, CellFailure(dim, measure, method, str(e))

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(worker, cells))
    else:
        results = [worker(c) for c in cells]
    for est, failure in results:
        if est is not None:
            estimates.append(est)
        else:
            failures.append(failure)

    for method in methods:
        idx = [i for i, e in enumerate(estimates) if e.method == method]
        if not idx:
            continue
        p = np.array([estimates[i].p_value for i in idx])
        _, adjusted = bh_correct(p, fdr)
        for j, i in enumerate(idx):
            estimates[i].p_adjusted = float(adjusted[j])
            estimates[i].significant = bool(adjusted[j] <= SIGNIFICANCE_THRESHOLD)

    estimates.sort(key=lambda e: (e.method, e.dimension, e.outcome))
    failures.sort(key=lambda f: (f.method, f.dimension, f.outcome))
    return EffectMatrixResult(estimates=estimates, failures=failures)

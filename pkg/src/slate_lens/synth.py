"""Seeded synthetic peer-review corpus generator with plantable effects.

The generator realizes each pair-level outcome through the real measurement
path: target values are encoded into sentence embeddings, type assignments,
and shared token spans, so the measures read the planted signal back out.
Per-submission embedding axes are kept mutually orthogonal, which makes the
redundancy measures exact linear decoders of their targets; the coverage
measures couple additively across the slate (the ground-truth record states
per-measure encoding tolerances).

Confounding: community structure drives organizations, regions, coauthor
hubs, and topic interests; assignment probability follows topic affinity, so
expertise and profiles confound the diversity treatments. Confounder terms
enter outcomes linearly in the same profile encodings the estimators adjust
for.
"""

from __future__ import annotations

import json
import math
import tempfile
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from .calibration import CalibrationTable
from .corpus import (
    CorpusPaths,
    ReviewCorpus,
    abstract_doc_id,
    default_region_mapping,
    load_corpus,
    review_doc_id,
)
from .diversity import (
    DIMENSIONS,
    ProfileVectors,
    SlatePairTreatment,
    Thresholds,
    build_all_profiles,
    compute_topical_threshold,
    compute_treatments,
    DiversityError,
)
from .lexical import NGRAM_ORDERS, extract_ngrams
from .outcomes import ALL_OUTCOMES, CALIBRATED_OUTCOMES
from .semantic import AnnotatedDoc, N_ARGUMENTS, N_ASPECTS

GROUND_TRUTH_SCHEMA = "slate-lens/ground-truth/v1"

# encoding constants: raw = lo + span * target for the exactly-decoded measures
_WSR_LO, _WSR_SPAN = 0.1, 0.2
_SEMRED_LO, _SEMRED_SPAN = 3.3, 1.0
_LEXRED_LO, _LEXRED_SPAN = 40.0, 30.0
_Q_LO, _Q_SPAN = 0.1, 0.8  # semantic-coverage channel values
_T_LO, _T_SPAN = 3, 9  # copied-prefix token counts

_EXTRA_ASPECTS = 6  # aspect types 2..7 form the coverage palette
_EXTRA_ARGUMENTS = 3  # argument types 2..4

_PROFILE_FIELDS = ("organizations", "country", "h_index", "coauthors", "abstracts")


class SynthError(ValueError):
    pass


@dataclass
class SynthConfig:
    seed: int = 0
    n_submissions: int = 100
    n_reviewers: int = 60
    # probabilities of slates with 2, 3, 4 reviewers
    reviewers_per_paper: tuple[float, float, float] = (0.0, 1.0, 0.0)
    n_communities: int = 8
    n_topics: int = 3
    vocabulary_size: int = 60
    abstract_payload_tokens: int = 12
    embedding_dim: int = 64
    planted_effects: dict[tuple[str, str], float] = field(default_factory=dict)
    confounder_profile: float = 1.0
    confounder_expertise: float = 1.0
    treatment_assortativity: float = 6.0
    noise_sd: float = 0.08
    org_spill: float = 0.1
    geo_spill: float = 0.1
    hub_rate: float = 0.85
    missing_rates: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        probs = self.reviewers_per_paper
        if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise SynthError("reviewers_per_paper must be a probability triple over {2,3,4}")
        max_slate = max(k for k, p in zip((2, 3, 4), probs) if p > 0)
        if self.n_reviewers < max_slate:
            raise SynthError(
                f"n_reviewers={self.n_reviewers} cannot fill slates of size {max_slate}"
            )
        if self.n_submissions < 1:
            raise SynthError("need at least one submission")
        if self.n_topics < 2:
            raise SynthError("need at least two topics")
        if self.vocabulary_size < 2 * self.n_topics:
            raise SynthError("vocabulary too small for the topic count")
        if self.n_communities < 1:
            raise SynthError("need at least one community")
        if self.abstract_payload_tokens < 6:
            raise SynthError("abstract payload sentences need at least 6 tokens")
        if self.noise_sd < 0:
            raise SynthError("noise_sd must be non-negative")
        for (dim, outcome), gamma in self.planted_effects.items():
            _check_cell(dim, outcome, gamma)
        # worst case: 6 pairs, slate of 4
        needed = 8 * 6 + 2 * 4 + 1
        if self.embedding_dim < needed:
            raise SynthError(f"embedding_dim must be >= {needed}")
        for name, rate in self.missing_rates.items():
            if name not in _PROFILE_FIELDS:
                raise SynthError(f"unknown profile field {name!r} in missing_rates")
            if not 0.0 <= rate <= 1.0:
                raise SynthError(f"missing rate for {name!r} outside [0,1]")


def _check_cell(dimension: str, outcome: str, gamma: float) -> None:
    if dimension not in DIMENSIONS:
        raise SynthError(f"unknown diversity dimension {dimension!r}")
    if outcome not in ALL_OUTCOMES:
        raise SynthError(f"unknown outcome measure {outcome!r}")
    if not math.isfinite(gamma):
        raise SynthError(f"planted effect for ({dimension}, {outcome}) is not finite")


@dataclass
class GroundTruth:
    """Everything an oracle needs: planted cells, the analytic raw value of
    every measure for every pair, and calibration bounds under which the
    normalized planted contrasts equal the planted gammas."""

    planted: dict[tuple[str, str], float]
    calibration_bounds: dict[str, tuple[float, float]]
    encoding_tolerance: dict[str, float]
    h_index_threshold: int
    topical_threshold: float
    topic_vectors: dict[str, Optional[list[float]]]
    communities: dict[str, int]
    analytic_raw: dict[tuple[str, str, str], dict[str, float]]
    n_clipped: int
    seed: int

    def calibration_table(self) -> CalibrationTable:
        return CalibrationTable(
            reference=f"synthetic:{self.seed}",
            percentiles=(0.0, 100.0),
            bounds=dict(self.calibration_bounds),
        )

    def to_json(self) -> dict:
        return {
            "schema": GROUND_TRUTH_SCHEMA,
            "seed": self.seed,
            "planted": [
                {"dimension": d, "outcome": o, "gamma": g}
                for (d, o), g in sorted(self.planted.items())
            ],
            "calibration_bounds": {
                m: {"lo": lo, "hi": hi}
                for m, (lo, hi) in sorted(self.calibration_bounds.items())
            },
            "encoding_tolerance": dict(sorted(self.encoding_tolerance.items())),
            "h_index_threshold": self.h_index_threshold,
            "topical_threshold": self.topical_threshold,
            "topic_vectors": {
                rid: vec for rid, vec in sorted(self.topic_vectors.items())
            },
            "communities": dict(sorted(self.communities.items())),
            "analytic_raw": {
                "|".join(key): vals for key, vals in sorted(self.analytic_raw.items())
            },
            "n_clipped": self.n_clipped,
        }

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n")


@dataclass
class SynthBundle:
    config: SynthConfig
    corpus: ReviewCorpus
    annotations: dict[str, AnnotatedDoc]
    ground_truth: GroundTruth
    treatments: dict[tuple[str, str, str], SlatePairTreatment]
    profiles: dict[str, ProfileVectors]
    raw_records: dict[str, list[dict]]  # jsonl-file stem -> record dicts


# --- small sampling helpers --------------------------------------------------

def sample_topic_model(seed: int, K: int, V: int, concentration: float = 5.0) -> np.ndarray:
    """Block-structured topic-word matrix: topic k owns vocabulary block k."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    phi = np.zeros((K, V))
    block = V // K
    for k in range(K):
        lo = k * block
        hi = V if k == K - 1 else lo + block
        phi[k, lo:hi] = rng.dirichlet(np.full(hi - lo, concentration))
    return phi


def sample_topic_documents(
    phi: np.ndarray, n_docs: int, doc_len: int, seed: int, alpha: float = 0.2
) -> tuple[list[list[str]], np.ndarray]:
    """Token documents from an LDA generative process over words w000..wNNN."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    K, V = phi.shape
    words = [f"w{v:03d}" for v in range(V)]
    thetas = rng.dirichlet(np.full(K, alpha), size=n_docs)
    docs = []
    for d in range(n_docs):
        z = rng.choice(K, size=doc_len, p=thetas[d])
        docs.append([words[rng.choice(V, p=phi[k])] for k in z])
    return docs, thetas


def _dither(rng: np.random.Generator, x: float) -> int:
    """Randomized rounding: E[result] = x exactly."""
    f = math.floor(x)
    return int(f + (rng.random() < (x - f)))


def _axis(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim)
    v[index] = 1.0
    return v


def _mix(dim: int, main_axis: int, orth_axis: int, cosine: float) -> np.ndarray:
    v = np.zeros(dim)
    v[main_axis] = cosine
    v[orth_axis] = math.sqrt(max(1.0 - cosine * cosine, 0.0))
    return v


def _onehot(width: int, index: int) -> np.ndarray:
    v = np.zeros(width)
    v[index] = 1.0
    return v


# --- the generator -----------------------------------------------------------

class CorpusGenerator:
    """Two-phase generator: profiles/assignments first (treatments need them),
    then outcome realization and review text. Pure function of the config."""

    def __init__(self, config: SynthConfig):
        config.validate()
        self.config = config
        self._planted: dict[tuple[str, str], float] = dict(config.planted_effects)
        self._generated = False

    def plant_effect(self, dimension: str, outcome: str, gamma: float) -> None:
        """Add gamma to the cell's coefficient; repeated plants accumulate.
        gamma is the diverse-vs-non-diverse outcome contrast in normalized
        units. Must precede generate()."""
        if self._generated:
            raise SynthError("plant_effect must be called before generate()")
        _check_cell(dimension, outcome, float(gamma))
        key = (dimension, outcome)
        self._planted[key] = self._planted.get(key, 0.0) + float(gamma)

    # dense gamma lookup so a zero plant cannot perturb anything downstream
    def _gamma(self, dimension: str, outcome: str) -> float:
        return self._planted.get((dimension, outcome), 0.0)

    def generate(self, work_dir: Optional[Path | str] = None) -> SynthBundle:
        self._generated = True
        if work_dir is None:
            with tempfile.TemporaryDirectory() as tmp:
                return self._generate(Path(tmp))
        return self._generate(Path(work_dir))

    # -- phase A: reviewers, submissions, assignments -------------------------

    def _generate(self, out_dir: Path) -> SynthBundle:
        cfg = self.config
        rng = np.random.Generator(np.random.Philox(key=cfg.seed))

        region_mapping = default_region_mapping()
        by_region: dict[str, str] = {}
        for country in sorted(region_mapping):
            by_region.setdefault(region_mapping[country], country)
        countries = [by_region[r] for r in sorted(by_region)]

        phi = sample_topic_model(cfg.seed ^ 0x5EED, cfg.n_topics, cfg.vocabulary_size)
        vocab = [f"w{v:03d}" for v in range(cfg.vocabulary_size)]

        reviewer_records: list[dict] = []
        communities: dict[str, int] = {}
        thetas: dict[str, np.ndarray] = {}
        all_orgs = [
            f"org{c:02d}{s}" for c in range(cfg.n_communities) for s in "ab"
        ]
        for i in range(cfg.n_reviewers):
            rid = f"r{i:04d}"
            c = i % cfg.n_communities
            communities[rid] = c
            org = all_orgs[2 * c + (0 if rng.random() < 0.5 else 1)]
            if rng.random() < cfg.org_spill:
                org = all_orgs[int(rng.integers(len(all_orgs)))]
            country = countries[c % len(countries)]
            if rng.random() < cfg.geo_spill:
                country = countries[int(rng.integers(len(countries)))]
            h_index = int(rng.integers(1, 61))
            coauthors = []
            if rng.random() < cfg.hub_rate:
                coauthors.append(f"hub{c:02d}")
            coauthors.append(f"pc_{rid}")
            alpha = np.full(cfg.n_topics, 0.25)
            alpha[c % cfg.n_topics] += 6.0
            theta = rng.dirichlet(alpha)
            thetas[rid] = theta
            abstracts = []
            for _ in range(2):
                z = rng.choice(cfg.n_topics, size=30, p=theta)
                toks = [vocab[rng.choice(cfg.vocabulary_size, p=phi[k])] for k in z]
                abstracts.append(" ".join(toks) + ".")
            rec = {
                "id": rid,
                "organizations": [org],
                "country": country,
                "h_index": h_index,
                "coauthors": coauthors,
                "abstracts": abstracts,
            }
            # missingness draws happen unconditionally: stable RNG stream
            drops = {f: rng.random() < cfg.missing_rates.get(f, 0.0) for f in _PROFILE_FIELDS}
            if drops["organizations"]:
                rec["organizations"] = []
            for f in ("country", "h_index", "coauthors", "abstracts"):
                if drops[f]:
                    del rec[f]
            reviewer_records.append(rec)

        slate_sizes = rng.choice(
            (2, 3, 4), size=cfg.n_submissions, p=cfg.reviewers_per_paper
        )
        theta_matrix = np.array([thetas[r["id"]] for r in reviewer_records])
        rids = [r["id"] for r in reviewer_records]

        submission_records: list[dict] = []
        assignment_records: list[dict] = []
        slates: dict[str, list[str]] = {}
        expertise_true: dict[tuple[str, str], float] = {}
        payload_sentences: dict[str, list[list[str]]] = {}  # sid -> token lists
        pair_lists: dict[str, list[tuple[str, str]]] = {}
        for j in range(cfg.n_submissions):
            sid = f"s{j:05d}"
            c_s = int(rng.integers(cfg.n_communities))
            alpha = np.full(cfg.n_topics, 0.25)
            alpha[c_s % cfg.n_topics] += 6.0
            t_s = rng.dirichlet(alpha)
            k = int(slate_sizes[j])
            affinity = theta_matrix @ t_s
            logits = cfg.treatment_assortativity * affinity + rng.gumbel(size=len(rids))
            top = np.argsort(-logits, kind="stable")[:k]
            slate = sorted(rids[i] for i in top)
            slates[sid] = slate
            for rid in slate:
                e = float(np.clip(affinity[rids.index(rid)] + 0.08 * rng.standard_normal(), 0.0, 1.0))
                expertise_true[(rid, sid)] = e
                assignment_records.append(
                    {"submission_id": sid, "reviewer_id": rid, "expertise": e}
                )
            pairs = list(combinations(slate, 2))
            pair_lists[sid] = pairs
            L = cfg.abstract_payload_tokens
            payload = [
                [f"s{j}p{s}q{t}" for t in range(L)]
                for s in range(len(pairs) + len(slate))
            ]
            payload_sentences[sid] = payload
            sentences = [" ".join(toks) + "." for toks in payload]
            for s in range(3):
                z = rng.choice(cfg.n_topics, size=10, p=t_s)
                toks = [vocab[rng.choice(cfg.vocabulary_size, p=phi[zz])] for zz in z]
                sentences.append(" ".join(toks) + ".")
            submission_records.append({"id": sid, "abstract": " ".join(sentences)})

        self._write_jsonl(out_dir / "reviewers.jsonl", reviewer_records)
        self._write_jsonl(out_dir / "submissions.jsonl", submission_records)
        self._write_jsonl(out_dir / "assignments.jsonl", assignment_records)
        (out_dir / "reviews.jsonl").write_text("")
        corpus0 = load_corpus(CorpusPaths.in_dir(out_dir))

        topic_vecs: dict[str, Optional[np.ndarray]] = {
            rid: (thetas[rid] if corpus0.reviewers[rid].publication_abstracts is not None else None)
            for rid in rids
        }
        h_values = [r.h_index for r in corpus0.reviewers.values() if r.h_index is not None]
        h_threshold = int(np.median(h_values)) if h_values else 0
        profiles = build_all_profiles(corpus0, topic_vecs, h_index_threshold=h_threshold)
        try:
            topical_threshold = compute_topical_threshold(corpus0, profiles)
        except DiversityError:
            topical_threshold = 0.5
        thresholds = Thresholds(h_index=h_threshold, topical_similarity=topical_threshold)
        treatments = compute_treatments(corpus0, profiles, thresholds=thresholds)

        # -- phase B: realize outcomes and encode them into review content ----
        bundle = self._realize(
            rng, corpus0, treatments, profiles, expertise_true,
            slates, pair_lists, payload_sentences, communities, thetas,
            topic_vecs, thresholds, out_dir,
            reviewer_records, submission_records, assignment_records,
        )
        return bundle

    @staticmethod
    def _write_jsonl(path: Path, records: list[dict]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for rec in records:
                f.write(json.dumps(rec, sort_keys=True) + "\n")

    # -- phase B ---------------------------------------------------------------

    def _realize(
        self, rng, corpus0, treatments, profiles, expertise_true,
        slates, pair_lists, payload_sentences, communities, thetas,
        topic_vecs, thresholds, out_dir,
        reviewer_records, submission_records, assignment_records,
    ) -> SynthBundle:
        cfg = self.config
        dim = cfg.embedding_dim
        s_prof = cfg.confounder_profile
        s_exp = cfg.confounder_expertise

        # per-measure confounder weights over the profile encodings the
        # estimators adjust for (organizations, region, seniority)
        n_orgs = len(corpus0.organization_index)
        w_org = {m: rng.normal(0.0, 0.05, size=n_orgs) for m in CALIBRATED_OUTCOMES}
        w_reg = {m: rng.normal(0.0, 0.04, size=12) for m in CALIBRATED_OUTCOMES}
        w_sen = {m: float(rng.normal(0.0, 0.05)) for m in CALIBRATED_OUTCOMES}
        u_exp = {m: float(rng.normal(0.0, 0.15)) for m in CALIBRATED_OUTCOMES}

        def conf_profile(m: str, rid: str) -> float:
            p = profiles[rid]
            total = 0.0
            if p.organization is not None:
                total += float(w_org[m] @ p.organization)
            if p.region is not None:
                total += float(w_reg[m] @ p.region)
            if p.seniority is not None:
                total += w_sen[m] * float(p.seniority[1])
            return s_prof * total

        n_clipped = 0

        def clipped(x: float, lo: float = 0.02, hi: float = 0.98) -> float:
            nonlocal n_clipped
            if x < lo or x > hi:
                n_clipped += 1
            return float(np.clip(x, lo, hi))

        review_records: list[dict] = []
        annotations: dict[str, AnnotatedDoc] = {}
        analytic: dict[tuple[str, str, str], dict[str, float]] = {}

        L = cfg.abstract_payload_tokens

        for j, sid in enumerate(sorted(slates)):
            slate = slates[sid]
            pairs = pair_lists[sid]
            n_pairs = len(pairs)
            payload = payload_sentences[sid]

            # submission-local orthogonal axis layout
            ax = iter(range(dim))
            ax_payload_pair = [next(ax) for _ in pairs]
            ax_payload_priv = {r: next(ax) for r in slate}
            ax_topic = next(ax)
            pair_axes = [
                {name: next(ax) for name in ("a1", "a2", "b1", "b2", "g1", "g2", "z")}
                for _ in pairs
            ]
            ax_review = {r: next(ax) for r in slate}

            # type palettes: submission-level random orders of the extra types
            perm_aspect = list(rng.permutation(np.arange(2, 2 + _EXTRA_ASPECTS)))
            perm_argument = list(rng.permutation(np.arange(2, 2 + _EXTRA_ARGUMENTS)))

            expertise = {r: expertise_true[(r, sid)] for r in slate}

            # pair-level targets
            pair_vals: list[dict] = []
            for p_idx, (ra, rb) in enumerate(pairs):
                deltas = treatments[(sid, ra, rb)].deltas

                def target(m: str, with_conf: bool = True) -> float:
                    y = 0.5
                    for d in DIMENSIONS:
                        y += 0.5 * self._gamma(d, m) * deltas[d]
                    if with_conf and m in CALIBRATED_OUTCOMES:
                        y += conf_profile(m, ra) + conf_profile(m, rb)
                        y += s_exp * u_exp[m] * ((expertise[ra] - 0.5) + (expertise[rb] - 0.5))
                    y += cfg.noise_sd * rng.standard_normal()
                    return clipped(y)

                y_wa = target("weighted_semantic_redundancy_aspect")
                y_wg = target("weighted_semantic_redundancy_argument")
                y_sr = target("semantic_redundancy")
                y_lr = target("lexical_redundancy")
                y_lc = target("lexical_coverage")
                y_sc = target("semantic_coverage")
                y_ta = target("type_coverage_aspect", with_conf=False)
                y_tg = target("type_coverage_argument", with_conf=False)

                w_a = _WSR_LO + _WSR_SPAN * y_wa
                w_g = _WSR_LO + _WSR_SPAN * y_wg
                raw_sr = _SEMRED_LO + _SEMRED_SPAN * y_sr
                cos_c = raw_sr / 2.0 - 1.0 - w_a - w_g
                if not 0.0 < cos_c <= 1.0:
                    raise SynthError(f"semantic-redundancy cosine {cos_c} out of range")
                t_p = _dither(rng, _T_LO + _T_SPAN * y_lc)
                raw_lr = _LEXRED_LO + _LEXRED_SPAN * y_lr
                k_p = _dither(rng, (raw_lr - 3.0 * t_p + 6.0) / 3.0)
                if k_p < 3:
                    raise SynthError("lexical-redundancy token count fell below 3")
                q_p = _Q_LO + _Q_SPAN * y_sc
                pal_a = min(_EXTRA_ASPECTS, max(0, _dither(rng, _EXTRA_ASPECTS * y_ta)))
                pal_g = min(_EXTRA_ARGUMENTS, max(0, _dither(rng, _EXTRA_ARGUMENTS * y_tg)))
                pair_vals.append(dict(
                    w_a=w_a, w_g=w_g, cos_c=cos_c, t_p=t_p, k_p=k_p, q_p=q_p,
                    pal_a=pal_a, pal_g=pal_g,
                ))

            # review-level channels (private coverage + palette jitter)
            review_vals: dict[str, dict] = {}
            for r in slate:
                def rtarget(m: str) -> float:
                    y = 0.5 + 2.0 * conf_profile(m, r)
                    y += 2.0 * s_exp * u_exp[m] * (expertise[r] - 0.5)
                    y += cfg.noise_sd * rng.standard_normal()
                    return clipped(y)

                v_sc = rtarget("semantic_coverage")
                v_lc = rtarget("lexical_coverage")
                rho = _Q_LO + _Q_SPAN * v_sc
                t_r = _dither(rng, _T_LO + _T_SPAN * v_lc)
                incident = [i for i, pr in enumerate(pairs) if r in pr]
                base_a = max(pair_vals[i]["pal_a"] for i in incident)
                base_g = max(pair_vals[i]["pal_g"] for i in incident)
                a_r = int(np.clip(base_a + rng.integers(-1, 2), 0, _EXTRA_ASPECTS))
                g_r = int(np.clip(base_g + rng.integers(-1, 2), 0, _EXTRA_ARGUMENTS))
                review_vals[r] = dict(rho=rho, t_r=t_r, a_r=a_r, g_r=g_r)

            # assemble per-review sentences with exact embeddings and types
            filler_counter = 0

            def filler(n: int = 3) -> str:
                nonlocal filler_counter
                toks = [f"f{j}z{filler_counter + t}" for t in range(n)]
                filler_counter += n
                return " ".join(toks) + "."

            for r_pos, r in enumerate(slate):
                texts: list[str] = []
                embs: list[np.ndarray] = []
                asp: list[np.ndarray] = []
                arg: list[np.ndarray] = []

                def add(text, emb, aspect_type, argument_type):
                    texts.append(text)
                    embs.append(emb)
                    asp.append(_onehot(N_ASPECTS, aspect_type))
                    arg.append(_onehot(N_ARGUMENTS, argument_type))

                for p_idx, (ra, rb) in enumerate(pairs):
                    if r not in (ra, rb):
                        continue
                    role = 0 if r == ra else 1
                    v = pair_vals[p_idx]
                    axes = pair_axes[p_idx]
                    # best-match redundancy channel: cosine cos_c, type dots 0
                    emb = (_axis(dim, axes["a1"]) if role == 0
                           else _mix(dim, axes["a1"], axes["a2"], v["cos_c"]))
                    add(filler(), emb, role, role)
                    # type-weighted channels: aspect dot 1 / argument dot 1
                    emb = (_axis(dim, axes["b1"]) if role == 0
                           else _mix(dim, axes["b1"], axes["b2"], v["w_a"]))
                    add(filler(), emb, 0, role)
                    emb = (_axis(dim, axes["g1"]) if role == 0
                           else _mix(dim, axes["g1"], axes["g2"], v["w_g"]))
                    add(filler(), emb, role, 0)
                    # coverage channel: identical in both reviews; aligns with
                    # the pair's dedicated abstract sentence at strength q_p
                    emb = _mix(dim, ax_payload_pair[p_idx], axes["z"], v["q_p"])
                    add(" ".join(payload[p_idx][: v["t_p"]]) + ".", emb, role, role)
                    # shared-token sentence, identical text in both reviews
                    toks = [f"s{j}r{p_idx}t{t}" for t in range(v["k_p"])]
                    add(" ".join(toks) + ".", _axis(dim, ax_review[r]), 0, 0)

                rv = review_vals[r]
                priv_payload = payload[n_pairs + r_pos]
                emb = _mix(dim, ax_payload_priv[r], ax_review[r], rv["rho"])
                add(" ".join(priv_payload[: rv["t_r"]]) + ".", emb, 0, 0)
                for m in range(max(rv["a_r"], rv["g_r"])):
                    a_t = int(perm_aspect[m]) if m < rv["a_r"] else 0
                    g_t = int(perm_argument[m]) if m < rv["g_r"] else 0
                    add(filler(), _axis(dim, ax_review[r]), a_t, g_t)

                review_id = f"rev_{sid}_{r}"
                review_records.append({
                    "id": review_id,
                    "submission_id": sid,
                    "reviewer_id": r,
                    "summary": texts[0],
                    "comments": " ".join(texts[1:]),
                    "score": int(rng.integers(1, 11)),
                    "meta_rating": int(rng.integers(1, 6)),
                })
                annotations[review_doc_id(review_id)] = AnnotatedDoc.build(
                    review_doc_id(review_id), np.array(embs), np.array(asp), np.array(arg)
                )

            # abstract annotations: payload axes plus one shared topic axis
            abstract_sents = corpus0.submissions[sid].abstract_sentences
            abs_emb = []
            for s in range(len(abstract_sents)):
                if s < n_pairs:
                    abs_emb.append(_axis(dim, ax_payload_pair[s]))
                elif s < n_pairs + len(slate):
                    abs_emb.append(_axis(dim, ax_payload_priv[slate[s - n_pairs]]))
                else:
                    abs_emb.append(_axis(dim, ax_topic))
            annotations[abstract_doc_id(sid)] = AnnotatedDoc.build(
                abstract_doc_id(sid), np.array(abs_emb)
            )

            # analytic raw measure values (the measurement-path decoders)
            abstract_ngrams = extract_ngrams(abstract_sents)
            den = {n: len(abstract_ngrams[n]) for n in NGRAM_ORDERS}
            for p_idx, (ra, rb) in enumerate(pairs):
                v = pair_vals[p_idx]
                va, vb = review_vals[ra], review_vals[rb]
                incident = [
                    i for i, pr in enumerate(pairs) if ra in pr or rb in pr
                ]
                lexcov = 0.0
                for n in NGRAM_ORDERS:
                    num = sum(max(pair_vals[i]["t_p"] - n + 1, 0) for i in incident)
                    num += max(va["t_r"] - n + 1, 0) + max(vb["t_r"] - n + 1, 0)
                    lexcov += num / den[n]
                semcov = sum(pair_vals[i]["q_p"] for i in incident) + va["rho"] + vb["rho"]
                analytic[(sid, ra, rb)] = {
                    "type_coverage_aspect": (2 + max(va["a_r"], vb["a_r"])) / N_ASPECTS,
                    "type_coverage_argument": (2 + max(va["g_r"], vb["g_r"])) / N_ARGUMENTS,
                    "lexical_coverage": lexcov,
                    "semantic_coverage": semcov,
                    "lexical_redundancy": float(3 * v["k_p"] + 3 * v["t_p"] - 6),
                    "semantic_redundancy": 2.0 + 2.0 * (v["cos_c"] + v["w_a"] + v["w_g"]),
                    "weighted_semantic_redundancy_aspect": v["w_a"],
                    "weighted_semantic_redundancy_argument": v["w_g"],
                }

        self._write_jsonl(out_dir / "reviews.jsonl", review_records)
        corpus = load_corpus(CorpusPaths.in_dir(out_dir))

        bounds: dict[str, tuple[float, float]] = {
            "weighted_semantic_redundancy_aspect": (_WSR_LO, _WSR_LO + _WSR_SPAN),
            "weighted_semantic_redundancy_argument": (_WSR_LO, _WSR_LO + _WSR_SPAN),
            "semantic_redundancy": (_SEMRED_LO, _SEMRED_LO + _SEMRED_SPAN),
            "lexical_redundancy": (_LEXRED_LO, _LEXRED_LO + _LEXRED_SPAN),
        }
        for m in ("lexical_coverage", "semantic_coverage"):
            values = [vals[m] for vals in analytic.values()]
            lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
            if not lo < hi:
                hi = lo + 1.0
            bounds[m] = (lo, hi)

        tolerance = {
            "semantic_redundancy": 1e-9,
            "weighted_semantic_redundancy_aspect": 1e-9,
            "weighted_semantic_redundancy_argument": 1e-9,
            # randomized rounding: per-pair +-1 token, mean-exact
            "lexical_redundancy": 3.0,
            # coverage couples additively across the slate
            "lexical_coverage": 0.25,
            "semantic_coverage": 0.25,
            # union-of-palettes semantics attenuate planted contrasts
            "type_coverage_aspect": 0.5,
            "type_coverage_argument": 0.5,
        }

        ground_truth = GroundTruth(
            planted={k: v for k, v in self._planted.items() if v != 0.0},
            calibration_bounds=bounds,
            encoding_tolerance=tolerance,
            h_index_threshold=thresholds.h_index,
            topical_threshold=thresholds.topical_similarity,
            topic_vectors={
                rid: (vec.tolist() if vec is not None else None)
                for rid, vec in topic_vecs.items()
            },
            communities=communities,
            analytic_raw=analytic,
            n_clipped=n_clipped,
            seed=cfg.seed,
        )
        return SynthBundle(
            config=cfg,
            corpus=corpus,
            annotations=annotations,
            ground_truth=ground_truth,
            treatments=treatments,
            profiles=profiles,
            raw_records={
                "reviewers": reviewer_records,
                "submissions": submission_records,
                "assignments": assignment_records,
                "reviews": review_records,
            },
        )


def generate_corpus(config: SynthConfig, work_dir: Optional[Path | str] = None) -> SynthBundle:
    return CorpusGenerator(config).generate(work_dir)


def write_corpus(bundle: SynthBundle, out_dir: Path | str) -> None:
    """Emit the corpus JSONL file set plus annotations and ground truth."""
    from .semantic import write_annotations

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stem in ("reviewers", "submissions", "assignments", "reviews"):
        CorpusGenerator._write_jsonl(out / f"{stem}.jsonl", bundle.raw_records[stem])
    docs = [bundle.annotations[k] for k in sorted(bundle.annotations)]
    write_annotations(docs, out / "annotations.jsonl", model="synthetic")
    bundle.ground_truth.save(out / "ground_truth.json")

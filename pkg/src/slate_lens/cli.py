"""Command-line pipeline: corpus to effects table.

Stages: load -> topics -> diversity -> measures -> calibrate -> causal ->
report. Each stage writes a checkpoint artifact into the output directory;
--resume reuses artifacts that already exist. Exit codes: 0 ok, 2 config
error, 3 data error, 4 estimation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calibration import CalibrationError, CalibrationTable, fit_calibration
from .causal import (
    CausalError,
    DEFAULT_CALIPER,
    DEFAULT_LOGISTIC_L2,
    DEFAULT_MIN_TRIPLES,
    DEFAULT_PERMUTATIONS,
    run_effect_matrix,
)
from .corpus import (
    CorpusError,
    CorpusPaths,
    ReviewCorpus,
    abstract_doc_id,
    load_corpus,
    review_doc_id,
)
from .diversity import (
    DIMENSIONS,
    DiversityError,
    Thresholds,
    build_all_profiles,
    compute_h_index_threshold,
    compute_topical_threshold,
    compute_treatments,
)
from .lexical import tokenize
from .outcomes import ALL_OUTCOMES, COVERAGE_OUTCOMES, REDUNDANCY_OUTCOMES, compute_pair_outcomes
from .semantic import (
    AnnotationError,
    fallback_annotate,
    load_annotations,
    write_annotations,
)
from .stats import StatsError, derive_seed
from .topics import (
    TopicModel,
    TopicModelError,
    fit_lda,
    infer_reviewer_topics,
    preprocess_documents,
    select_topic_count,
)

EFFECTS_SCHEMA = "slate-lens/effects/v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ESTIMATION = 4


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """Validated run configuration; serialized verbatim into effects.json.

    The parallelism degree is deliberately an execution flag, not part of
    the configuration, so identical configs yield identical reports at any
    worker count.
    """

    data_dir: str = "."
    out_dir: str = "out"
    annotation_source: str = "fallback"  # fallback | sidecar
    annotations_path: Optional[str] = None
    calibration_source: str = "fit"  # fit | file
    calibration_path: Optional[str] = None
    thresholds_path: Optional[str] = None
    triple_policy: str = "one-per-submission"
    permutations: int = DEFAULT_PERMUTATIONS
    fdr: float = 0.05
    seed: int = 0
    dimensions: tuple[str, ...] = DIMENSIONS
    outcomes: tuple[str, ...] = ALL_OUTCOMES
    method: str = "both"  # parametric | nonparametric | both
    topic_grid: tuple[int, ...] = (2, 3, 5)
    lda_iterations: int = 300
    topic_inference_iterations: int = 100
    min_triples: int = DEFAULT_MIN_TRIPLES
    caliper: float = DEFAULT_CALIPER
    logistic_l2: float = DEFAULT_LOGISTIC_L2
    fallback_dim: int = 768
    calibration_percentiles: tuple[float, float] = (1.0, 99.0)

    def validate(self) -> None:
        if self.annotation_source not in ("fallback", "sidecar"):
            raise ConfigError(f"annotation_source {self.annotation_source!r} invalid")
        if self.annotation_source == "sidecar" and not self.annotations_path:
            raise ConfigError("annotation_source=sidecar requires annotations_path")
        if self.calibration_source not in ("fit", "file"):
            raise ConfigError(f"calibration_source {self.calibration_source!r} invalid")
        if self.calibration_source == "file" and not self.calibration_path:
            raise ConfigError("calibration_source=file requires calibration_path")
        if self.triple_policy not in ("one-per-submission", "all"):
            raise ConfigError(f"triple_policy {self.triple_policy!r} invalid")
        if self.method not in ("parametric", "nonparametric", "both"):
            raise ConfigError(f"method {self.method!r} invalid")
        if not 0 < self.fdr < 1:
            raise ConfigError("fdr must lie in (0,1)")
        if self.permutations < 100:
            raise ConfigError("permutations must be >= 100")
        bad = [d for d in self.dimensions if d not in DIMENSIONS]
        if bad:
            raise ConfigError(f"unknown dimensions {bad}")
        bad = [o for o in self.outcomes if o not in ALL_OUTCOMES]
        if bad:
            raise ConfigError(f"unknown outcomes {bad}")
        if len(self.topic_grid) == 0 or any(k < 2 for k in self.topic_grid):
            raise ConfigError("topic_grid must list counts >= 2")

    @property
    def methods(self) -> tuple[str, ...]:
        if self.method == "both":
            return ("parametric", "nonparametric")
        return (self.method,)

    def to_json(self) -> dict:
        obj = asdict(self)
        for key in ("dimensions", "outcomes", "topic_grid", "calibration_percentiles"):
            obj[key] = list(obj[key])
        return obj

    @staticmethod
    def from_json(obj: dict) -> "PipelineConfig":
        kwargs = dict(obj)
        for key in ("dimensions", "outcomes", "topic_grid", "calibration_percentiles"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        unknown = set(kwargs) - set(PipelineConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg = PipelineConfig(**kwargs)
        cfg.validate()
        return cfg


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _annotate_corpus(corpus: ReviewCorpus, dim: int, seed: int):
    docs = {}
    for rid in sorted(corpus.reviews):
        rev = corpus.reviews[rid]
        doc_id = review_doc_id(rid)
        docs[doc_id] = fallback_annotate(doc_id, rev.sentences, dim=dim, seed=seed)
    for sid in sorted(corpus.submissions):
        doc_id = abstract_doc_id(sid)
        docs[doc_id] = fallback_annotate(
            doc_id, corpus.submissions[sid].abstract_sentences, dim=dim, seed=seed
        )
    return docs


# --- pipeline stages ----------------------------------------------------------

def _stage_topics(corpus: ReviewCorpus, cfg: PipelineConfig, out: Path, resume: bool):
    model_path = out / "topic_model.json"
    vectors_path = out / "reviewer_topics.json"
    if resume and model_path.exists() and vectors_path.exists():
        model = TopicModel.load(model_path)
        raw = json.loads(vectors_path.read_text())
        vectors = {
            rid: (np.array(v) if v is not None else None) for rid, v in raw.items()
        }
        return model, vectors
    abstracts = [
        " ".join(corpus.submissions[sid].abstract_sentences)
        for sid in sorted(corpus.submissions)
    ]
    docs = preprocess_documents(abstracts)
    k = select_topic_count(
        docs, cfg.topic_grid, seed=derive_seed(cfg.seed, "lda"),
        iterations=cfg.lda_iterations,
    )
    model = fit_lda(
        docs, k, seed=derive_seed(cfg.seed, "lda"), iterations=cfg.lda_iterations
    )
    vectors: dict[str, Optional[np.ndarray]] = {}
    for rid in sorted(corpus.reviewers):
        rec = corpus.reviewers[rid]
        if rec.publication_abstracts is None:
            vectors[rid] = None
            continue
        token_docs = [tokenize(a) for a in rec.publication_abstracts]
        vectors[rid] = infer_reviewer_topics(
            model, token_docs, iterations=cfg.topic_inference_iterations,
            seed=derive_seed(cfg.seed, "topic-infer", rid),
        )
    model.save(model_path)
    _json_dump(
        {rid: (v.tolist() if v is not None else None) for rid, v in vectors.items()},
        vectors_path,
    )
    return model, vectors


def _stage_diversity(corpus, vectors, cfg: PipelineConfig, out: Path, resume: bool):
    thresholds_path = out / "thresholds.json"
    if cfg.thresholds_path:
        thresholds = Thresholds.load(cfg.thresholds_path)
        profiles = build_all_profiles(corpus, vectors, h_index_threshold=thresholds.h_index)
    elif resume and thresholds_path.exists():
        thresholds = Thresholds.load(thresholds_path)
        profiles = build_all_profiles(corpus, vectors, h_index_threshold=thresholds.h_index)
    else:
        h = compute_h_index_threshold(corpus)
        profiles = build_all_profiles(corpus, vectors, h_index_threshold=h)
        thresholds = Thresholds(
            h_index=h, topical_similarity=compute_topical_threshold(corpus, profiles)
        )
    thresholds.save(thresholds_path)
    treatments = compute_treatments(corpus, profiles, thresholds=thresholds)
    _json_dump(
        {
            "|".join(k): {
                "deltas": t.deltas,
                "topical_similarity": t.topical_similarity,
                "coauthor_distance": (
                    None if t.coauthor_distance is None
                    else ("inf" if t.coauthor_distance == float("inf") else t.coauthor_distance)
                ),
            }
            for k, t in sorted(treatments.items())
        },
        out / "treatments.json",
    )
    return profiles, treatments, thresholds


def _stage_measures(corpus, cfg: PipelineConfig, out: Path, resume: bool):
    raw_path = out / "measures_raw.json"
    if cfg.annotation_source == "sidecar":
        path = Path(cfg.annotations_path)
        if not path.exists():
            raise CorpusError(f"annotations file not found: {path}")
        annotations = load_annotations(path)
    else:
        annotations = _annotate_corpus(corpus, cfg.fallback_dim, cfg.seed)
    if resume and raw_path.exists():
        raw = {
            tuple(k.split("|")): v for k, v in json.loads(raw_path.read_text()).items()
        }
        return annotations, raw
    raw = compute_pair_outcomes(corpus, annotations)
    _json_dump({"|".join(k): v for k, v in sorted(raw.items())}, raw_path)
    return annotations, raw


def _stage_calibrate(corpus, annotations, raw, cfg: PipelineConfig, out: Path):
    from .calibration import normalize_outcome
    from .outcomes import CALIBRATED_OUTCOMES

    if cfg.calibration_source == "file":
        table = CalibrationTable.load(cfg.calibration_path)
    else:
        table = fit_calibration(
            corpus, annotations, percentiles=cfg.calibration_percentiles,
            reference_id=str(cfg.data_dir),
        )
    table.save(out / "calibration.json")
    normalized = {}
    for key, vals in raw.items():
        vals = dict(vals)
        for m in CALIBRATED_OUTCOMES:
            vals[m] = normalize_outcome(vals[m], m, table)
        normalized[key] = vals
    _json_dump({"|".join(k): v for k, v in sorted(normalized.items())}, out / "measures.json")
    return normalized


def run_pipeline(cfg: PipelineConfig, parallelism: int = 1, resume: bool = False) -> dict:
    """Execute all stages; returns the effects report object (also written
    to <out_dir>/effects.json along with a rendered table)."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    corpus = load_corpus(CorpusPaths.in_dir(cfg.data_dir))
    model, vectors = _stage_topics(corpus, cfg, out, resume)
    profiles, treatments, thresholds = _stage_diversity(corpus, vectors, cfg, out, resume)
    annotations, raw = _stage_measures(corpus, cfg, out, resume)
    normalized = _stage_calibrate(corpus, annotations, raw, cfg, out)

    result = run_effect_matrix(
        corpus, treatments, profiles, corpus.expertise, normalized,
        n_topics=model.K,
        dimensions=cfg.dimensions,
        measures=cfg.outcomes,
        methods=cfg.methods,
        policy=cfg.triple_policy,
        min_triples=cfg.min_triples,
        caliper=cfg.caliper,
        l2=cfg.logistic_l2,
        permutations=cfg.permutations,
        fdr=cfg.fdr,
        seed=cfg.seed,
        parallelism=parallelism,
    )
    report = {
        "schema": EFFECTS_SCHEMA,
        "config": cfg.to_json(),
        "estimates": [
            {
                "dimension": e.dimension,
                "outcome": e.outcome,
                "method": e.method,
                "gamma": e.gamma,
                "se": e.standard_error,
                "p": e.p_value,
                "p_adj": e.p_adjusted,
                "n": e.n,
                "n_dropped": e.n_dropped,
                "significant": e.significant,
            }
            for e in result.estimates
        ],
        "failures": [
            {"dimension": f.dimension, "outcome": f.outcome, "method": f.method, "error": f.error}
            for f in result.failures
        ],
    }
    (out / "effects.json").write_text(json.dumps(report, sort_keys=True) + "\n")
    (out / "report.txt").write_text(render_report(report))
    return report


# --- report rendering ---------------------------------------------------------

_SHORT_NAMES = {
    "type_coverage_argument": "TypeCov-Arg",
    "type_coverage_aspect": "TypeCov-Asp",
    "lexical_coverage": "LexCov",
    "semantic_coverage": "SemCov",
    "lexical_redundancy": "LexRed",
    "semantic_redundancy": "SemRed",
    "weighted_semantic_redundancy_argument": "WSemRed-Arg",
    "weighted_semantic_redundancy_aspect": "WSemRed-Asp",
}


def render_report(report: dict) -> str:
    """Plain-text effect matrix: one block per method, rows are dimensions,
    outcome columns grouped coverage-first, stars on significant cells."""
    estimates = report["estimates"]
    outcomes = [o for o in COVERAGE_OUTCOMES + REDUNDANCY_OUTCOMES
                if any(e["outcome"] == o for e in estimates)]
    methods = sorted({e["method"] for e in estimates})
    lines = []
    for method in methods:
        subset = [e for e in estimates if e["method"] == method]
        dims = sorted({e["dimension"] for e in subset})
        by_cell = {(e["dimension"], e["outcome"]): e for e in subset}
        lines.append(f"== {method} ==")
        header = f"{'dimension':<14}{'n':>6}" + "".join(
            f"{_SHORT_NAMES[o]:>13}" for o in outcomes
        )
        lines.append(header)
        n_cov = sum(1 for o in outcomes if o in COVERAGE_OUTCOMES)
        lines.append(f"{'':<14}{'':>6}" + "   [coverage]".rjust(13 * max(n_cov, 1))
                     + "  [redundancy]".rjust(13 * max(len(outcomes) - n_cov, 1)))
        for dim in dims:
            ns = [by_cell[(dim, o)]["n"] for o in outcomes if (dim, o) in by_cell]
            n_repr = str(min(ns)) if ns else "-"
            row = f"{dim:<14}{n_repr:>6}"
            for o in outcomes:
                e = by_cell.get((dim, o))
                if e is None:
                    row += f"{'-':>13}"
                else:
                    star = "*" if e["significant"] else ""
                    row += f"{e['gamma']:+.4f}{star}".rjust(13)
            lines.append(row)
        lines.append("")
    failures = report.get("failures", [])
    if failures:
        lines.append("failed cells:")
        for f in failures:
            lines.append(f"  {f['method']}/{f['dimension']}/{f['outcome']}: {f['error']}")
        lines.append("")
    lines.append("* adjusted p <= 0.01 (Benjamini-Hochberg)")
    return "\n".join(lines) + "\n"


# --- subcommands ----------------------------------------------------------------

def _cmd_synth(args) -> int:
    from .synth import CorpusGenerator, SynthConfig, SynthError, write_corpus

    try:
        cfg = SynthConfig(
            seed=args.seed,
            n_submissions=args.submissions,
            n_reviewers=args.reviewers,
            reviewers_per_paper=tuple(args.slate_probs),
            noise_sd=args.noise_sd,
        )
        gen = CorpusGenerator(cfg)
        for spec in args.plant or []:
            parts = spec.split(":")
            if len(parts) != 3:
                raise SynthError(f"--plant expects dimension:outcome:gamma, got {spec!r}")
            gen.plant_effect(parts[0], parts[1], float(parts[2]))
    except (SynthError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    bundle = gen.generate()
    write_corpus(bundle, args.out)
    print(f"wrote synthetic corpus to {args.out}")
    return EXIT_OK


def _cmd_annotate_fallback(args) -> int:
    try:
        corpus = load_corpus(CorpusPaths.in_dir(args.data))
    except CorpusError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    docs = _annotate_corpus(corpus, args.dim, args.seed)
    write_annotations(
        [docs[k] for k in sorted(docs)], args.out, model="fallback-hash", dim=args.dim
    )
    print(f"wrote annotations for {len(docs)} documents to {args.out}")
    return EXIT_OK


def _cmd_export_sentences(args) -> int:
    try:
        corpus = load_corpus(CorpusPaths.in_dir(args.data))
    except CorpusError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    with open(args.out, "w", encoding="utf-8") as f:
        for rid in sorted(corpus.reviews):
            for i, s in enumerate(corpus.reviews[rid].sentences):
                f.write(json.dumps(
                    {"doc_id": review_doc_id(rid), "sentence_index": i, "text": s},
                    sort_keys=True,
                ) + "\n")
        for sid in sorted(corpus.submissions):
            for i, s in enumerate(corpus.submissions[sid].abstract_sentences):
                f.write(json.dumps(
                    {"doc_id": abstract_doc_id(sid), "sentence_index": i, "text": s},
                    sort_keys=True,
                ) + "\n")
    print(f"wrote sentences to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    try:
        corpus = load_corpus(CorpusPaths.in_dir(args.data))
        if args.annotations:
            annotations = load_annotations(args.annotations)
        else:
            annotations = _annotate_corpus(corpus, args.dim, args.seed)
        table = fit_calibration(
            corpus, annotations, percentiles=(args.lo, args.hi), reference_id=args.data
        )
    except (CorpusError, AnnotationError, CalibrationError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    table.save(args.out)
    print(f"wrote calibration table to {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        obj = {}
        if args.config:
            obj = json.loads(Path(args.config).read_text())
        for key, val in (
            ("seed", args.seed),
            ("permutations", args.permutations),
            ("fdr", args.fdr),
            ("method", args.method),
            ("data_dir", args.data),
            ("out_dir", args.out),
        ):
            if val is not None:
                obj[key] = val
        if args.dimension:
            obj["dimensions"] = [args.dimension]
        if args.outcome:
            obj["outcomes"] = [args.outcome]
        cfg = PipelineConfig.from_json(obj)
    except (ConfigError, TypeError, json.JSONDecodeError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_pipeline(cfg, parallelism=args.parallelism, resume=args.resume)
    except (CorpusError, AnnotationError, CalibrationError, TopicModelError,
            DiversityError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (CausalError, StatsError) as e:
        print(f"estimation error: {e}", file=sys.stderr)
        return EXIT_ESTIMATION
    if not report["estimates"]:
        print("estimation error: no cell produced an estimate", file=sys.stderr)
        return EXIT_ESTIMATION
    print(render_report(report))
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.effects).read_text())
        if report.get("schema") != EFFECTS_SCHEMA:
            raise ConfigError(f"unexpected effects schema {report.get('schema')!r}")
    except (OSError, json.JSONDecodeError, ConfigError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    text = render_report(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slate-lens",
        description="Review-slate coverage/redundancy analytics and diversity effect estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--submissions", type=int, default=100)
    p.add_argument("--reviewers", type=int, default=60)
    p.add_argument("--slate-probs", type=float, nargs=3, default=[0.0, 1.0, 0.0],
                   metavar=("P2", "P3", "P4"))
    p.add_argument("--noise-sd", type=float, default=0.08)
    p.add_argument("--plant", action="append", metavar="DIM:OUTCOME:GAMMA")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("annotate-fallback", help="annotate a corpus with the hash fallback")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_annotate_fallback)

    p = sub.add_parser("export-sentences", help="export sentences for an external annotator")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_sentences)

    p = sub.add_parser("calibrate", help="fit a calibration table on a reference corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--annotations")
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=99.0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--dimension", choices=DIMENSIONS)
    p.add_argument("--outcome", choices=ALL_OUTCOMES)
    p.add_argument("--method", choices=("parametric", "nonparametric", "both"))
    p.add_argument("--permutations", type=int)
    p.add_argument("--fdr", type=float)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--parallelism", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="render an effects.json file")
    p.add_argument("--effects", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags, which matches the config exit code
        return int(e.code) if e.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

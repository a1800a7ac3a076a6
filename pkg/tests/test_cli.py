import json
from pathlib import Path

import pytest

from slate_lens.cli import PipelineConfig, main, render_report
from slate_lens.cli import ConfigError

GOLDEN = Path(__file__).parent / "data" / "golden_report.txt"


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    data = tmp_path_factory.mktemp("cli") / "data"
    rc = main([
        "synth", "--out", str(data), "--seed", "3",
        "--submissions", "60", "--reviewers", "30",
        "--plant", "coauthorship:semantic_redundancy:-0.05",
    ])
    assert rc == 0
    return data


def _run_config(data, out, **over):
    obj = {
        "data_dir": str(data),
        "out_dir": str(out),
        "annotation_source": "sidecar",
        "annotations_path": str(data / "annotations.jsonl"),
        "permutations": 300,
    }
    obj.update(over)
    return obj


def test_run_produces_effects_and_report(tmp_path, corpus_dir):
    cfg_path = tmp_path / "cfg.json"
    out = tmp_path / "out"
    cfg_path.write_text(json.dumps(_run_config(corpus_dir, out)))
    rc = main(["run", "--config", str(cfg_path), "--seed", "5"])
    assert rc == 0
    report = json.loads((out / "effects.json").read_text())
    assert report["schema"] == "slate-lens/effects/v1"
    assert report["estimates"]
    for e in report["estimates"]:
        assert set(e) == {
            "dimension", "outcome", "method", "gamma", "se", "p", "p_adj",
            "n", "n_dropped", "significant",
        }
    assert (out / "report.txt").exists()
    # checkpoints for each stage are on disk
    for name in ("topic_model.json", "reviewer_topics.json", "thresholds.json",
                 "treatments.json", "measures_raw.json", "calibration.json",
                 "measures.json"):
        assert (out / name).exists(), name


def test_run_resume_and_parallelism_byte_identical(tmp_path, corpus_dir):
    cfg_path = tmp_path / "cfg.json"
    out = tmp_path / "out"
    cfg_path.write_text(json.dumps(_run_config(corpus_dir, out)))
    assert main(["run", "--config", str(cfg_path), "--seed", "5"]) == 0
    first = (out / "effects.json").read_bytes()
    assert main(["run", "--config", str(cfg_path), "--seed", "5",
                 "--resume", "--parallelism", "8"]) == 0
    assert (out / "effects.json").read_bytes() == first
    assert main(["run", "--config", str(cfg_path), "--seed", "5",
                 "--parallelism", "8"]) == 0
    assert (out / "effects.json").read_bytes() == first


def test_exit_code_2_on_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"method": "bayesian"}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_exit_code_3_on_missing_data(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data_dir": str(tmp_path / "nowhere"),
                               "out_dir": str(tmp_path / "out")}))
    assert main(["run", "--config", str(cfg)]) == 3


def test_config_validation_messages():
    with pytest.raises(ConfigError):
        PipelineConfig(annotation_source="sidecar").validate()
    with pytest.raises(ConfigError):
        PipelineConfig(fdr=1.5).validate()
    with pytest.raises(ConfigError):
        PipelineConfig.from_json({"bogus_key": 1})


def test_report_subcommand_renders(tmp_path, corpus_dir):
    cfg_path = tmp_path / "cfg.json"
    out = tmp_path / "out"
    cfg_path.write_text(json.dumps(_run_config(corpus_dir, out)))
    assert main(["run", "--config", str(cfg_path), "--seed", "5"]) == 0
    rendered = tmp_path / "report.txt"
    assert main(["report", "--effects", str(out / "effects.json"),
                 "--out", str(rendered)]) == 0
    assert rendered.read_text() == (out / "report.txt").read_text()


def test_report_golden_file(tmp_path, corpus_dir):
    """Rendered report is byte-for-byte reproducible against the checked-in
    golden file for a pinned config and seed."""
    cfg_path = tmp_path / "cfg.json"
    out = tmp_path / "out"
    cfg_path.write_text(json.dumps(_run_config(corpus_dir, out)))
    assert main(["run", "--config", str(cfg_path), "--seed", "7"]) == 0
    got = (out / "report.txt").read_text()
    assert got == GOLDEN.read_text()


def test_annotate_fallback_and_calibrate(tmp_path, corpus_dir):
    ann = tmp_path / "ann.jsonl"
    assert main(["annotate-fallback", "--data", str(corpus_dir),
                 "--out", str(ann), "--dim", "64"]) == 0
    header = json.loads(ann.read_text().splitlines()[0])
    assert header["dim"] == 64
    cal = tmp_path / "cal.json"
    assert main(["calibrate", "--data", str(corpus_dir),
                 "--annotations", str(ann), "--out", str(cal)]) == 0
    obj = json.loads(cal.read_text())
    assert obj["bounds"]


def test_export_sentences(tmp_path, corpus_dir):
    path = tmp_path / "sentences.jsonl"
    assert main(["export-sentences", "--data", str(corpus_dir),
                 "--out", str(path)]) == 0
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert lines
    assert all(set(l) == {"doc_id", "sentence_index", "text"} for l in lines)
    review_lines = [l for l in lines if l["doc_id"].startswith("review:")]
    abstract_lines = [l for l in lines if l["doc_id"].startswith("abstract:")]
    assert review_lines and abstract_lines


def test_render_report_marks_significance():
    report = {
        "schema": "slate-lens/effects/v1",
        "estimates": [
            {"dimension": "topical", "outcome": "semantic_redundancy",
             "method": "parametric", "gamma": -0.05, "se": 0.01, "p": 1e-5,
             "p_adj": 1e-4, "n": 100, "n_dropped": 0, "significant": True},
            {"dimension": "topical", "outcome": "lexical_coverage",
             "method": "parametric", "gamma": 0.01, "se": 0.01, "p": 0.3,
             "p_adj": 0.4, "n": 100, "n_dropped": 0, "significant": False},
        ],
        "failures": [],
    }
    text = render_report(report)
    assert "-0.0500*" in text
    assert "+0.0100*" not in text

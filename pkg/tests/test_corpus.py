import json

import pytest

from slate_lens.corpus import (
    CorpusError,
    CorpusPaths,
    abstract_doc_id,
    load_corpus,
    merge_review_fields,
    review_doc_id,
    split_sentences,
)
from slate_lens.synth import CorpusGenerator, SynthConfig, write_corpus


def test_split_sentences_basic():
    assert split_sentences("First point. Second point! Third?") == [
        "First point.", "Second point!", "Third?",
    ]


def test_split_sentences_guards_abbreviations():
    got = split_sentences("The method (cf. Smith et al. 2019) works. It is fast.")
    assert len(got) == 2


def test_split_sentences_no_terminal_punctuation():
    assert split_sentences("no punctuation at all") == ["no punctuation at all"]


def test_merge_review_fields_joins_nonempty():
    assert merge_review_fields("A.", "", "B.", "C.") == "A.\nB.\nC."


def test_doc_id_conventions():
    assert review_doc_id("r1") == "review:r1"
    assert abstract_doc_id("s1") == "abstract:s1"


def test_corpus_roundtrip(tmp_path, small_bundle):
    write_corpus(small_bundle, tmp_path)
    corpus = load_corpus(CorpusPaths.in_dir(tmp_path))
    src = small_bundle.corpus
    assert set(corpus.submissions) == set(src.submissions)
    assert set(corpus.reviews) == set(src.reviews)
    assert set(corpus.reviewers) == set(src.reviewers)
    assert corpus.organization_index == src.organization_index
    assert corpus.region_names == src.region_names
    sid = sorted(corpus.submissions)[0]
    assert (
        corpus.submissions[sid].abstract_sentences
        == src.submissions[sid].abstract_sentences
    )
    assert corpus.expertise == src.expertise


def test_reviews_of_sorted_by_reviewer(small_bundle):
    corpus = small_bundle.corpus
    for sid in corpus.submissions:
        docs = corpus.reviews_of(sid)
        ids = [d.reviewer_id for d in docs]
        assert ids == sorted(ids)


def test_empty_reviews_file_is_valid(tmp_path, small_bundle):
    write_corpus(small_bundle, tmp_path)
    (tmp_path / "reviews.jsonl").write_text("")
    corpus = load_corpus(CorpusPaths.in_dir(tmp_path))
    assert corpus.reviews == {}


def test_load_rejects_unknown_reviewer_assignment(tmp_path, small_bundle):
    write_corpus(small_bundle, tmp_path)
    path = tmp_path / "assignments.jsonl"
    lines = path.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["reviewer_id"] = "ghost"
    lines[0] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorpusError):
        load_corpus(CorpusPaths.in_dir(tmp_path))

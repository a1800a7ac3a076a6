import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slate_lens.calibration import (
    CalibrationError,
    CalibrationTable,
    fit_calibration,
    normalize_outcome,
)
from slate_lens.outcomes import CALIBRATED_OUTCOMES

from oracles import brute_percentile


def _table(lo=0.0, hi=10.0):
    return CalibrationTable(
        reference="test",
        percentiles=(1.0, 99.0),
        bounds={m: (lo, hi) for m in CALIBRATED_OUTCOMES},
    )


def test_normalize_linear_inside_bounds():
    t = _table(2.0, 12.0)
    assert normalize_outcome(7.0, "lexical_coverage", t) == pytest.approx(0.5)


def test_normalize_clips_outside_bounds():
    t = _table(0.0, 1.0)
    assert normalize_outcome(-5.0, "semantic_coverage", t) == 0.0
    assert normalize_outcome(9.0, "semantic_coverage", t) == 1.0


def test_normalize_unknown_measure_raises():
    with pytest.raises(CalibrationError):
        normalize_outcome(0.5, "not_a_measure", _table())


@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=60),
       st.floats(min_value=0, max_value=100))
@settings(max_examples=60, deadline=None)
def test_percentile_convention_matches_sorting_oracle(values, q):
    assert np.percentile(values, q) == pytest.approx(
        brute_percentile(values, q), abs=1e-9
    )


def test_fit_calibration_uses_percentiles(small_bundle):
    table = fit_calibration(
        small_bundle.corpus, small_bundle.annotations, percentiles=(5.0, 95.0)
    )
    assert table.percentiles == (5.0, 95.0)
    assert set(table.bounds) == set(CALIBRATED_OUTCOMES)
    for lo, hi in table.bounds.values():
        assert lo < hi


def test_fit_calibration_requires_enough_submissions(small_bundle):
    corpus = small_bundle.corpus
    # rebuild a corpus view with too few multi-review submissions
    import dataclasses

    keep = sorted(corpus.submissions)[:5]
    small = dataclasses.replace(
        corpus,
        submissions={s: corpus.submissions[s] for s in keep},
        reviews={
            rid: doc for rid, doc in corpus.reviews.items()
            if doc.submission_id in keep
        },
    )
    with pytest.raises(CalibrationError):
        fit_calibration(small, small_bundle.annotations)


def test_table_roundtrip(tmp_path):
    t = _table(1.5, 4.5)
    path = tmp_path / "cal.json"
    t.save(path)
    loaded = CalibrationTable.load(path)
    assert loaded == t

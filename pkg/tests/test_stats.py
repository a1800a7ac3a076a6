import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slate_lens.stats import (
    RankDeficiencyError,
    SeparationError,
    StatsError,
    bh_correct,
    derive_seed,
    fit_logistic,
    fit_wls,
    pearson_r,
    permutation_test_paired,
)

from oracles import (
    brute_bh_adjusted,
    brute_bh_reject,
    brute_exact_permutation_p,
    brute_wls,
)


def _well_conditioned_system(rng, n=40, k=4):
    X = rng.normal(size=(n, k))
    X[:, 0] = 1.0
    beta = rng.normal(size=k)
    y = X @ beta + 0.1 * rng.normal(size=n)
    w = rng.uniform(0.5, 2.0, size=n)
    return X, y, w


@pytest.mark.parametrize("seed", range(20))
def test_wls_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    X, y, w = _well_conditioned_system(rng)
    fit = fit_wls(X, y, w=w)
    beta, se = brute_wls(X, y, w)
    assert np.allclose(fit.coefficients, beta, atol=1e-8)
    assert np.allclose(fit.standard_errors, se, atol=1e-8)


def test_wls_unweighted_matches_oracle():
    rng = np.random.default_rng(99)
    X, y, _ = _well_conditioned_system(rng)
    fit = fit_wls(X, y)
    beta, se = brute_wls(X, y)
    assert np.allclose(fit.coefficients, beta, atol=1e-10)
    assert np.allclose(fit.standard_errors, se, atol=1e-10)


def test_wls_names_collinear_columns():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3))
    X = np.column_stack([X, X[:, 1] + X[:, 2]])
    y = rng.normal(size=30)
    with pytest.raises(RankDeficiencyError) as exc:
        fit_wls(X, y, column_names=["a", "b", "c", "bc"])
    assert exc.value.columns  # at least one column is identified by name


def test_wls_rejects_bad_shapes():
    with pytest.raises(StatsError):
        fit_wls(np.ones((3, 5)), np.ones(3))


def test_logistic_recovers_coefficients():
    rng = np.random.default_rng(2)
    n = 4000
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    beta = np.array([-0.3, 0.8, -0.5])
    p = 1 / (1 + np.exp(-(X @ beta)))
    y = (rng.uniform(size=n) < p).astype(float)
    fit = fit_logistic(X, y, l2=1e-6)
    assert np.allclose(fit.coefficients, beta, atol=0.15)
    preds = 1 / (1 + np.exp(-(X @ fit.coefficients)))
    assert np.all((preds > 0) & (preds < 1))


def test_logistic_flags_separation():
    X = np.column_stack([np.ones(20), np.arange(20.0)])
    y = (np.arange(20) >= 10).astype(float)
    with pytest.raises(SeparationError):
        fit_logistic(X, y, l2=0.0)


@pytest.mark.parametrize("seed", range(10))
def test_exact_permutation_matches_enumeration_oracle(seed):
    rng = np.random.default_rng(seed)
    diffs = rng.normal(0.2, 1.0, size=int(rng.integers(2, 9)))
    res = permutation_test_paired(diffs, mode="exact")
    assert res.p_value == pytest.approx(brute_exact_permutation_p(diffs), abs=1e-12)


def test_sampled_permutation_approximates_exact():
    rng = np.random.default_rng(8)
    diffs = rng.normal(0.4, 1.0, size=12)
    exact = permutation_test_paired(diffs, mode="exact").p_value
    sampled = permutation_test_paired(diffs, permutations=20000, seed=3, mode="sampled")
    assert sampled.p_value == pytest.approx(exact, abs=0.02)


def test_sampled_permutation_seed_determinism():
    diffs = np.array([0.3, -0.1, 0.2, 0.5, -0.4])
    a = permutation_test_paired(diffs, permutations=500, seed=42)
    b = permutation_test_paired(diffs, permutations=500, seed=42)
    c = permutation_test_paired(diffs, permutations=500, seed=43)
    assert a.p_value == b.p_value
    assert a.p_value != c.p_value or a.p_value in (1.0, 1 / 501)


@pytest.mark.parametrize("seed", range(25))
def test_bh_matches_direct_formula(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 40))
    p = rng.uniform(size=m)
    q = float(rng.uniform(0.01, 0.2))
    rejected, adjusted = bh_correct(p, q)
    assert list(rejected) == brute_bh_reject(list(p), q)
    assert np.allclose(adjusted, brute_bh_adjusted(list(p)), atol=1e-12)


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=50),
       st.floats(min_value=0.01, max_value=0.2))
@settings(max_examples=80, deadline=None)
def test_bh_adjusted_monotone_in_p_order(ps, q):
    rejected, adjusted = bh_correct(np.array(ps), q)
    order = np.argsort(ps, kind="stable")
    sorted_adj = np.array(adjusted)[order]
    assert np.all(np.diff(sorted_adj) >= -1e-12)
    assert np.all((np.array(adjusted) >= np.array(ps) - 1e-12))
    # rejection set is a prefix of the sorted p-values
    flags = np.array(rejected)[order]
    if flags.any():
        last = np.max(np.nonzero(flags))
        assert flags[: last + 1].all()


def test_pearson_r_perfect_and_independent():
    x = np.arange(10.0)
    r_pos, p_pos = pearson_r(x, 2 * x + 1)
    r_neg, _ = pearson_r(x, -x)
    assert r_pos == pytest.approx(1.0)
    assert r_neg == pytest.approx(-1.0)
    assert p_pos < 1e-6


def test_derive_seed_stable_and_distinct():
    a = derive_seed(0, "cell", "organization", "lexical_coverage")
    b = derive_seed(0, "cell", "organization", "lexical_coverage")
    c = derive_seed(0, "cell", "organization", "semantic_coverage")
    assert a == b != c
    assert 0 <= a < 2**63

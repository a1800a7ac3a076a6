"""Statistical kernel: weighted least squares, regularized logistic
regression, paired sign-flip permutation test, Benjamini-Hochberg
correction, Pearson correlation.

Everything is pure given its inputs. scipy supplies decompositions and
distribution tails; the procedures themselves live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy import stats as sps


class StatsError(ValueError):
    pass


class RankDeficiencyError(StatsError):
    def __init__(self, columns: list):
        self.columns = columns
        super().__init__(f"design matrix is rank deficient; collinear columns: {columns}")


class SeparationError(StatsError):
    pass


@dataclass
class RegressionFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    weights: np.ndarray
    condition_number: float
    dof: int
    column_names: Optional[list[str]] = None
    probabilities: Optional[np.ndarray] = None  # logistic only
    converged: bool = True
    n_iter: int = 0


@dataclass
class TestResult:
    statistic: float
    p_value: float
    method: str
    replications: int = 0


def _column_labels(k: int, names: Optional[Sequence[str]]) -> list[str]:
    if names is not None:
        return list(names)
    return [f"x{j}" for j in range(k)]


def fit_wls(
    X: np.ndarray,
    y: np.ndarray,
    w: Optional[np.ndarray] = None,
    column_names: Optional[Sequence[str]] = None,
) -> RegressionFit:
    """Weighted least squares via pivoted QR.

    Minimizes sum_i w_i (y_i - x_i . beta)^2. Standard errors come from the
    weighted normal-equations covariance with sigma^2 = weighted RSS / (n-k);
    two-sided p-values use the t distribution with n-k degrees of freedom.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if w is None:
        w = np.ones(n)
    w = np.asarray(w, dtype=np.float64)
    if len(y) != n or len(w) != n:
        raise StatsError("X, y, w must have matching row counts")
    if n <= k:
        raise StatsError(f"need more rows ({n}) than columns ({k})")
    if np.any(w <= 0):
        raise StatsError("weights must be strictly positive")

    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    yw = y * sw
    Q, R, piv = linalg.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, k) * np.finfo(np.float64).eps * (diag[0] if diag[0] > 0 else 1.0)
    rank = int(np.sum(diag > tol))
    if rank < k:
        labels = _column_labels(k, column_names)
        raise RankDeficiencyError([labels[j] for j in piv[rank:]])

    qty = Q.T @ yw
    beta_piv = linalg.solve_triangular(R, qty)
    beta = np.empty(k)
    beta[piv] = beta_piv

    residuals = y - X @ beta
    dof = n - k
    wrss = float(np.sum(w * residuals**2))
    sigma2 = wrss / dof
    r_inv = linalg.solve_triangular(R, np.eye(k))
    cov_piv = sigma2 * (r_inv @ r_inv.T)
    se = np.empty(k)
    se[piv] = np.sqrt(np.diag(cov_piv))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0, beta / se, np.inf)
    p = 2.0 * sps.t.sf(np.abs(tstats), dof)
    cond = float(diag[0] / diag[-1]) if diag[-1] > 0 else np.inf
    return RegressionFit(
        coefficients=beta,
        standard_errors=se,
        p_values=p,
        residuals=residuals,
        weights=w,
        condition_number=cond,
        dof=dof,
        column_names=list(column_names) if column_names is not None else None,
    )


def fit_logistic(
    X: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
    max_iter: int = 100,
    tol: float = 1e-8,
    column_names: Optional[Sequence[str]] = None,
) -> RegressionFit:
    """L2-penalized logistic regression by iteratively reweighted least
    squares. The penalty applies to all coefficients uniformly. Returns
    in-sample probabilities; Wald standard errors from the penalized Hessian.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n, k = X.shape
    if len(y) != n:
        raise StatsError("X and labels must have matching row counts")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise StatsError("labels must be binary 0/1")
    if y.min() == y.max():
        raise StatsError("both classes must be present")
    if l2 < 0:
        raise StatsError("l2 penalty must be non-negative")

    beta = np.zeros(k)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -35, 35)))
        W = p * (1.0 - p)
        grad = X.T @ (y - p) - l2 * beta
        H = (X.T * W) @ X + l2 * np.eye(k)
        try:
            step = linalg.solve(H, grad, assume_a="pos")
        except linalg.LinAlgError as e:
            if l2 == 0:
                raise SeparationError(
                    "singular Hessian (likely separation); refit with l2 > 0"
                ) from e
            raise
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break

    if not converged and l2 == 0:
        raise SeparationError(
            "logistic fit did not converge with l2 = 0 (possible separation); "
            "refit with l2 > 0"
        )

    eta = X @ beta
    probs = 1.0 / (1.0 + np.exp(-np.clip(eta, -35, 35)))
    W = probs * (1.0 - probs)
    H = (X.T * W) @ X + l2 * np.eye(k)
    cov = linalg.inv(H)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.inf)
    p_values = 2.0 * sps.norm.sf(np.abs(z))
    return RegressionFit(
        coefficients=beta,
        standard_errors=se,
        p_values=p_values,
        residuals=y - probs,
        weights=np.ones(n),
        condition_number=float(np.linalg.cond(H)),
        dof=n - k,
        column_names=list(column_names) if column_names is not None else None,
        probabilities=probs,
        converged=converged,
        n_iter=it,
    )


def permutation_test_paired(
    diffs: np.ndarray,
    permutations: int = 10000,
    seed: int = 0,
    mode: str = "sampled",
) -> TestResult:
    """Two-sided sign-flip permutation test on paired differences.

    statistic = mean(diffs). Sampled mode uses the add-one convention
    p = (1 + #{|perm| >= |obs|}) / (P + 1); exact mode enumerates all 2^n
    sign patterns (n <= 20).
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    n = len(diffs)
    if n < 1:
        raise StatsError("need at least one paired difference")
    observed = float(diffs.mean())
    threshold = abs(observed) - 1e-12

    if mode == "exact":
        if n > 20:
            raise StatsError("exact mode requires n <= 20")
        total = 2**n
        shifts = np.arange(n, dtype=np.uint64)
        count = 0
        for start in range(0, total, 1 << 16):
            patterns = np.arange(start, min(start + (1 << 16), total), dtype=np.uint64)
            signs = np.where((patterns[:, None] >> shifts) & 1, 1.0, -1.0)
            perm_stats = signs @ diffs / n
            count += int(np.sum(np.abs(perm_stats) >= threshold))
        return TestResult(
            statistic=observed,
            p_value=count / 2**n,
            method="permutation-exact",
            replications=2**n,
        )
    if mode == "sampled":
        if permutations < 100:
            raise StatsError("sampled mode requires at least 100 permutations")
        rng = np.random.Generator(np.random.Philox(key=seed))
        count = 0
        chunk = 200000 // max(n, 1) + 1
        done = 0
        while done < permutations:
            m = min(chunk, permutations - done)
            signs = rng.integers(0, 2, size=(m, n)) * 2.0 - 1.0
            perm_stats = signs @ diffs / n
            count += int(np.sum(np.abs(perm_stats) >= threshold))
            done += m
        return TestResult(
            statistic=observed,
            p_value=(1 + count) / (permutations + 1),
            method="permutation-sampled",
            replications=permutations,
        )
    raise StatsError(f"unknown mode {mode!r}")


def bh_correct(p_values: np.ndarray, fdr: float) -> tuple[np.ndarray, np.ndarray]:
    """Benjamini-Hochberg step-up rule.

    Returns (rejected, adjusted) in input order. adjusted is the standard
    monotone-enforced min(1, p_(i) * m / i).
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        raise StatsError("empty p-value vector")
    if np.any(p < 0) or np.any(p > 1):
        raise StatsError("p-values must lie in [0,1]")
    if not 0 < fdr < 1:
        raise StatsError("fdr must lie in (0,1)")
    m = p.size
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    ranks = np.arange(1, m + 1)

    passing = sorted_p <= ranks * fdr / m
    k = int(np.max(ranks[passing])) if np.any(passing) else 0
    rejected = np.zeros(m, dtype=bool)
    rejected[order[:k]] = True

    adjusted_sorted = np.minimum.accumulate((sorted_p * m / ranks)[::-1])[::-1]
    adjusted_sorted = np.minimum(adjusted_sorted, 1.0)
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return rejected, adjusted


def pearson_r(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Product-moment correlation with a two-sided t-test (n-2 dof)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if len(y) != n:
        raise StatsError("x and y must have equal length")
    if n < 3:
        raise StatsError("need at least 3 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.sum(xc**2)))
    sy = float(np.sqrt(np.sum(yc**2)))
    if sx == 0 or sy == 0:
        raise StatsError("constant vector: correlation undefined")
    r = float(np.sum(xc * yc) / (sx * sy))
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1 - r**2))
    p = 2.0 * sps.t.sf(abs(t), n - 2)
    return r, float(p)


def derive_seed(master: int, *parts) -> int:
    """Stable per-task seed derived from a master seed and labels."""
    import hashlib

    text = ":".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    # keep within signed 64-bit range for downstream integer RNG states
    return int.from_bytes(digest, "big") >> 1

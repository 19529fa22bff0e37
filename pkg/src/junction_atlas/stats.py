"""Statistical battery: one-way ANOVA, Games-Howell pairwise comparisons,
Pearson correlation, logistic regression via IRLS, and ROC AUC.

Statistics always use the full data; any outlier trimming is a rendering
concern elsewhere. p-values come from the special-function module rather
than lookup tables.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .special import f_sf, student_t_sf2, studentized_range_cdf


@dataclass
class TestResult:
    statistic: float
    df: tuple[float, ...]
    p_value: float
    method: str
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": list(self.df),
            "p": self.p_value,
            "method": self.method,
            "degenerate": self.degenerate,
        }


@dataclass
class PairwiseResult:
    label_a: str
    label_b: str
    result: TestResult


@dataclass
class LogisticModel:
    coefficients: np.ndarray      # (intercept, then one slope per feature)
    std_errors: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    ll_history: list[float] = field(default_factory=list)


def _group_arrays(groups):
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least 2 groups")
    for g in arrays:
        if g.size < 2:
            raise ValueError("each group needs at least 2 values")
    return arrays


def one_way_anova(groups) -> TestResult:
    """Classic F test of equal group means.

    Zero within-group variance degenerates: equal means give F = 0, p = 1;
    unequal means give p = 0 with the degenerate flag set.
    """
    arrays = _group_arrays(groups)
    k = len(arrays)
    n_total = sum(g.size for g in arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df_b, df_w = float(k - 1), float(n_total - k)
    if ss_within == 0.0:
        if ss_between == 0.0:
            return TestResult(0.0, (df_b, df_w), 1.0, "one-way ANOVA")
        return TestResult(math.inf, (df_b, df_w), 0.0, "one-way ANOVA",
                          degenerate=True)
    f = (ss_between / df_b) / (ss_within / df_w)
    return TestResult(f, (df_b, df_w), f_sf(f, df_b, df_w), "one-way ANOVA")


def games_howell(groups, labels=None) -> list[PairwiseResult]:
    """Pairwise comparisons under unequal variances.

    Per pair: Welch-type t statistic, Welch-Satterthwaite degrees of
    freedom, and a p-value from the studentized range distribution with
    q = t * sqrt(2) and k equal to the total number of groups. Pairs
    involving a single-value group are skipped with a warning.
    """
    arrays = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError("need at least 2 groups")
    if labels is None:
        labels = [f"group{i}" for i in range(k)]
    for label, g in zip(labels, arrays):
        if g.size < 2:
            warnings.warn(f"group {label!r} has fewer than 2 values; "
                          "its pairs are skipped")
    means = [g.mean() if g.size else math.nan for g in arrays]
    variances = [g.var(ddof=1) if g.size >= 2 else math.nan for g in arrays]
    sizes = [g.size for g in arrays]
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            if sizes[i] < 2 or sizes[j] < 2:
                continue
            vi, vj = variances[i] / sizes[i], variances[j] / sizes[j]
            se2 = vi + vj
            if se2 == 0.0:
                result = TestResult(0.0, (float("nan"),), 1.0, "Games-Howell",
                                    degenerate=means[i] != means[j])
                if means[i] != means[j]:
                    result = TestResult(math.inf, (float("nan"),), 0.0,
                                        "Games-Howell", degenerate=True)
                out.append(PairwiseResult(labels[i], labels[j], result))
                continue
            t = abs(means[i] - means[j]) / math.sqrt(se2)
            df = se2 ** 2 / (
                vi ** 2 / (sizes[i] - 1) + vj ** 2 / (sizes[j] - 1)
            )
            p = 1.0 - studentized_range_cdf(t * math.sqrt(2.0), k, df)
            out.append(PairwiseResult(labels[i], labels[j],
                                      TestResult(t, (df,), p, "Games-Howell")))
    return out


def pearson_correlation(x, y) -> float:
    """Two-pass product-moment correlation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float((dx * dx).sum()))
    sy = math.sqrt(float((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    return float((dx * dy).sum()) / (sx * sy)


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # sum y*eta - log(1 + exp(eta)), stable
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_fit(features, labels, max_iter: int = 100, tol: float = 1e-8) -> LogisticModel:
    """Maximum-likelihood logistic regression via IRLS with step halving.

    Features are standardized internally; reported coefficients and standard
    errors are on the original scale. Perfect separation leaves the
    coefficients at the last iterate with ``converged`` False and a warning.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 3:
        raise ValueError("need at least 3 observations")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise ValueError("labels must be binary")
    if len(np.unique(y)) < 2:
        raise ValueError("both label classes must be present")

    mu_x = x.mean(axis=0)
    sd_x = x.std(axis=0)
    sd_x[sd_x == 0.0] = 1.0
    xs = np.column_stack([np.ones(n), (x - mu_x) / sd_x])
    p_feat = xs.shape[1]

    beta = np.zeros(p_feat)
    beta[0] = math.log(y.mean() / (1.0 - y.mean()))
    ll = _log_likelihood(xs @ beta, y)
    ll_history = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = xs @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(p * (1.0 - p), 1e-12)
        grad = xs.T @ (y - p)
        hess = xs.T @ (xs * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            ll_new = _log_likelihood(xs @ candidate, y)
            if ll_new >= ll - 1e-12:
                break
            scale /= 2.0
        beta = beta + scale * step
        ll = _log_likelihood(xs @ beta, y)
        ll_history.append(ll)
        if np.max(np.abs(scale * step)) < tol:
            converged = True
            break

    eta = xs @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    if not converged:
        margin = np.all((p > 1 - 1e-6) == (y == 1.0))
        reason = "perfect separation" if margin else "iteration cap"
        warnings.warn(f"logistic fit did not converge ({reason})")
    w = np.maximum(p * (1.0 - p), 1e-12)
    hess = xs.T @ (xs * w[:, None])
    try:
        cov_std = np.linalg.inv(hess)
        se_std = np.sqrt(np.diag(cov_std))
    except np.linalg.LinAlgError:
        se_std = np.full(p_feat, math.nan)

    # map standardized-scale estimates back to the original feature scale
    coef = np.empty(p_feat)
    se = np.empty(p_feat)
    coef[1:] = beta[1:] / sd_x
    se[1:] = se_std[1:] / sd_x
    coef[0] = beta[0] - float(np.sum(beta[1:] * mu_x / sd_x))
    # delta method for the intercept's standard error
    jac = np.ones(p_feat)
    jac[1:] = -mu_x / sd_x
    try:
        se[0] = math.sqrt(float(jac @ cov_std @ jac))
    except Exception:
        se[0] = math.nan
    return LogisticModel(
        coefficients=coef, std_errors=se, converged=converged,
        iterations=iterations, log_likelihood=ll, ll_history=ll_history,
    )


def roc_auc(scores, labels) -> float:
    """Rank-based AUC with midrank tie handling (Mann-Whitney)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined with a single class")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=float)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def anova_null_calibration(n_sims: int, group_sizes=(20, 20, 20), seed: int = 0):
    """p-values of the ANOVA under the null; feeds the uniformity check."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sims):
        groups = [rng.normal(0.0, 1.0, size) for size in group_sizes]
        out.append(one_way_anova(groups).p_value)
    return out

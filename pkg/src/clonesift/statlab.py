"""Regression and significance machinery for the model-selection study.

Feature standardization, ordinary least squares with classical
(non-robust) standard errors, per-feature hypothesis decisions, and the
paired-comparison tests: a Shapiro-Wilk normality gate that routes to the
paired t-test (normal differences) or the Wilcoxon signed-rank test
(otherwise).

Student-t and F tail probabilities go through the regularized incomplete
beta function, evaluated here with the standard continued-fraction scheme
(modified Lentz); the evaluation is accurate to ~1e-10 over the range used
by these tests. The Wilcoxon p-value uses the normal approximation with
tie correction and continuity correction; zero differences are dropped
first (classical treatment).

The sample (n-1) standard deviation convention is used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _scipy_stats
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    DegenerateSample,
    RankDeficient,
    TooFewNonzero,
    TooFewSamples,
    ZeroVariance,
)
from .validation import as_float_matrix, as_float_vector

# --- special functions -------------------------------------------------------

_BETA_EPS = 1e-14
_BETA_TINY = 1e-300
_BETA_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """One-sided upper tail P(T > t) of Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    x = df / (df + t * t)
    tail = 0.5 * reg_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def t_two_sided_p(t: float, df: float) -> float:
    return 2.0 * t_sf(abs(t), df)


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail P(F > f) of the F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0:
        return 1.0
    return reg_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# --- standardization -----------------------------------------------------------

class FeatureStandardizer(BaseEstimator, TransformerMixin):
    """Column-wise z-scoring with the sample standard deviation.

    Unlike sklearn's StandardScaler this refuses constant columns outright
    (ZeroVariance naming the column) instead of passing them through.
    """

    def __init__(self, feature_names: Sequence[str] | None = None):
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        names = list(self.feature_names) if self.feature_names else [
            f"x{i + 1}" for i in range(X.shape[1])
        ]
        scale = X.std(axis=0, ddof=1)
        for idx, s in enumerate(scale):
            if s == 0.0 or not np.isfinite(s):
                raise ZeroVariance(f"column {names[idx]!r} has zero spread")
        self.mean_ = X.mean(axis=0)
        self.scale_ = scale
        self.feature_names_ = names
        return self

    def transform(self, X):
        X = as_float_matrix(X)
        return (X - self.mean_) / self.scale_


def zscore_features(X, feature_names: Sequence[str] | None = None) -> np.ndarray:
    """One-shot column standardization: mean 0, sample stdev 1."""
    return FeatureStandardizer(feature_names=feature_names).fit(X).transform(X)


# --- ordinary least squares -----------------------------------------------------

@dataclass(frozen=True)
class RegressionDataset:
    """Predictor matrix plus observed recall percentages."""

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    row_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        X = as_float_matrix(self.X, "X")
        y = as_float_vector(self.y, "y")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must match X's column count")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        for j, name in enumerate(self.feature_names):
            if "other" in name.lower():
                col = set(np.unique(X[:, j]))
                if not col <= {0.0, 1.0}:
                    raise ValueError(f"indicator column {name!r} must be 0/1")


@dataclass(frozen=True)
class OlsFit:
    """OLS results with classical per-coefficient t-tests and the overall
    F-test. Coefficient order: intercept first, then features."""

    feature_names: tuple[str, ...]
    coefficients: tuple[float, ...]
    standard_errors: tuple[float, ...]
    t_values: tuple[float, ...]
    coefficient_p_values: tuple[float, ...]
    r_squared: float
    adj_r_squared: float
    f_statistic: float
    f_p_value: float
    residuals: tuple[float, ...]
    df_resid: int
    condition_number: float


class LeastSquaresRegressor(BaseEstimator):
    """Plain OLS with an intercept, exposing the inference quantities the
    hypothesis report needs (fit_ attribute after ``fit``)."""

    def __init__(self, feature_names: Sequence[str] | None = None):
        self.feature_names = feature_names

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y)
        names = tuple(self.feature_names) if self.feature_names else tuple(
            f"x{i + 1}" for i in range(X.shape[1])
        )
        n, p = X.shape
        if n <= p + 1:
            raise ValueError(f"need more than {p + 1} samples, got {n}")
        design = np.column_stack([np.ones(n), X])
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise RankDeficient("design matrix (with intercept) is rank deficient")
        beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
        fitted = design @ beta
        resid = y - fitted
        sse = float(resid @ resid)
        sst = float(((y - y.mean()) ** 2).sum())
        df_resid = n - p - 1
        r2 = 1.0 - sse / sst if sst > 0 else 1.0
        adj = 1.0 - (1.0 - r2) * (n - 1) / df_resid
        sigma2 = sse / df_resid
        cov = sigma2 * np.linalg.inv(design.T @ design)
        se = np.sqrt(np.diag(cov))
        tvals = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
        pvals = np.array([t_two_sided_p(t, df_resid) for t in tvals])
        if sst > 0 and sse > 0:
            f_stat = ((sst - sse) / p) / sigma2
            f_p = f_sf(f_stat, p, df_resid)
        else:
            f_stat, f_p = math.inf, 0.0
        self.fit_ = OlsFit(
            feature_names=names,
            coefficients=tuple(float(b) for b in beta),
            standard_errors=tuple(float(s) for s in se),
            t_values=tuple(float(t) for t in tvals),
            coefficient_p_values=tuple(float(v) for v in pvals),
            r_squared=float(r2),
            adj_r_squared=float(adj),
            f_statistic=float(f_stat),
            f_p_value=float(f_p),
            residuals=tuple(float(r) for r in resid),
            df_resid=int(df_resid),
            condition_number=float(np.linalg.cond(design)),
        )
        self.coef_ = np.asarray(beta[1:])
        self.intercept_ = float(beta[0])
        return self

    def predict(self, X):
        X = as_float_matrix(X)
        return self.intercept_ + X @ self.coef_


def ols_fit(dataset: RegressionDataset) -> OlsFit:
    """Least squares over an (already prepared) regression dataset."""
    model = LeastSquaresRegressor(feature_names=dataset.feature_names)
    model.fit(dataset.X, dataset.y)
    return model.fit_


def hypothesis_report(fit: OlsFit, alpha: float = 0.05) -> list[dict]:
    """Accept/reject the per-feature no-effect hypotheses H01..H0k.

    Rejection requires p strictly below alpha; p equal to alpha accepts.
    """
    report = []
    for idx, name in enumerate(fit.feature_names):
        coef = fit.coefficients[idx + 1]
        p = fit.coefficient_p_values[idx + 1]
        report.append({
            "hypothesis": f"H0{idx + 1}",
            "feature": name,
            "coefficient": coef,
            "sign": "+" if coef > 0 else ("-" if coef < 0 else "0"),
            "p_value": p,
            "decision": "rejected" if p < alpha else "accepted",
        })
    return report


# --- paired comparisons -----------------------------------------------------------

@dataclass(frozen=True)
class PairedSample:
    """Two aligned measurement series (e.g. ensemble vs. individual-max)."""

    name: str
    a: tuple[float, ...]
    b: tuple[float, ...]
    metric_label: str = "recall"

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        if len(a) != len(b) or len(a) < 2:
            raise ValueError("paired samples need equal lengths >= 2")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def differences(self) -> np.ndarray:
        return np.asarray(self.a, dtype=np.float64) - np.asarray(self.b, dtype=np.float64)


@dataclass(frozen=True)
class TestResult:
    test: str
    n: int
    mean_diff: float
    statistic: float
    p_value: float


def normality_check(differences: Sequence[float]) -> tuple[float, float]:
    """Shapiro-Wilk on the paired differences; the routing gate."""
    diffs = as_float_vector(np.asarray(differences, dtype=np.float64), "differences")
    if len(diffs) < 3:
        raise TooFewSamples("normality check needs at least 3 differences")
    if np.ptp(diffs) == 0.0:
        raise DegenerateSample("constant differences: normality is undefined")
    stat, p = _scipy_stats.shapiro(diffs)
    return float(stat), float(p)


def paired_t_test(sample: PairedSample) -> TestResult:
    """Classical paired t with n-1 degrees of freedom, two-sided."""
    d = sample.differences
    n = len(d)
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSample("differences have zero variance")
    mean = float(d.mean())
    t = mean / (sd / math.sqrt(n))
    return TestResult("paired-t", n, mean, t, t_two_sided_p(t, n - 1))


def wilcoxon_signed_rank(sample: PairedSample) -> TestResult:
    """Signed-rank test: zeros dropped, average ranks for ties, normal
    approximation with tie and continuity corrections, two-sided."""
    d = sample.differences
    nonzero = d[d != 0.0]
    n = len(nonzero)
    if n < 5:
        raise TooFewNonzero(f"need >= 5 nonzero differences, got {n}")
    ranks = _scipy_stats.rankdata(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(nonzero), return_counts=True)
    variance -= float(((counts ** 3 - counts).sum())) / 48.0
    if variance <= 0:
        raise DegenerateSample("all differences tie; variance collapsed")
    z = (abs(w_plus - mean) - 0.5) / math.sqrt(variance)
    z = max(z, 0.0)
    p = min(1.0, 2.0 * normal_sf(z))
    return TestResult("wilcoxon", n, float(d.mean()), w_plus, p)


@dataclass(frozen=True)
class RouteResult:
    normality_statistic: float
    normality_p: float
    chosen: str
    result: TestResult


def route_paired_test(sample: PairedSample, alpha: float = 0.05) -> RouteResult:
    """Normality-gated selection: t-test when the differences look normal
    (p >= alpha), Wilcoxon otherwise."""
    stat, p = normality_check(sample.differences)
    if p >= alpha:
        return RouteResult(stat, p, "paired-t", paired_t_test(sample))
    return RouteResult(stat, p, "wilcoxon", wilcoxon_signed_rank(sample))

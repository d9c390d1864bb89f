"""OLS core, augmented Dickey-Fuller test, and bivariate Granger causality.

The Granger test fits the nested pair of autoregressions for each lag k:
a restricted model of y on its own k lags, and an unrestricted model that
adds the k lags of the candidate cause x. Both are fit on the identical
effective sample (the first k rows are dropped). The F statistic

    F = ((SSR_restricted - SSR_unrestricted) / k)
        / (SSR_unrestricted / (T_eff - n_params_unrestricted))

is referred to the F(k, T_eff - n_params_unrestricted) upper tail.

Stationarity is screened with a constant-only ADF regression whose lag
order is picked by AIC; decisions use the large-sample Dickey-Fuller
critical values rather than interpolated p-values.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError, NumericError, RankDeficientError
from .special import f_sf

# Large-sample critical values for the constant-only Dickey-Fuller
# distribution; reject the unit root when the statistic is below the value.
ADF_CRITICAL_VALUES = {"1%": -3.43, "5%": -2.86, "10%": -2.57}

RANK_TOL = 1e-10


@dataclass
class OlsFit:
    """Least-squares fit with the Gaussian log likelihood at the MLE."""

    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float
    n_obs: int
    n_params: int
    log_likelihood: float


@dataclass
class AdfResult:
    statistic: float
    lags_used: int
    critical_values: dict[str, float]
    reject_unit_root: bool


@dataclass
class GrangerLagResult:
    lag: int
    f_stat: float
    p_value: float
    ssr_restricted: float
    ssr_unrestricted: float
    restrictions: int


class CausalCase(Enum):
    X_CAUSES_Y = "x-causes-y"
    Y_CAUSES_X = "y-causes-x"
    MUTUAL = "mutual"
    INDEPENDENT = "independent"


@dataclass
class GrangerReport:
    direction_xy: list[GrangerLagResult]
    direction_yx: list[GrangerLagResult]
    alpha: float
    max_lag: int
    case: CausalCase
    significant_lags_xy: list[int] = field(default_factory=list)
    significant_lags_yx: list[int] = field(default_factory=list)
    differenced_x: bool = False
    differenced_y: bool = False


def _qr_solve(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Solve min ||y - Xb|| by QR; returns (beta, residuals, ssr, R)."""
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    threshold = RANK_TOL * diag.max() if diag.max() > 0 else 0.0
    bad = np.nonzero(diag <= threshold)[0]
    if bad.size:
        raise RankDeficientError(
            f"rank-deficient design: column {int(bad[0])} is linearly dependent",
            column=int(bad[0]),
        )
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    return beta, resid, float(resid @ resid), r


def ols(y: np.ndarray, X: np.ndarray) -> OlsFit:
    """Ordinary least squares on a design matrix that includes its intercept.

    The log likelihood is the Gaussian MLE value with variance ssr / T,
    which is what the AIC/BIC formulas downstream expect.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or y.ndim != 1:
        raise InputError("ols expects a vector y and 2-D design matrix X")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"ols shape mismatch: {X.shape[0]} rows vs {y.shape[0]} targets")
    if X.shape[0] <= X.shape[1]:
        raise InputError(f"need more observations ({X.shape[0]}) than parameters ({X.shape[1]})")
    if not (np.isfinite(y).all() and np.isfinite(X).all()):
        raise NumericError("non-finite values in regression inputs")
    beta, resid, ssr, _ = _qr_solve(y, X)
    t = y.shape[0]
    if ssr > 0.0:
        sigma2 = ssr / t
        loglik = -0.5 * t * (math.log(2.0 * math.pi) + math.log(sigma2) + 1.0)
    else:
        loglik = math.inf
    return OlsFit(
        coefficients=beta,
        residuals=resid,
        ssr=ssr,
        n_obs=t,
        n_params=X.shape[1],
        log_likelihood=loglik,
    )


def _aic(fit: OlsFit) -> float:
    return 2.0 * fit.n_params - 2.0 * fit.log_likelihood


def _lag_matrix(x: np.ndarray, k: int) -> np.ndarray:
    """Columns x_{t-1}, ..., x_{t-k} for t = k .. len(x)-1."""
    return np.column_stack([x[k - j : len(x) - j] for j in range(1, k + 1)])


def _adf_design(series: np.ndarray, q: int, offset: int) -> tuple[np.ndarray, np.ndarray]:
    """ADF regression sample for q extra difference lags.

    `offset` fixes where the effective sample starts so that candidate lag
    orders can be compared on identical observations.
    """
    diff = np.diff(series)
    start = offset
    dy = diff[start:]
    t = len(dy)
    cols = [np.ones(t), series[start : start + t]]
    for j in range(1, q + 1):
        cols.append(diff[start - j : start - j + t])
    return dy, np.column_stack(cols)


def adf_test(series: np.ndarray, max_extra_lags: int | None = None) -> AdfResult:
    """Constant-only augmented Dickey-Fuller test with AIC lag selection.

    Regresses the first difference on a constant, the lagged level, and
    0..max_extra_lags lagged differences; the statistic is the t ratio of
    the lagged-level coefficient. Rejection is decided at 5% against the
    tabulated critical value.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise InputError("adf_test expects a 1-D series")
    n = len(series)
    if n < 20:
        raise InputError(f"series too short for ADF: {n} < 20")
    if max_extra_lags is None:
        # Schwert's rule, capped so the regression keeps spare observations.
        max_extra_lags = int(math.ceil(12.0 * (n / 100.0) ** 0.25))
    max_extra_lags = min(max_extra_lags, (n - 1) // 2 - 2)
    if max_extra_lags < 0:
        raise InputError(f"series too short for the requested ADF lags (n={n})")

    # Pick q on a common sample so the AICs are comparable.
    best_q, best_aic = 0, math.inf
    for q in range(max_extra_lags + 1):
        dy, X = _adf_design(series, q, offset=max_extra_lags)
        if len(dy) <= X.shape[1]:
            continue
        aic = _aic(ols(dy, X))
        if aic < best_aic:
            best_q, best_aic = q, aic

    # Refit at the chosen order on its full available sample.
    dy, X = _adf_design(series, best_q, offset=best_q)
    fit_beta, resid, ssr, r = _qr_solve(dy, X)
    t_obs, k_params = X.shape
    dof = t_obs - k_params
    if dof <= 0:
        raise InputError("series too short for the chosen ADF regression")
    sigma2 = ssr / dof
    r_inv = np.linalg.solve(r, np.eye(k_params))
    se = math.sqrt(sigma2 * float((r_inv @ r_inv.T)[1, 1]))
    if se == 0.0:
        raise NumericError("zero standard error in ADF regression")
    statistic = float(fit_beta[1] / se)
    return AdfResult(
        statistic=statistic,
        lags_used=best_q,
        critical_values=dict(ADF_CRITICAL_VALUES),
        reject_unit_root=statistic < ADF_CRITICAL_VALUES["5%"],
    )


def f_statistic(ssr_restricted: float, ssr_unrestricted: float, restrictions: int, dof: int) -> float:
    """Nested-model F statistic from the two sums of squared residuals."""
    if ssr_unrestricted <= 0.0:
        raise NumericError("unrestricted model fits exactly; F statistic undefined")
    if restrictions < 1 or dof < 1:
        raise InputError("restrictions and dof must be positive")
    value = ((ssr_restricted - ssr_unrestricted) / restrictions) / (ssr_unrestricted / dof)
    return max(value, 0.0)  # guard off tiny negative round-off


def granger_lag(
    y: np.ndarray, x: np.ndarray, k: int, denominator_dof: int | None = None
) -> GrangerLagResult:
    """F test that the k lags of x improve the prediction of y.

    `denominator_dof` overrides the default T_eff - (2k + 1) for
    cross-checking against packages with other conventions.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise InputError("granger_lag expects two equal-length 1-D series")
    if k < 1:
        raise InputError("lag must be >= 1")
    t_eff = len(y) - k
    n_params_u = 2 * k + 1
    if t_eff <= n_params_u:
        raise InputError(
            f"insufficient observations: {len(y)} rows support at most lag {(len(y) - 2) // 3}"
        )
    target = y[k:]
    own = _lag_matrix(y, k)
    cross = _lag_matrix(x, k)
    intercept = np.ones((t_eff, 1))
    restricted = ols(target, np.hstack([intercept, own]))
    unrestricted = ols(target, np.hstack([intercept, own, cross]))
    dof = t_eff - n_params_u if denominator_dof is None else denominator_dof
    ssr_r, ssr_u = restricted.ssr, unrestricted.ssr
    f_stat = f_statistic(ssr_r, ssr_u, k, dof)
    return GrangerLagResult(
        lag=k,
        f_stat=f_stat,
        p_value=f_sf(f_stat, k, dof),
        ssr_restricted=ssr_r,
        ssr_unrestricted=ssr_u,
        restrictions=k,
    )


def ensure_stationary(series: np.ndarray, name: str) -> tuple[np.ndarray, bool]:
    """ADF-screen a series; difference once and retest if it fails at 5%."""
    result = adf_test(series)
    if result.reject_unit_root:
        return np.asarray(series, dtype=float), False
    differenced = np.diff(series)
    retest = adf_test(differenced)
    if not retest.reject_unit_root:
        raise InputError(
            f"{name} is non-stationary even after one difference "
            f"(ADF statistic {retest.statistic:.3f} vs 5% critical {ADF_CRITICAL_VALUES['5%']})"
        )
    return differenced, True


def granger_sweep(
    y: np.ndarray,
    x: np.ndarray,
    max_lag: int,
    alpha: float = 0.05,
    threads: int | None = None,
) -> GrangerReport:
    """Test both directions at every lag 1..max_lag and classify the case.

    Raw per-lag p-values are reported; the causal-case verdict applies a
    Bonferroni correction (alpha / max_lag per lag) to keep the familywise
    error near alpha despite the lag sweep. Series failing the ADF screen
    are first-differenced once (both series are trimmed to stay aligned).
    """
    if max_lag < 1:
        raise InputError("max_lag must be >= 1")
    if not (0.0 < alpha < 1.0):
        raise InputError("alpha must be in (0, 1)")
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise InputError("granger_sweep expects two equal-length 1-D series")

    y_st, y_diff = ensure_stationary(y, "y")
    x_st, x_diff = ensure_stationary(x, "x")
    n = min(len(y_st), len(x_st))
    y_st, x_st = y_st[-n:], x_st[-n:]

    if threads is None:
        threads = int(os.environ.get("CAUSAL_CALIB_THREADS", "1") or "1")
    jobs = [(CausalCase.X_CAUSES_Y, k) for k in range(1, max_lag + 1)] + [
        (CausalCase.Y_CAUSES_X, k) for k in range(1, max_lag + 1)
    ]

    def run(job):
        direction, k = job
        if direction is CausalCase.X_CAUSES_Y:
            return granger_lag(y_st, x_st, k)
        return granger_lag(x_st, y_st, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    # Assemble in lag order regardless of evaluation order.
    direction_xy = sorted(results[:max_lag], key=lambda r: r.lag)
    direction_yx = sorted(results[max_lag:], key=lambda r: r.lag)

    bonferroni = alpha / max_lag
    sig_xy = [r.lag for r in direction_xy if r.p_value < bonferroni]
    sig_yx = [r.lag for r in direction_yx if r.p_value < bonferroni]
    if sig_xy and sig_yx:
        case = CausalCase.MUTUAL
    elif sig_xy:
        case = CausalCase.X_CAUSES_Y
    elif sig_yx:
        case = CausalCase.Y_CAUSES_X
    else:
        case = CausalCase.INDEPENDENT
    return GrangerReport(
        direction_xy=direction_xy,
        direction_yx=direction_yx,
        alpha=alpha,
        max_lag=max_lag,
        case=case,
        significant_lags_xy=sig_xy,
        significant_lags_yx=sig_yx,
        differenced_x=x_diff,
        differenced_y=y_diff,
    )


def report_to_dict(report: GrangerReport) -> dict:
    """JSON-ready form of a sweep report."""

    def direction(rows: list[GrangerLagResult]) -> list[dict]:
        return [
            {
                "lag": r.lag,
                "f_stat": r.f_stat,
                "p_value": r.p_value,
                "ssr_r": r.ssr_restricted,
                "ssr_u": r.ssr_unrestricted,
            }
            for r in rows
        ]

    return {
        "alpha": report.alpha,
        "max_lag": report.max_lag,
        "case": report.case.value,
        "x_to_y": direction(report.direction_xy),
        "y_to_x": direction(report.direction_yx),
        "significant_lags_x_to_y": report.significant_lags_xy,
        "significant_lags_y_to_x": report.significant_lags_yx,
        "differenced_x": report.differenced_x,
        "differenced_y": report.differenced_y,
    }

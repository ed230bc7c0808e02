"""Statistical comparison of vulnerable and non-vulnerable functions.

Welch t-tests with effect sizes, bootstrap null distributions of the t-statistic, Pearson
correlation, logistic regression fitted by iteratively reweighted least squares, and the
confounding analysis built on nested logistic models.
"""

from typing import (
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
from numpy.typing import ArrayLike
from scipy import special
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import (
    DegenerateSamples,
    StatsError,
)
from app.core.logging import logger
from app.models.metrics import (
    BASELINE_SUFFIXES,
    SIMPLE_COLUMNS,
    WEIGHTED_COLUMNS,
    MetricRow,
)
from app.models.stats import (
    BootstrapResult,
    ConfoundReport,
    CorrelationResult,
    GroupComparison,
    LogisticModel,
    SampleSummary,
    TTestResult,
)

TRANSFORMS = ("identity", "log1p")
SEPARATION_DEVIANCE = 1e-6
# linear predictors growing by at least this much on this many consecutive steps diverge
SEPARATION_STEP = 0.5
SEPARATION_STREAK = 10


def _check_df(df: float) -> None:
    if not np.isfinite(df) or df <= 0:
        raise StatsError(f"degrees of freedom must be positive and finite, got {df}")


def t_cdf(t: float, df: float) -> float:
    """Cumulative distribution function of Student's t.

    Args:
        t: The statistic.
        df: Degrees of freedom, positive (non-integer values allowed).

    Returns:
        float: ``P(T <= t)``.

    Raises:
        StatsError: If ``df`` is not positive.
    """
    _check_df(df)
    tail = 0.5 * float(special.betainc(df / 2, 0.5, df / (df + t * t)))
    return 1.0 - tail if t > 0 else tail


def t_sf(t: float, df: float) -> float:
    """Upper tail ``P(T > t)`` of Student's t."""
    return t_cdf(-t, df)


def chisq_cdf(x: float, k: float) -> float:
    """Cumulative distribution function of the chi-squared distribution.

    Raises:
        StatsError: If ``k`` is not positive or ``x`` is negative.
    """
    _check_df(k)
    if x < 0:
        raise StatsError(f"chi-squared statistic must be non-negative, got {x}")
    return float(special.gammainc(k / 2, x / 2))


def chisq_sf(x: float, k: float) -> float:
    """Upper tail of the chi-squared distribution, without ``1 - cdf`` cancellation."""
    _check_df(k)
    if x < 0:
        raise StatsError(f"chi-squared statistic must be non-negative, got {x}")
    return float(special.gammaincc(k / 2, x / 2))


def summarize(values: ArrayLike) -> SampleSummary:
    """Size, mean and sample standard deviation of a group."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise StatsError("cannot summarize an empty sample")
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return SampleSummary(n=int(arr.size), mean=float(arr.mean()), sd=sd)


def _welch_parts(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    vx = x.var(ddof=1) / x.size
    vy = y.var(ddof=1) / y.size
    se2 = vx + vy
    if se2 == 0:
        raise DegenerateSamples("both samples have zero variance")
    t = (x.mean() - y.mean()) / np.sqrt(se2)
    df = se2**2 / (vx**2 / (x.size - 1) + vy**2 / (y.size - 1))
    return float(t), float(df), float(se2)


def welch_t_test(x: ArrayLike, y: ArrayLike) -> TTestResult:
    """Welch two-sample t-test of ``x`` against ``y``.

    Args:
        x: First sample (the vulnerable group in reports), at least two values.
        y: Second sample, at least two values.

    Returns:
        TTestResult: Statistic, Welch-Satterthwaite df, two-sided p, mean difference with its 95%
        interval, and the ratio of means.

    Raises:
        StatsError: If a sample has fewer than two values.
        DegenerateSamples: If both samples have zero variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or y.size < 2:
        raise StatsError(f"Welch t-test needs at least two values per sample, got {x.size} and {y.size}")
    t, df, se2 = _welch_parts(x, y)
    p = float(special.betainc(df / 2, 0.5, df / (df + t * t)))
    mean_diff = float(x.mean() - y.mean())
    half_width = float(special.stdtrit(df, 0.975)) * float(np.sqrt(se2))
    mean_y = float(y.mean())
    return TTestResult(
        t=t,
        df=df,
        p_two_sided=min(max(p, 0.0), 1.0),
        mean_diff=mean_diff,
        ci95_low=mean_diff - half_width,
        ci95_high=mean_diff + half_width,
        ratio_of_means=float(x.mean()) / mean_y if mean_y != 0 else None,
    )


def pearson(x: ArrayLike, y: ArrayLike) -> CorrelationResult:
    """Pearson product-moment correlation.

    Raises:
        StatsError: If lengths differ, there are fewer than three pairs, or a variance is zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise StatsError(f"correlation needs paired samples, got {x.size} and {y.size} values")
    if x.size < 3:
        raise StatsError(f"correlation needs at least three pairs, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("correlation is undefined for a sample with zero variance")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return CorrelationResult(r=float(np.clip(r, -1.0, 1.0)), n=int(x.size))


def apply_transform(values: ArrayLike, transform: str) -> np.ndarray:
    """Apply ``identity`` or ``log1p`` (natural log with add-one smoothing).

    Raises:
        StatsError: If the transform is unknown or ``log1p`` meets a value <= -1.
    """
    arr = np.asarray(values, dtype=float)
    if transform == "identity":
        return arr
    if transform == "log1p":
        if (arr <= -1).any():
            raise StatsError("log1p transform needs values greater than -1")
        return np.log1p(arr)
    raise StatsError(f"unknown transform {transform!r}; expected one of {', '.join(TRANSFORMS)}")


def bootstrap_null(
    pool: ArrayLike,
    n_sample: int,
    B: Optional[int] = None,
    transform: str = "identity",
    seed: Optional[int] = None,
    observed: Optional[ArrayLike] = None,
) -> BootstrapResult:
    """Null distribution of the Welch t of a subsample against its whole pool.

    Every iteration draws ``n_sample`` values without replacement from the pool and records the
    Welch t of the draw against the entire pool, both transformed. Iteration ``i`` uses its own
    PCG64 generator spawned from ``SeedSequence(seed)``, so results do not depend on execution order.

    Args:
        pool: The pool (the non-vulnerable group in reports).
        n_sample: Subsample size, at least 2 and smaller than the pool.
        B: Iterations, at least 100 (default ``settings.BOOTSTRAP_REPLICATES``).
        transform: ``identity`` or ``log1p``.
        seed: Seed of the generator tree (default ``settings.RANDOM_SEED``).
        observed: Sample whose Welch t against the pool is placed in the null distribution;
            without it ``observed_t`` and the percentile are NaN.

    Returns:
        BootstrapResult: The sorted-order independent null statistics and the observed percentile.

    Raises:
        StatsError: If sizes or B are out of range.
        DegenerateSamples: If the pool has no variance or draws stay constant after
            ``settings.BOOTSTRAP_MAX_REDRAWS`` redraws.
    """
    B = settings.BOOTSTRAP_REPLICATES if B is None else B
    seed = settings.RANDOM_SEED if seed is None else seed
    values = apply_transform(pool, transform)
    if B < 100:
        raise StatsError(f"bootstrap needs at least 100 iterations, got {B}")
    if not 2 <= n_sample < values.size:
        raise StatsError(f"bootstrap sample size must be in [2, {values.size - 1}], got {n_sample}")
    if values.var() == 0:
        raise DegenerateSamples("bootstrap pool has zero variance")

    null_t: List[float] = []
    children = np.random.SeedSequence(seed).spawn(B)
    for child in tqdm(children, desc=f"bootstrap {transform}", disable=not settings.SHOW_PROGRESS, leave=False):
        rng = np.random.Generator(np.random.PCG64(child))
        for _ in range(settings.BOOTSTRAP_MAX_REDRAWS + 1):
            draw = rng.choice(values, size=n_sample, replace=False)
            if np.ptp(draw) > 0:
                break
        else:
            logger.error("bootstrap_draws_degenerate", redraws=settings.BOOTSTRAP_MAX_REDRAWS, n_sample=n_sample)
            raise DegenerateSamples(f"{settings.BOOTSTRAP_MAX_REDRAWS} consecutive draws had zero variance")
        null_t.append(_welch_parts(draw, values)[0])

    observed_t = float("nan")
    percentile = float("nan")
    if observed is not None:
        observed_t = _welch_parts(apply_transform(observed, transform), values)[0]
        percentile = float(np.searchsorted(np.sort(null_t), observed_t, side="right")) / B
    logger.debug("bootstrap_finished", B=B, transform=transform, seed=seed, percentile=percentile)
    return BootstrapResult(
        B=B,
        null_t=tuple(null_t),
        observed_t=observed_t,
        percentile_of_observed=percentile,
        transform=transform,
        seed=seed,
    )


def logistic_fit(
    design: ArrayLike,
    y: Sequence[bool],
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> LogisticModel:
    """Maximum-likelihood logistic regression by iteratively reweighted least squares.

    Args:
        design: Observations by columns; the first column is all ones.
        y: Outcome per observation.
        tolerance: Converged when no coefficient moves by this much (default ``settings.IRLS_TOLERANCE``).
        max_iterations: Newton step limit (default ``settings.IRLS_MAX_ITERATIONS``).

    Returns:
        LogisticModel: The last iterate. Separable data are reported as not converged: the deviance
        collapses to zero, or the largest linear predictor keeps growing by a steady step over many
        iterations while the coefficients run off to infinity. A single large but finite linear
        predictor is not separation.

    Raises:
        StatsError: If the design is malformed or ``y`` has a single class.
    """
    tolerance = settings.IRLS_TOLERANCE if tolerance is None else tolerance
    max_iterations = settings.IRLS_MAX_ITERATIONS if max_iterations is None else max_iterations
    X = np.asarray(design, dtype=float)
    target = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise StatsError("design needs an intercept column and at least one predictor")
    if X.shape[0] != target.size:
        raise StatsError(f"design has {X.shape[0]} rows but y has {target.size} values")
    if not np.all(X[:, 0] == 1):
        raise StatsError("first design column must be all ones")
    if not np.isfinite(X).all():
        raise StatsError("design contains non-finite values")
    if target.min() == target.max():
        raise StatsError("logistic regression needs both outcome classes")

    rank_deficient = bool(np.linalg.matrix_rank(X) < X.shape[1])
    beta = np.zeros(X.shape[1])
    converged = False
    iterations = 0
    reach = 0.0
    streak = 0
    diverging = False
    for iterations in range(1, max_iterations + 1):
        p = special.expit(X @ beta)
        w = p * (1 - p)
        hessian = X.T @ (X * w[:, None])
        gradient = X.T @ (target - p)
        delta = np.linalg.lstsq(hessian, gradient, rcond=None)[0]
        beta = beta + delta
        grown = float(np.abs(X @ beta).max())
        streak = streak + 1 if grown - reach >= SEPARATION_STEP else 0
        diverging = diverging or streak >= SEPARATION_STREAK
        reach = grown
        if np.abs(delta).max() < tolerance:
            converged = True
            break

    eta = X @ beta
    deviance = float(2 * np.sum(np.logaddexp(0, eta) - target * eta))
    separated = deviance < SEPARATION_DEVIANCE or diverging
    if separated or not np.isfinite(beta).all():
        logger.warning("logistic_separation", deviance=deviance, coefficients=beta.tolist())
        converged = False
    elif not converged:
        logger.warning("logistic_not_converged", iterations=iterations)
    return LogisticModel(
        coefficients=tuple(float(b) for b in beta),
        deviance=max(deviance, 0.0),
        iterations=iterations,
        converged=converged,
        rank_deficient=rank_deficient,
    )


def odds_ratio_per_sd(beta: float, sd: float) -> float:
    """Odds ratio of a one standard deviation increase."""
    return float(np.exp(beta * sd))


def percent_change(or_uni: float, or_adj: float) -> float:
    """Relative drop of the odds ratio when the control is added, in percent."""
    return 100.0 * (or_uni - or_adj) / or_uni


def confound_analysis(metric: ArrayLike, control: ArrayLike, y: Sequence[bool]) -> ConfoundReport:
    """Check whether a control variable explains the effect of a metric.

    Fits the univariate model (intercept, metric), the control-only model (intercept, control)
    and the adjusted model (intercept, metric, control). The deviance drop from the control-only
    to the adjusted model tests whether the metric adds information beyond the control.

    Raises:
        StatsError: If lengths differ, the metric has no variance, or ``y`` has a single class.
    """
    m = np.asarray(metric, dtype=float)
    c = np.asarray(control, dtype=float)
    if not m.size == c.size == len(y):
        raise StatsError(f"confound analysis needs equal lengths, got {m.size}, {c.size} and {len(y)}")
    if m.size < 2:
        raise StatsError("confound analysis needs at least two observations")
    sd = float(m.std(ddof=1))
    if sd == 0:
        raise StatsError("metric has zero variance")

    ones = np.ones(m.size)
    univariate = logistic_fit(np.column_stack([ones, m]), y)
    control_only = logistic_fit(np.column_stack([ones, c]), y)
    adjusted = logistic_fit(np.column_stack([ones, m, c]), y)

    try:
        correlation: Optional[float] = pearson(m, c).r
    except StatsError:
        correlation = None

    beta_uni = univariate.coefficients[1]
    beta_adj = adjusted.coefficients[1]
    or_uni = odds_ratio_per_sd(beta_uni, sd)
    or_adj = odds_ratio_per_sd(beta_adj, sd)
    chi2 = max(control_only.deviance - adjusted.deviance, 0.0)
    return ConfoundReport(
        beta_uni=beta_uni,
        beta_adj=beta_adj,
        sd_metric=sd,
        or_per_sd_uni=or_uni,
        or_per_sd_adj=or_adj,
        pct_change=percent_change(or_uni, or_adj),
        deviance_chi2=chi2,
        chi2_df=1,
        p_deviance=chisq_sf(chi2, 1),
        correlation=correlation,
        rank_deficient=adjusted.rank_deficient,
        converged=univariate.converged and control_only.converged and adjusted.converged,
    )


def split_groups(rows: Iterable[MetricRow], metric: str) -> Tuple[List[float], List[float]]:
    """Values of a metric for vulnerable and non-vulnerable rows; unlabeled rows are skipped."""
    vulnerable: List[float] = []
    non_vulnerable: List[float] = []
    for row in rows:
        if row.vulnerable is None:
            continue
        (vulnerable if row.vulnerable else non_vulnerable).append(float(row.value(metric)))
    return vulnerable, non_vulnerable


def group_compare(
    rows: Sequence[MetricRow],
    metric: str,
    bootstrap_b: Optional[int] = None,
    seed: Optional[int] = None,
    transforms: Sequence[str] = TRANSFORMS,
) -> GroupComparison:
    """Compare one metric between vulnerable and non-vulnerable functions.

    Args:
        rows: Metric rows; rows with an unknown label are excluded.
        metric: Metric column name.
        bootstrap_b: Bootstrap iterations per transform; None or 0 skips the bootstrap.
        seed: Bootstrap seed.
        transforms: Transforms to bootstrap under.

    Returns:
        GroupComparison: Group summaries, the Welch test of vulnerable against non-vulnerable,
        and bootstrap results for the transforms that could be computed.

    Raises:
        StatsError: If a group is empty or too small to test.
    """
    vulnerable, non_vulnerable = split_groups(rows, metric)
    for name, group in (("vulnerable", vulnerable), ("non-vulnerable", non_vulnerable)):
        if not group:
            raise StatsError(f"{metric}: the {name} group is empty")

    t_test = welch_t_test(vulnerable, non_vulnerable)
    bootstraps: List[BootstrapResult] = []
    if bootstrap_b:
        for transform in transforms:
            try:
                bootstraps.append(
                    bootstrap_null(
                        non_vulnerable,
                        n_sample=len(vulnerable),
                        B=bootstrap_b,
                        transform=transform,
                        seed=seed,
                        observed=vulnerable,
                    )
                )
            except StatsError as e:
                logger.warning("bootstrap_skipped", metric=metric, transform=transform, error=str(e))
    return GroupComparison(
        metric=metric,
        vulnerable=summarize(vulnerable),
        non_vulnerable=summarize(non_vulnerable),
        t_test=t_test,
        bootstraps=bootstraps,
    )


def compared_metrics(baseline_labels: Sequence[str]) -> List[str]:
    """Metric columns compared between the groups, in report order."""
    columns = [*SIMPLE_COLUMNS, *WEIGHTED_COLUMNS]
    for label in baseline_labels:
        columns.extend(f"{label}_{suffix}" for suffix in BASELINE_SUFFIXES)
    return columns


def confound_pairings(baseline_labels: Sequence[str]) -> List[Tuple[str, str]]:
    """``(metric, control)`` pairs of the confounding analysis, in report order.

    Configuration-complexity metrics are controlled by function size; every weighted centrality
    is controlled by the matching unweighted baseline column of each baseline label.
    """
    pairs = [(column, "size_loc") for column in SIMPLE_COLUMNS if column != "size_loc"]
    for label in baseline_labels:
        pairs.extend(zip(WEIGHTED_COLUMNS, (f"{label}_{suffix}" for suffix in BASELINE_SUFFIXES)))
    return pairs

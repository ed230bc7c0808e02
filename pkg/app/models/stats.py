"""This file contains the statistics result records for the analyzer."""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    List,
    Optional,
    Tuple,
)


@dataclass(frozen=True)
class SampleSummary:
    """Size, mean and sample standard deviation (n - 1 denominator) of a group."""

    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class TTestResult:
    """Welch two-sample t-test of ``x`` against ``y``.

    Attributes:
        t: Test statistic.
        df: Welch-Satterthwaite degrees of freedom.
        p_two_sided: Two-sided p-value.
        mean_diff: ``mean(x) - mean(y)``.
        ci95_low: Lower end of the 95% interval of ``mean_diff``.
        ci95_high: Upper end of the 95% interval of ``mean_diff``.
        ratio_of_means: ``mean(x) / mean(y)``; None when ``mean(y)`` is zero.
    """

    t: float
    df: float
    p_two_sided: float
    mean_diff: float
    ci95_low: float
    ci95_high: float
    ratio_of_means: Optional[float] = None

    @property
    def ratio_defined(self) -> bool:
        """Whether the ratio of means is defined."""
        return self.ratio_of_means is not None


@dataclass(frozen=True)
class BootstrapResult:
    """Null distribution of Welch t-statistics from subsamples of a pool."""

    B: int
    null_t: Tuple[float, ...]
    observed_t: float
    percentile_of_observed: float
    transform: str
    seed: int

    def significant_at(self, alpha: float) -> bool:
        """Whether the observed t lies outside the central ``1 - alpha`` null interval."""
        return self.percentile_of_observed < alpha / 2 or self.percentile_of_observed > 1 - alpha / 2


@dataclass(frozen=True)
class LogisticModel:
    """Maximum-likelihood logistic regression fit.

    Attributes:
        coefficients: Intercept first, then one coefficient per predictor column.
        deviance: ``-2`` log-likelihood of the fit.
        iterations: Newton steps taken.
        converged: False when the step limit was hit or the data are separable.
        rank_deficient: True when the design matrix does not have full column rank.
    """

    coefficients: Tuple[float, ...]
    deviance: float
    iterations: int
    converged: bool
    rank_deficient: bool = False


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson product-moment correlation."""

    r: float
    n: int


@dataclass(frozen=True)
class ConfoundReport:
    """Effect of a control variable on the odds ratio of a metric.

    Attributes:
        beta_uni: Metric coefficient of the univariate model.
        beta_adj: Metric coefficient of the model with the control added.
        sd_metric: Sample standard deviation of the metric.
        or_per_sd_uni: ``exp(beta_uni * sd_metric)``.
        or_per_sd_adj: ``exp(beta_adj * sd_metric)``.
        pct_change: ``100 * (or_per_sd_uni - or_per_sd_adj) / or_per_sd_uni``.
        deviance_chi2: Deviance drop from adding the metric to the control-only model.
        chi2_df: Degrees of freedom of the deviance test.
        p_deviance: Upper-tail chi-squared probability of ``deviance_chi2``.
        correlation: Pearson correlation of metric and control; None when undefined.
        rank_deficient: True when metric and control are collinear.
        converged: True when all three fits converged.
    """

    beta_uni: float
    beta_adj: float
    sd_metric: float
    or_per_sd_uni: float
    or_per_sd_adj: float
    pct_change: float
    deviance_chi2: float
    chi2_df: int
    p_deviance: float
    correlation: Optional[float] = None
    rank_deficient: bool = False
    converged: bool = True


@dataclass(frozen=True)
class GroupComparison:
    """Comparison of one metric between vulnerable and non-vulnerable functions."""

    metric: str
    vulnerable: SampleSummary
    non_vulnerable: SampleSummary
    t_test: TTestResult
    bootstraps: List[BootstrapResult] = field(default_factory=list)

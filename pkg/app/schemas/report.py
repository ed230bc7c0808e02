"""This file contains the statistics report schema for the analyzer."""

from typing import (
    Dict,
    List,
    Optional,
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
)


class GroupMeansSchema(BaseModel):
    """Mean of a metric per group."""

    vulnerable: float = Field(..., description="Mean of the vulnerable group")
    non_vulnerable: float = Field(..., description="Mean of the non-vulnerable group")


class BootstrapSchema(BaseModel):
    """Bootstrap summary of one transform."""

    B: int = Field(..., ge=100, description="Iterations")
    transform: str = Field(..., description="identity or log1p")
    seed: int = Field(..., description="Seed of the generator tree")
    observed_t: float = Field(..., description="Welch t of the vulnerable group against the pool")
    percentile: float = Field(..., ge=0, le=1, description="Share of null statistics at or below the observed t")
    significant: Dict[str, bool] = Field(default_factory=dict, description="Significance per level")


class ComparisonSchema(BaseModel):
    """Group comparison of one metric, or the error that prevented it."""

    model_config = ConfigDict(extra="forbid")

    metric: str = Field(..., description="Metric column")
    n_vulnerable: int = Field(0, ge=0, description="Size of the vulnerable group")
    n_non_vulnerable: int = Field(0, ge=0, description="Size of the non-vulnerable group")
    group_means: Optional[GroupMeansSchema] = Field(None, description="Group means")
    group_sds: Optional[GroupMeansSchema] = Field(None, description="Group standard deviations")
    ratio_of_means: Optional[float] = Field(None, description="Vulnerable mean over non-vulnerable mean")
    mean_diff: Optional[float] = Field(None, description="Difference of means")
    ci95: Optional[List[float]] = Field(None, description="95% interval of the difference")
    t: Optional[float] = Field(None, description="Welch t")
    df: Optional[float] = Field(None, description="Welch-Satterthwaite degrees of freedom")
    p: Optional[float] = Field(None, description="Two-sided p-value")
    bootstrap: List[BootstrapSchema] = Field(default_factory=list, description="Bootstrap per transform")
    error: Optional[str] = Field(None, description="Why the comparison could not be computed")


class ConfoundSchema(BaseModel):
    """Confounding analysis of one (metric, control) pairing."""

    model_config = ConfigDict(extra="forbid")

    metric: str = Field(..., description="Metric of interest")
    control: str = Field(..., description="Potentially confounding metric")
    beta_uni: Optional[float] = None
    beta_adj: Optional[float] = None
    sd_metric: Optional[float] = None
    or_per_sd_uni: Optional[float] = None
    or_per_sd_adj: Optional[float] = None
    pct_change: Optional[float] = None
    deviance_chi2: Optional[float] = None
    chi2_df: Optional[int] = None
    p_deviance: Optional[float] = None
    correlation: Optional[float] = None
    rank_deficient: Optional[bool] = None
    converged: Optional[bool] = None
    error: Optional[str] = Field(None, description="Why the analysis could not be computed")


class StatsReportDocument(BaseModel):
    """The stats report JSON document."""

    model_config = ConfigDict(extra="forbid")

    rows: int = Field(0, ge=0, description="Metric rows read")
    unlabeled: int = Field(0, ge=0, description="Rows excluded for lack of a label")
    baselines: List[str] = Field(default_factory=list, description="Baseline labels")
    significance_levels: List[float] = Field(default_factory=list, description="Levels of the bootstrap verdicts")
    comparisons: List[ComparisonSchema] = Field(default_factory=list, description="Per-metric comparisons")
    confounds: List[ConfoundSchema] = Field(default_factory=list, description="Confound analyses in pairing order")

"""Result models: satisfaction, per-round federation output, provisioning statistics."""
import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from flmrsim.core.nn import ModelParams


@dataclass(frozen=True)
class SatisfactionReport:
    """Truth degree of the regression axiom over one batch."""

    phi: float
    per_sample_eq: np.ndarray = field(repr=False)
    loss: float
    # Model outputs the truths were computed from, when the report comes from a query.
    predictions: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"satisfaction {self.phi} outside [0, 1]")
        if self.loss != 1.0 - self.phi:
            raise ValueError("loss must equal 1 - phi")


@dataclass(frozen=True)
class ClientRoundMetrics:
    """One client's numbers for one round."""

    client_id: int
    train_loss: float
    train_phi: float
    test_loss: float
    test_phi: float


@dataclass(frozen=True)
class RoundResult:
    """Outcome of one federation round."""

    round: int
    global_params: ModelParams = field(repr=False)
    per_client: tuple[ClientRoundMetrics, ...]
    wall_time: float = 0.0
    test_predictions: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    test_targets: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def mean(self, attribute: str) -> float:
        """Client-average of one ClientRoundMetrics attribute."""
        return float(np.mean([getattr(m, attribute) for m in self.per_client]))


class ProvisioningStats(BaseModel):
    """Over- and underprovisioning volume of a set of prediction errors."""

    model_config = ConfigDict(frozen=True)

    over_total: float = Field(..., ge=0, description="Sum of positive prediction errors")
    under_total: float = Field(..., ge=0, description="Sum of negative error magnitudes")
    over_count: int = Field(..., ge=0)
    under_count: int = Field(..., ge=0)
    mean_abs_error: float = Field(..., ge=0)
    sample_count: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _counts_fit(self) -> "ProvisioningStats":
        if self.over_count + self.under_count > self.sample_count:
            raise ValueError("over_count + under_count exceeds sample_count")
        return self

    @property
    def combined_total(self) -> float:
        return self.over_total + self.under_total


class ComparisonReport(BaseModel):
    """Baseline-to-FLMR provisioning ratios; larger means FLMR provisions better."""

    model_config = ConfigDict(frozen=True)

    flmr: ProvisioningStats
    baseline: ProvisioningStats
    over_ratio: float
    under_ratio: float
    combined_ratio: float
    infinite: tuple[str, ...] = Field((), description="Ratios whose FLMR denominator was zero")

    @property
    def flagged(self) -> bool:
        return any(math.isinf(r) for r in (self.over_ratio, self.under_ratio, self.combined_ratio))

"""Configuration models for networks, losses, data generation and federation."""
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

U64_MAX = 2**64 - 1


class _Settings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class LossKind(str, Enum):
    """Training objective used by every client."""

    FLMR = "flmr"
    DEEPCOG = "deepcog"


class MLPConfig(_Settings):
    """Two-hidden-layer regressor topology."""

    input_dim: int = Field(5, ge=1, description="Number of input features")
    hidden_dims: tuple[int, int] = Field((64, 32), description="Widths of the two hidden layers")
    hidden_activation: Literal["relu"] = Field("relu", description="Hidden activation")
    output_activation: Literal["sigmoid"] = Field("sigmoid", description="Output activation")
    output_dim: Literal[1] = Field(1, description="Output width (scalar CPU target)")

    @field_validator("hidden_dims", mode="before")
    @classmethod
    def _parse_widths(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = tuple(int(part) for part in value.replace(" ", "").split(",") if part)
        return value

    @field_validator("hidden_dims")
    @classmethod
    def _positive_widths(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 1:
            raise ValueError("hidden widths must be >= 1")
        return value

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every affine layer, input side first."""
        widths = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(widths[:-1], widths[1:]))


class FuzzyConfig(_Settings):
    """Smooth-equality predicate and universal-quantifier settings."""

    alpha: float = Field(0.5, gt=0, description="Smoothness constant of the eq predicate")
    p: float = Field(2.0, ge=1, description="Exponent of the p-mean-error aggregator")


class AdaDeltaConfig(_Settings):
    """AdaDelta hyperparameters; rho carries the 0.85 'learning rate' setting."""

    rho: float = Field(0.85, gt=0, lt=1, description="Decay of the running averages")
    epsilon: float = Field(1e-6, gt=0, description="Conditioning constant")
    scale: float = Field(1.0, gt=0, description="Global multiplier on every update")


class DeepCogLossConfig(_Settings):
    """Asymmetric capacity-forecast cost used by the baseline."""

    alpha_penalty: float = Field(1.0, gt=0, description="SLA-violation cost at the ramp end")
    epsilon_smooth: float = Field(0.05, gt=0, description="Width of the underprovisioning ramp")
    over_slope: float = Field(1.0, gt=0, description="Overprovisioning cost per unit")
    under_slope: float = Field(0.1, ge=0, description="Residual slope beyond the ramp")

    @model_validator(mode="after")
    def _underprovisioning_costs_more(self) -> "DeepCogLossConfig":
        if self.alpha_penalty / self.epsilon_smooth <= self.over_slope:
            raise ValueError("alpha_penalty / epsilon_smooth must exceed over_slope")
        return self


class GeneratorConfig(_Settings):
    """Synthetic vBS workload generator settings."""

    seed: int = Field(0, ge=0, le=U64_MAX, description="Generator seed")
    n_records: int = Field(2000, ge=1, description="Records per client")
    ul_max_kbps: float = Field(20000.0, gt=0, description="Uplink traffic maximum (kbps)")
    dl_max_kbps: float = Field(50000.0, gt=0, description="Downlink traffic maximum (kbps)")
    base_load: float = Field(0.10, description="Idle CPU share")
    ul_weight: float = Field(0.45, description="CPU share of saturated uplink")
    dl_weight: float = Field(0.25, description="CPU share of saturated downlink")
    mcs_ul_factor: float = Field(0.5, description="Extra uplink cost at MCS 0")
    mcs_dl_factor: float = Field(0.3, description="Extra downlink cost at MCS 0")
    cpu_set_count: int = Field(4, ge=1, description="Number of computing sets")
    cpu_set_offset_step: float = Field(0.02, description="CPU offset per computing-set index")
    noise_sd: float = Field(0.02, ge=0, description="Measurement noise standard deviation")
    explode_threshold: float = Field(0.95, gt=0, le=1, description="Raw load marking a failed run")


class FLConfig(_Settings):
    """Federation hyperparameters."""

    K: int = Field(50, ge=1, description="Number of clients (vBSs)")
    T: int = Field(50, ge=1, description="Number of federation rounds")
    L: int = Field(1, ge=1, description="Local epochs per round")
    batch_size: int = Field(500, ge=1, description="Local mini-batch size")
    participation: float = Field(1.0, gt=0, le=1, description="Fraction of clients per round")
    test_fraction: float = Field(0.2, gt=0, lt=1, description="Held-out share of each client")
    drop_exploded: bool = Field(True, description="Discard rows of failed experiments")
    loss_kind: LossKind = Field(LossKind.FLMR, description="Local training objective")
    seed: int = Field(0, ge=0, le=U64_MAX, description="Federation seed")
    mlp: MLPConfig = Field(default_factory=MLPConfig)
    optimizer: AdaDeltaConfig = Field(default_factory=AdaDeltaConfig)
    fuzzy: FuzzyConfig = Field(default_factory=FuzzyConfig)
    deepcog: DeepCogLossConfig = Field(default_factory=DeepCogLossConfig)


class ExperimentConfig(_Settings):
    """Everything one experiment run needs."""

    fl: FLConfig = Field(default_factory=FLConfig)
    generator: GeneratorConfig | None = None
    data_dir: Path | None = Field(None, description="Directory of client_<id>.csv files")
    out_dir: Path | None = Field(None, description="Directory for emitted reports")
    label: str = Field("run", min_length=1, description="Run label used in logs")
    workers: int = Field(1, ge=1, description="Parallel client workers")

    @model_validator(mode="before")
    @classmethod
    def _one_data_source(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        has_dir = data.get("data_dir") is not None
        has_generator = data.get("generator") is not None
        if has_dir and has_generator:
            raise ValueError("set either data_dir or generator settings, not both")
        if not has_dir and not has_generator:
            data = {**data, "generator": {}}
        return data

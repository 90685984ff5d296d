"""vBS telemetry records and per-client datasets."""
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

FEATURES: tuple[str, ...] = ("mcs_dl", "mcs_ul", "dl_kbps", "ul_kbps", "cpu_set")
TARGET = "cpu"
CSV_COLUMNS: tuple[str, ...] = (*FEATURES, TARGET, "explode")
MCS_MAX = 28


class VbsRecord(BaseModel):
    """One telemetry sample of a virtual base station."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    mcs_dl: int = Field(..., ge=0, le=MCS_MAX, description="Downlink MCS index")
    mcs_ul: int = Field(..., ge=0, le=MCS_MAX, description="Uplink MCS index")
    dl_kbps: float = Field(..., ge=0, description="Downlink traffic demand (kbps)")
    ul_kbps: float = Field(..., ge=0, description="Uplink traffic demand (kbps)")
    cpu_set: int = Field(..., ge=0, description="Computing-set identifier")
    cpu: float = Field(..., ge=0, le=1, description="Average measured CPU utilization")
    explode: bool = Field(False, description="Whether the experiment failed")


class FeatureStats(BaseModel):
    """Per-feature (min, max) bounds used for min-max scaling, in FEATURES order."""

    model_config = ConfigDict(frozen=True)

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def bounds(self, feature: str) -> tuple[float, float]:
        """(min, max) of one named feature."""
        index = FEATURES.index(feature)
        return self.mins[index], self.maxs[index]


@dataclass(frozen=True)
class ClientDataset:
    """One vBS's local data: training rows, held-out rows and their scaling."""

    client_id: int
    records: tuple[VbsRecord, ...]
    feature_stats: FeatureStats
    train_x: np.ndarray = field(repr=False)
    train_y: np.ndarray = field(repr=False)
    test_records: tuple[VbsRecord, ...] = ()
    test_x: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, len(FEATURES))))
    test_y: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError(f"client {self.client_id} has no training records")
        if len(self.train_x) != len(self.records) or len(self.train_y) != len(self.records):
            raise ValueError(f"client {self.client_id}: training arrays do not match records")
        if len(self.test_x) != len(self.test_records):
            raise ValueError(f"client {self.client_id}: test arrays do not match records")

    @property
    def size(self) -> int:
        """D_k, the number of training samples."""
        return len(self.records)

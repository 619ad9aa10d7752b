"""Request and response models shared by the CLI and the HTTP service.

Every response carries a RunMeta echo of the full validated request, so a
consumer can re-run the exact configuration; data rows are plain scalar
fields that serialize identically through JSON and CSV.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bitperm import MAX_TABLE_BITS

SGridSpec = tuple[float, float, int]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunMeta(StrictModel):
    command: str
    config: dict[str, Any]
    generator: str
    version: str


class BaseRequest(StrictModel):
    n: int = Field(ge=1, le=MAX_TABLE_BITS)
    seed: int = Field(default=0, ge=0)
    perm: Literal["random", "identity"] = "random"
    tol: float = Field(default=1e-9, gt=0.0, le=1e-2)
    threads: Optional[int] = Field(default=None, ge=1, le=64)
    force: bool = False


def _check_grid(grid: SGridSpec) -> SGridSpec:
    lo, hi, count = grid
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"s-grid range [{lo}, {hi}] must sit inside [0, 1]")
    if count < 2:
        raise ValueError(f"s-grid needs at least 2 points, got {count}")
    return grid


class SpectrumRequest(BaseRequest):
    s_grid: SGridSpec = (0.0, 1.0, 101)
    levels: int = Field(default=25, ge=1)

    @model_validator(mode="after")
    def _validate(self):
        _check_grid(self.s_grid)
        if self.levels > 1 << self.n:
            raise ValueError(f"levels={self.levels} exceeds dimension 2^{self.n}")
        return self


class SpectrumRow(StrictModel):
    s: float
    level: int
    energy: float


class SpectrumResponse(StrictModel):
    meta: RunMeta
    rows: list[SpectrumRow]
    failures: list[str] = []


class MinGapRequest(StrictModel):
    n_list: list[int] = Field(min_length=1)
    seeds: tuple[int, int] = (0, 0)  # inclusive range
    perm: Literal["random", "identity"] = "random"
    coarse_step: float = Field(default=0.02, gt=0.0, le=0.02)
    refine_tol: float = Field(default=1e-6, gt=0.0)
    tol: float = Field(default=1e-10, gt=0.0, le=1e-2)
    threads: Optional[int] = Field(default=None, ge=1, le=64)
    force: bool = False

    @model_validator(mode="after")
    def _validate(self):
        for n in self.n_list:
            if not 1 <= n <= MAX_TABLE_BITS:
                raise ValueError(f"n={n} outside [1, {MAX_TABLE_BITS}]")
        a, b = self.seeds
        if not 0 <= a <= b:
            raise ValueError(f"seed range {self.seeds} must satisfy 0 <= first <= last")
        return self


class MinGapRow(StrictModel):
    n: int
    seed: int
    s_min: float
    gap: float


class MinGapSummary(StrictModel):
    n: int
    seeds: int
    median_gap: float
    q1_gap: float
    q3_gap: float


class MinGapResponse(StrictModel):
    meta: RunMeta
    rows: list[MinGapRow]
    summaries: list[MinGapSummary]
    failures: list[str] = []


class BoundsRequest(BaseRequest):
    s_grid: SGridSpec = (0.0, 1.0, 101)

    @model_validator(mode="after")
    def _validate(self):
        _check_grid(self.s_grid)
        return self


class BoundRow(StrictModel):
    s: float
    lower: Optional[float]
    upper: float
    c: Optional[float]
    k: Optional[int]
    lambda_or_mu: Optional[float]
    argmin_string: Optional[int]
    ground: float
    upper_ok: bool
    floor_value: float
    floor_ok: bool


class BoundsResponse(StrictModel):
    meta: RunMeta
    rows: list[BoundRow]
    trial_error: Optional[str] = None
    failures: list[str] = []


class LocalizeRequest(BaseRequest):
    s_grid: SGridSpec = (0.0, 1.0, 101)

    @model_validator(mode="after")
    def _validate(self):
        _check_grid(self.s_grid)
        return self


class LocalizeRow(StrictModel):
    s: float
    overlap_uniform: float
    overlap_target: float
    ipr: float


class LocalizeResponse(StrictModel):
    meta: RunMeta
    rows: list[LocalizeRow]
    failures: list[str] = []


class LateGapRequest(BaseRequest):
    s_grid: SGridSpec = (0.9, 1.0, 21)
    entropy_target: float = Field(default=0.49, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _validate(self):
        lo, hi, count = _check_grid(self.s_grid)
        if lo < 0.5:
            raise ValueError("late-gap scan starts in the second half of the schedule")
        return self


class LateGapRow(StrictModel):
    s: float
    gap: float
    excited_lower: Optional[float]
    gap_lower: Optional[float]
    analytic_term: Optional[float]


class LateGapResponse(StrictModel):
    meta: RunMeta
    c: float
    rows: list[LateGapRow]
    min_gap: float
    failures: list[str] = []


class EvolveRequest(BaseRequest):
    T: float = Field(gt=0.0)
    local_tol: float = Field(default=1e-9, gt=0.0, le=1e-4)


class EvolveResponse(StrictModel):
    meta: RunMeta
    n: int
    seed: int
    T: float
    success_probability: float
    norm_drift: float
    steps: int
    failures: list[str] = []


class MidSpectrumRequest(BaseRequest):
    s_grid: SGridSpec = (0.3, 0.7, 41)
    window: Optional[tuple[int, int]] = None  # sorted-index range, defaults to 25 centered levels

    @model_validator(mode="after")
    def _validate(self):
        _check_grid(self.s_grid)
        if self.window is not None:
            lo, hi = self.window
            if not 0 <= lo <= hi < 1 << self.n:
                raise ValueError(f"index window {self.window} out of range for n={self.n}")
        return self


class MidSpectrumResponse(StrictModel):
    meta: RunMeta
    rows: list[SpectrumRow]
    failures: list[str] = []


class NeighborStatsRequest(BaseRequest):
    k: int = Field(ge=2)
    trials: int = Field(default=200, ge=1)
    gamma: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    c: Optional[float] = Field(default=None, gt=0.0, lt=0.5)

    @model_validator(mode="after")
    def _validate(self):
        if (self.gamma is None) == (self.c is None):
            raise ValueError("give exactly one of gamma (set-size exponent) or c (cost cutoff)")
        return self


class NeighborStatsResponse(StrictModel):
    meta: RunMeta
    n: int
    k: int
    trials: int
    set_size: int
    gamma_effective: float
    count_p: int
    count_q: int
    empirical_p: float
    empirical_q: float
    bound: float
    failures: list[str] = []

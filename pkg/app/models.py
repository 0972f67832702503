from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from typing import Literal, Optional, Sequence
import itertools

from app.config import settings
from app.exceptions import InvalidSampleError

EstimatorId = Literal["N", "SHS", "DL", "PM", "HM", "THETA"]
VARIANCE_ESTIMATORS: tuple[str, ...] = ("N", "SHS", "DL", "PM", "HM")
DEFAULT_BLOCK_SIZE = 2000


class TwoSample(BaseModel):
    """Two independent groups of observations; ties allowed"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    group1: tuple[float, ...] = Field(min_length=1)
    group2: tuple[float, ...] = Field(min_length=1)

    @classmethod
    def of(cls, group1: Sequence[float], group2: Sequence[float]) -> "TwoSample":
        """Build from any numeric sequences, turning validation failures into InvalidSampleError"""
        try:
            return cls(group1=tuple(float(v) for v in group1), group2=tuple(float(v) for v in group2))
        except (ValidationError, TypeError, ValueError) as e:
            raise InvalidSampleError(f"invalid sample: {e}") from e

    @property
    def n1(self) -> int:
        return len(self.group1)

    @property
    def n2(self) -> int:
        return len(self.group2)

    @property
    def N(self) -> int:
        return self.n1 + self.n2

    @property
    def m(self) -> int:
        """Smaller group size"""
        return min(self.n1, self.n2)


class EffectSummary(BaseModel):
    """Point estimates shared by every variance estimator"""
    theta_hat: float = Field(ge=0.0, le=1.0)
    tau_hat: float = Field(ge=0.0, le=1.0)
    q1_sq: float = Field(ge=0.0)
    q2_sq: float = Field(ge=0.0)
    n1: int = Field(ge=1)
    n2: int = Field(ge=1)


class CountSums(BaseModel):
    """Sums of squares and products of count functions"""
    A: float = Field(ge=0.0)
    B: float = Field(ge=0.0)
    C: float = Field(ge=0.0)
    D: float = Field(ge=0.0)
    E: float = Field(ge=0.0)
    F: float = Field(ge=0.0)
    d_N: int = Field(ge=0)

    @property
    def S(self) -> float:
        return self.A + self.B + self.C + self.D


class VarianceEstimates(BaseModel):
    """The five variance estimators of theta_hat for one sample"""
    sigma_N_sq: float
    sigma_SHS_sq: float  # may be negative, never clipped
    sigma_DL_sq: float
    sigma_PM_sq: float
    sigma_HM_sq: float

    def by_id(self) -> dict[str, float]:
        return {
            "N": self.sigma_N_sq,
            "SHS": self.sigma_SHS_sq,
            "DL": self.sigma_DL_sq,
            "PM": self.sigma_PM_sq,
            "HM": self.sigma_HM_sq,
        }


class ConfidenceInterval(BaseModel):
    lower: float
    upper: float
    level: float = Field(gt=0.0, lt=1.0)

    @property
    def degenerate(self) -> bool:
        return self.lower == self.upper


class EstimateReport(BaseModel):
    """Everything `estimate` prints; the inputs are echoed so the JSON is self-contained"""
    group1: list[float]
    group2: list[float]
    summary: EffectSummary
    estimates: VarianceEstimates
    upper_bound: float
    ci: ConfidenceInterval
    warnings: list[str] = []


class InputDataset(BaseModel):
    """User data for `estimate`, read from one two-column file or two single-column files"""
    model_config = ConfigDict(allow_inf_nan=False)

    group1: list[float] = Field(min_length=1)
    group2: list[float] = Field(min_length=1)
    source: str = ""

    def to_sample(self) -> TwoSample:
        return TwoSample.of(self.group1, self.group2)


# Experiment configuration

class SpecConfig(BaseModel):
    """JSON form of a distribution pair: {"name": ..., "params": {...}}"""
    name: str
    params: dict[str, float] = {}

    @property
    def label(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


class GridConfig(BaseModel):
    """Parameter sweep over one family: fixed params plus the cartesian product of `sweep`"""
    name: str
    params: dict[str, float] = {}
    sweep: dict[str, list[float]] = Field(min_length=1)

    def expand(self) -> list[SpecConfig]:
        keys = list(self.sweep)
        specs = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            params = dict(self.params)
            params.update(zip(keys, combo))
            specs.append(SpecConfig(name=self.name, params=params))
        return specs


class ExperimentConfig(BaseModel):
    """Schema of a simulation config file"""
    model_config = ConfigDict(extra="forbid")

    experiment: Literal["bias", "qmse", "consistency"]
    specs: list[SpecConfig] = []
    grid: Optional[GridConfig] = None
    n1: int = Field(default=10, ge=2)
    n2: int = Field(default=10, ge=2)
    nsim: int = Field(default_factory=lambda: settings.default_nsim, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    estimators: list[EstimatorId] = list(VARIANCE_ESTIMATORS)
    metric: Literal["bias", "ratio", "qmse"] = "bias"
    n_sequence: list[int] = [20, 40, 80, 160]
    # replications per random stream block
    block_size: int = Field(default=DEFAULT_BLOCK_SIZE, ge=1)

    @model_validator(mode="after")
    def _check_cells(self) -> "ExperimentConfig":
        if not self.specs and self.grid is None:
            raise ValueError("config needs at least one entry in `specs` or a `grid`")
        if not self.estimators:
            raise ValueError("config needs at least one estimator")
        if self.experiment == "consistency" and any(n < 4 for n in self.n_sequence):
            raise ValueError("consistency sizes must be at least 4 (two per group)")
        return self

    def expand_specs(self) -> list[SpecConfig]:
        """All cells in a fixed order: explicit specs first, then the grid"""
        cells = list(self.specs)
        if self.grid is not None:
            cells.extend(self.grid.expand())
        return cells


class ExperimentRow(BaseModel):
    """One estimator in one cell; qmse = (variance + bias^2) / sigma_N^2"""
    spec: str
    theta: float
    n1: int
    n2: int
    estimator: EstimatorId
    mean: float
    bias: float
    variance: float
    qmse: float
    se: float
    nsim: int


class ConsistencyRow(BaseModel):
    spec: str
    N: int
    n1: int
    n2: int
    l2_error: float
    se: float
    nsim: int


class ConsistencyReport(BaseModel):
    spec: str
    rows: list[ConsistencyRow]
    monotone: bool

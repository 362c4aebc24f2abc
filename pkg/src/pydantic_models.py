"""
Pydantic models for solver reports, experiment configuration and result tables
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import ShapeKind


class SolveReport(BaseModel):
    """Outcome of a linear or nonlinear grid solve"""
    iterations: int
    residual: float
    policy_sweeps: int = 0
    omega: float = 1.0
    initial: Optional[str] = None
    increments: List[float] = []
    min_increments: List[float] = []

    @property
    def max_decrease(self) -> float:
        """Largest pointwise decrease over all policy sweeps (0 when monotone)"""
        if not self.min_increments:
            return 0.0
        return max(0.0, -min(self.min_increments))


class FunctionalReport(BaseModel):
    """Integral functionals of one solution on a domain of volume `volume`"""
    volume: float
    cap: float
    h: Optional[float] = None
    u_max: float
    u_l1: float
    u_l2: float
    u_l3: float
    grad_l1: float
    flux: float
    flux_boundary: float
    hopf_ratio: Optional[float] = None

    def lp_power(self, p: int) -> float:
        """int u^p, with p = 0 giving the volume"""
        if p == 0:
            return self.volume
        return getattr(self, f"u_l{p}")

    def column(self, name: str) -> float:
        return getattr(self, name)

    @property
    def green_defect(self) -> float:
        """Relative gap between the two flux estimates"""
        return abs(self.flux - self.flux_boundary) / self.flux


class ExitTimeEstimate(BaseModel):
    mean: float
    stderr: float
    n_paths: int
    dt: float
    seed: int
    policy: Optional[str] = None
    x0: Optional[List[float]] = None


class BallProfile(BaseModel):
    """Ball values f(c), g(c) and h_p(c), p = 0..p_max (h_0 = c), at volume c"""
    d: int
    b: float
    c: float
    radius: float
    f: float
    g: float
    h: List[float]

    @property
    def flux(self) -> float:
        return self.f + self.c


class ExperimentConfig(BaseModel):
    """Parameters of every experiment; YAML presets mirror these keys"""
    model_config = ConfigDict(extra="forbid")

    name: str = "default"
    area: float = Field(default=math.pi, gt=0)
    shapes: List[str] = Field(default_factory=lambda: [
        ShapeKind.DISK, ShapeKind.SQUARE, ShapeKind.ELLIPSE,
        ShapeKind.RECTANGLE, ShapeKind.STADIUM, ShapeKind.ANNULUS])
    caps: List[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0])
    spacings: List[float] = Field(default_factory=lambda: [1 / 32, 1 / 64])
    tol: float = Field(default=1e-8, gt=0)
    seed: int = 42
    output_dir: str = "results"

    lemma1_shapes: List[str] = Field(default_factory=lambda: [ShapeKind.DISK, ShapeKind.SQUARE])
    lemma1_cap: float = Field(default=1.0, ge=0)
    lemma1_spacing: float = Field(default=1 / 32, gt=0)
    n_drift_fields: int = Field(default=20, ge=1)
    drift_modes: int = Field(default=8, ge=1)

    ball_dims: List[int] = Field(default_factory=lambda: [2, 3])
    ball_caps: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    ball_volumes: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    family_shapes: List[str] = Field(default_factory=lambda: [ShapeKind.SQUARE, ShapeKind.ELLIPSE])
    family_caps: List[float] = Field(default_factory=lambda: [0.0, 1.0])
    family_volumes: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    family_spacing: float = Field(default=1 / 64, gt=0)

    induction_shapes: List[str] = Field(default_factory=lambda: [ShapeKind.DISK, ShapeKind.SQUARE])
    induction_cap: float = Field(default=1.0, ge=0)
    induction_fractions: List[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5])
    induction_spacing: float = Field(default=1 / 64, gt=0)

    trend_caps: List[float] = Field(default_factory=lambda: [5.0, 10.0, 20.0, 40.0])
    trend_dims: List[int] = Field(default_factory=lambda: [1, 2])
    radial_nodes: int = Field(default=4096, ge=16)

    convergence_spacings: List[float] = Field(default_factory=lambda: [1 / 32, 1 / 64, 1 / 128])
    workers: int = Field(default=1, ge=1)

    @field_validator("shapes", "lemma1_shapes", "family_shapes", "induction_shapes")
    @classmethod
    def _known_shapes(cls, value: List[str]) -> List[str]:
        for kind in value:
            if not ShapeKind.is_valid(kind):
                raise ValueError(f"Invalid shape {kind!r}. Must be one of: {', '.join(ShapeKind.all())}")
        return value

    @field_validator("caps", "ball_caps", "family_caps")
    @classmethod
    def _nonnegative_caps(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one cap is required")
        if any(c < 0 for c in value):
            raise ValueError(f"caps must be >= 0: {value}")
        return value

    @field_validator("spacings", "convergence_spacings")
    @classmethod
    def _decreasing_spacings(cls, value: List[float]) -> List[float]:
        if not value or any(h <= 0 for h in value):
            raise ValueError(f"spacings must be positive: {value}")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError(f"spacings must be strictly decreasing: {value}")
        return value

    @field_validator("ball_volumes", "family_volumes")
    @classmethod
    def _increasing_volumes(cls, value: List[float]) -> List[float]:
        if len(value) < 5:
            raise ValueError(f"a volume grid needs at least 5 points, got {len(value)}")
        if any(c <= 0 for c in value):
            raise ValueError(f"volumes must be positive: {value}")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"volumes must be strictly increasing: {value}")
        return value

    @field_validator("trend_caps")
    @classmethod
    def _positive_trend_caps(cls, value: List[float]) -> List[float]:
        if any(b <= 0 for b in value):
            raise ValueError(f"trend caps must be positive (the ratio is undefined at b = 0): {value}")
        if any(b2 <= b1 for b1, b2 in zip(value, value[1:])):
            raise ValueError(f"trend caps must be strictly increasing: {value}")
        return value

    @field_validator("induction_fractions")
    @classmethod
    def _fractions_in_range(cls, value: List[float]) -> List[float]:
        if any(not 0 < f < 1 for f in value):
            raise ValueError(f"induction fractions must lie in (0, 1): {value}")
        return value

    @field_validator("ball_dims", "trend_dims")
    @classmethod
    def _dimensions(cls, value: List[int]) -> List[int]:
        if any(d < 1 for d in value):
            raise ValueError(f"dimensions must be >= 1: {value}")
        return value


class ComparisonRow(BaseModel):
    shape: str
    cap: float
    h: float
    volume: float
    perimeter: float
    isoperimetric_ratio: float
    report: FunctionalReport
    error: Dict[str, float] = {}
    policy_sweeps: int = 0


class ComparisonTable(BaseModel):
    """Equal-area comparison; disk_is_max[cap][column] is None when the column ties by identity"""
    target_area: float
    caps: List[float]
    rows: List[ComparisonRow]
    disk_is_max: Dict[str, Dict[str, Optional[bool]]] = {}
    margins: Dict[str, Dict[str, float]] = {}
    resolved: Dict[str, Dict[str, Optional[bool]]] = {}

    @model_validator(mode="after")
    def _equal_volumes(self):
        for row in self.rows:
            if abs(row.volume - self.target_area) > 1e-6 * self.target_area:
                raise ValueError(f"{row.shape} has volume {row.volume}, target {self.target_area}")
        return self

    def row(self, shape: str, cap: float) -> ComparisonRow:
        for row in self.rows:
            if row.shape == shape and row.cap == cap:
                return row
        raise KeyError((shape, cap))


class Lemma1Result(BaseModel):
    """Largest excess of u_b over the coupled solution across random drifts"""
    shape: str
    cap: float
    h: float
    n_fields: int
    worst_violation: float
    self_violation: float
    zero_drift_violation: float
    outward_margin: float


class InequalityRow(BaseModel):
    """
    One derivative bound at volume c: lhs is the family's derivative, rhs the bound.

    `quantity` is "flux" for f, "sup" for g and "lp<p>" for h_p. margin = (rhs - lhs) / scale
    is positive when the bound holds strictly; defect = |rhs - lhs| / scale.
    """
    family: str
    d: int
    b: float
    c: float
    quantity: str
    lhs: float
    rhs: float
    defect: float
    margin: float
    holds: bool
    own_perimeter_rhs: Optional[float] = None


class InductionRow(BaseModel):
    shape: str
    fraction: float
    eps: float
    h: float
    defect: float
    predicted_radius: Optional[float] = None
    measured_radius: Optional[float] = None


class TrendRow(BaseModel):
    d: int
    b: float
    u0: float
    ratio: float


class TrendResult(BaseModel):
    rows: List[TrendRow]
    monotone: bool
    increments_shrink: bool

    def ratios(self, d: int) -> List[float]:
        return [row.ratio for row in self.rows if row.d == d]


class ConvergenceRow(BaseModel):
    case: str
    h: float
    value: float
    error: float
    order: Optional[float] = None

"""
Schemas for run configurations (one per subcommand) and the scan report.

Config values arrive as strings from the key = value file; pydantic coerces
them to the declared types and rejects unknown keys.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RunConfigBase(BaseModel):
    """
    Keys shared by every subcommand: which Verblunsky family to build.
    """
    model_config = ConfigDict(extra="forbid")

    subcommand: Optional[str] = None
    family: Literal["zero", "coulomb", "geometric", "constant", "random_disk", "wvn", "file"] = "coulomb"
    length: int = Field(default=1000, ge=0)
    c: float = Field(default=0.2, ge=0.0, lt=1.0)
    phase_rule: Literal["zero", "constant", "random"] = "zero"
    omega: float = 0.0
    a_re: float = 0.5
    a_im: float = 0.0
    radius: float = Field(default=0.5, ge=0.0, lt=1.0)
    sequence_file: Optional[str] = None
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def check_sequence_file(self):
        if self.family == "file" and not self.sequence_file:
            raise ValueError("family = file requires sequence_file")
        return self


class GenerateConfig(RunConfigBase):
    ell1_eps: float = Field(default=1.0, gt=0.0)


class EvolveConfig(RunConfigBase):
    n: int = Field(default=1000, ge=0)
    eta_grid_size: int = Field(default=256, ge=1)
    beta: float = 0.0
    # radius_boundedness.csv over beta_count rotations at this angle, when set
    boundedness_eta: Optional[float] = None
    beta_count: Optional[int] = Field(default=None, ge=1)


class BsDensityConfig(RunConfigBase):
    n: int = Field(default=64, ge=0)
    grid_size: Optional[int] = Field(default=None, ge=1)


class MomentsConfig(RunConfigBase):
    n: int = Field(default=64, ge=0)
    order: Optional[int] = Field(default=None, ge=0)
    grid_size: Optional[int] = Field(default=None, ge=1)


class CompareIntervalsConfig(RunConfigBase):
    n: int = Field(default=64, ge=1)
    kappa: Optional[float] = Field(default=None, gt=0.0)
    delta_count: int = Field(default=12, ge=1)
    center_count: int = Field(default=16, ge=1)


class ResonancesConfig(RunConfigBase):
    n: int = Field(default=10000, ge=3)
    eta_grid_size: Optional[int] = Field(default=None, ge=3)


class KmaxCheckConfig(ResonancesConfig):
    pass


class AbelBoundConfig(RunConfigBase):
    xi: float = Field(default=0.1, gt=0.0, lt=6.283185307179586)
    n_max: int = Field(default=10000, ge=1)
    g_source: Literal["zero", "pruefer"] = "zero"
    eta_k: float = 0.0


class EnergyConfig(RunConfigBase):
    n: int = Field(default=64, ge=0)
    eps: float = Field(default=0.5, ge=0.0, lt=1.0)
    grid_size: Optional[int] = Field(default=None, ge=1)
    stopping: Literal["none", "constant", "dyadic"] = "none"
    stop_n: int = Field(default=256, ge=1)


class ScanConfig(RunConfigBase):
    eps0: float = Field(default=0.2, gt=0.0, lt=1.0)
    m_max: int = Field(default=3, ge=1)
    k_max: Optional[int] = Field(default=None, ge=1)
    # singular mass the eps0 admissibility record is evaluated for
    delta: float = Field(default=1.0, gt=0.0, le=1.0)


class DecomposeConfig(RunConfigBase):
    n: int = Field(default=256, ge=8)
    candidates: Optional[str] = None
    candidate_count: int = Field(default=16, ge=1)
    delta_count: int = Field(default=8, ge=1)

    @field_validator("candidates")
    @classmethod
    def parse_candidates(cls, v):
        if v is None or not v.strip():
            return None
        try:
            [float(x) for x in v.split(",")]
        except ValueError:
            raise ValueError("candidates must be a comma-separated list of angles")
        return v

    def candidate_angles(self) -> Optional[list[float]]:
        return [float(x) for x in self.candidates.split(",")] if self.candidates else None


class RoundtripConfig(RunConfigBase):
    family: Literal["zero", "coulomb", "geometric", "constant", "random_disk", "wvn", "file"] = "random_disk"
    n: int = Field(default=16, ge=1)
    grid_size: int = Field(default=4096, ge=4)


# ---------------------------------------------------------------------------
# Scan report

SCAN_INTERPRETATION = (
    "Tiles are classified with the Bernstein-Szego measure at the scale's level "
    "minus detected atom masses. This computable proxy stands in for the singular "
    "continuous part, which no finite computation observes."
)


class TileScaling(BaseModel):
    """mu(c - delta, c + delta) / (2 delta)^{1/2} at a singular tile center c."""

    center: float
    deltas: list[float]
    ratios: list[float]
    # slope of log mu(c - delta, c + delta) against log delta; None if a mass is zero
    exponent: Optional[float] = None


class AtomCandidate(BaseModel):
    angle: float
    mass: float
    reciprocal: float
    ratio: Optional[float] = None
    stable: bool


class ScaleRecord(BaseModel):
    m: int
    eps_m: float
    n_m: int
    level: int
    level_capped: bool
    below_n0: bool
    grid_size: int
    tile_count: int
    singular_count: int
    singular_centers: list[float] = Field(default_factory=list)
    separated_count: int
    separated_centers: list[float] = Field(default_factory=list)
    separated_ok: bool
    cover_count: int
    cover_budget: int
    cover_ok: bool
    bridge_min_margin: Optional[float] = None
    bridge_ok: bool = True
    detected_atoms: list[tuple[float, float]] = Field(default_factory=list)
    atom_candidates: list[AtomCandidate] = Field(default_factory=list)
    scaling_exponents: list[TileScaling] = Field(default_factory=list)


class ScanReport(BaseModel):
    interpretation: str = SCAN_INTERPRETATION
    eps0: float
    m_max: int
    K_max: int
    K_max_source: Literal["config", "kmax_check"]
    n0: int
    length: int
    A_est: Optional[float] = None
    # from kmax_check; None when K_max comes from the config
    bound_392A: Optional[float] = None
    C_fit: Optional[float] = None
    resonance_level: Optional[int] = None
    resonant_angles: Optional[list[dict]] = None
    separation_ok: Optional[bool] = None
    scales: list[ScaleRecord] = Field(default_factory=list)
    budget_exhausted: bool = False
    last_completed_scale: int = 0
    exhaustion_reason: Optional[str] = None

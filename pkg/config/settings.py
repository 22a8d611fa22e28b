from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
from pathlib import Path

# Path to the .env file (relative to the project root)
ENV_FILE = Path(__file__).resolve().parent.parent / ".env"


class GeneralSettings(BaseSettings):
    """General configuration"""

    ENVIRONMENT: str = Field(
        default="development",
        description="Environment: development, ci, production"
    )
    DEBUG: bool = Field(
        default=False,
        description="Debug mode (stack traces in error artifacts)"
    )
    LOG_LEVEL: str = Field(
        default="INFO",
        description="Logging level: DEBUG, INFO, WARNING, ERROR, CRITICAL"
    )

    @field_validator("LOG_LEVEL")
    def normalize_level(cls, v):
        """Accept lowercase level names"""
        return v.upper()

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )


class NumericsSettings(BaseSettings):
    """Tolerances shared by the recursion and quadrature code"""

    CONDITION_LIMIT: float = Field(
        default=1e12,
        description="Toeplitz/Gram condition number above which Gram-Schmidt is refused"
    )
    UNIT_NORM_TOL: float = Field(
        default=1e-10,
        description="Tolerance for unit-norm preconditions in H_n"
    )
    QUADRATURE_TOL: float = Field(
        default=1e-8,
        description="Relative tolerance for total-mass checks of grid measures"
    )
    MOMENT_MISMATCH_WARN: float = Field(
        default=1e-6,
        description="Moment mismatch above which interval comparisons carry a warning"
    )

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class BernsteinSzegoSettings(BaseSettings):
    """Bernstein-Szego and Fejer smoothing parameters"""

    BS_RESOLUTION_FACTOR: int = Field(
        default=8,
        description="bs_density requires grid_size >= factor * n"
    )
    BS_MIN_GRID: int = Field(
        default=1024,
        description="Smallest grid used when the caller does not give one"
    )
    BS_MAX_GRID: int = Field(
        default=2 ** 22,
        description="Largest grid bs_density may refine to before giving up"
    )
    FEJER_RESOLUTION_FACTOR: int = Field(
        default=16,
        description="Quadrature points per circle for F_n * chi, as a multiple of n+1"
    )
    LEMMA_KAPPA: float = Field(
        default=1.0,
        description="Default kappa of the interval comparison"
    )

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class ResonanceSettings(BaseSettings):
    """Resonant angle detection"""

    RESONANCE_DIVISOR: float = Field(
        default=14.0,
        description="|A(n, eta)| must reach log(n) / divisor"
    )
    SEPARATION_POWER: float = Field(
        default=3.0,
        description="Separation n^(-1/(power*K^2)) between resonant angles"
    )
    RESONANCE_GRID_SIZE: int = Field(
        default=4096,
        description="Number of eta grid points before golden-section refinement"
    )
    RESONANCE_CHAIN_FACTOR: float = Field(
        default=392.0,
        description="K <= factor * A from the counting chain"
    )

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class ScanSettings(BaseSettings):
    """Multiscale singular-interval scan"""

    SCAN_N0: int = Field(
        default=1000,
        description="Stand-in for the threshold n_0 of the counting lemma"
    )
    SCAN_BETA_SAMPLES: int = Field(
        default=64,
        description="Number of rotations beta sampled by radius_boundedness"
    )
    ATOM_THRESHOLD: float = Field(
        default=1e-4,
        description="Smallest extrapolated mass reported as an atom"
    )
    LEMMA_CONSTANT: float = Field(
        default=1.0,
        description="C in mu_{n_m}(3J) >= mu(J) - C eps_m"
    )
    SCAN_MAX_GRID: int = Field(
        default=2 ** 22,
        description="Largest grid a single scale may allocate"
    )
    SCAN_TILE_OVERSAMPLE: int = Field(
        default=8,
        description="Grid points per scale-m tile"
    )
    MAX_MEMORY_PERCENT: float = Field(
        default=85.0,
        description="RAM usage above which new grids are refused"
    )

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class RunnerSettings(BaseSettings):
    """Experiment runner (CLI)"""

    OPUC_THREADS: int = Field(
        default=0,
        description="Worker threads when --threads is not given (0 = auto)"
    )
    OPUC_OUTPUT_DIR: str = Field(
        default="outputs",
        description="Output directory when --out is not given"
    )

    @field_validator("OPUC_THREADS")
    def validate_threads(cls, v):
        """Negative thread counts are meaningless"""
        if v < 0:
            raise ValueError("OPUC_THREADS must be >= 0")
        return v

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class Settings(BaseSettings):
    """
    Groups every configuration section
    Usage: from config.settings import settings
           settings.numerics.CONDITION_LIMIT, settings.scan.SCAN_N0, etc
    """

    # Subconfigurations
    general: GeneralSettings = GeneralSettings()
    numerics: NumericsSettings = NumericsSettings()
    bernstein_szego: BernsteinSzegoSettings = BernsteinSzegoSettings()
    resonance: ResonanceSettings = ResonanceSettings()
    scan: ScanSettings = ScanSettings()
    runner: RunnerSettings = RunnerSettings()

    # Shortcuts
    @property
    def ENVIRONMENT(self) -> str:
        return self.general.ENVIRONMENT

    @property
    def DEBUG(self) -> bool:
        return self.general.DEBUG

    @property
    def LOG_LEVEL(self) -> str:
        return self.general.LOG_LEVEL

    @property
    def OPUC_THREADS(self) -> int:
        return self.runner.OPUC_THREADS

    model_config = SettingsConfigDict(env_file=ENV_FILE, env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    """
    Singleton Settings instance
    Usage: from config.settings import get_settings
           settings = get_settings()
    """
    return Settings()


# Global instance (for direct imports)
settings = get_settings()

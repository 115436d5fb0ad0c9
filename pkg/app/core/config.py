import math

from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    PROJECT_NAME: str = "Ensemble Resource Equivalence"
    LOG_LEVEL: str = "INFO"
    SCHEMA_VERSION: str = "1.0"
    OUTPUT_DIR: str = "output"

    # Task defaults
    DEFAULT_DIMENSION: int = 2
    DEFAULT_THETA: float = math.pi / 2
    SINGULARITY_MARGIN: float = 1e-3
    RELATIVE_TOLERANCE: float = 1e-9

    # Numerical limits
    TENSOR_DIM_CAP: int = 256
    FD_STEP: float = 1e-5

    # Simulation
    SIM_TRIALS: int = 1000
    SIM_THREADS: int = 1

    # Output
    SIG_DIGITS: int = 12

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

settings = Settings()

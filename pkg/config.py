"""
Centralized configuration loader for the quantization lab.
Reads settings from environment variables (QGAN_ prefix) or a .env file.
"""
from pathlib import Path
from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict


# Find the .env file - check the code dir first, then the working directory
CODE_DIR = Path(__file__).parent
CWD_DIR = Path.cwd()

# Priority: code/.env > cwd/.env > environment variables
if (CODE_DIR / ".env").exists():
    ENV_FILE = CODE_DIR / ".env"
elif (CWD_DIR / ".env").exists():
    ENV_FILE = CWD_DIR / ".env"
else:
    ENV_FILE = None  # Will rely on environment variables


class Settings(BaseSettings):
    """Lab settings loaded from the environment or .env file."""

    model_config = SettingsConfigDict(
        env_prefix="QGAN_",
        env_file=str(ENV_FILE) if ENV_FILE else None,
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # General
    project_name: str = "QGAN Quantization Lab"
    log_level: str = "WARNING"

    # Reproducibility and artifacts
    default_seed: int = 42
    out_dir: str = "./out"
    jobs: int = 1

    # Quantizers
    em_max_iter: int = 100
    em_tol: float = 1e-9
    log_epsilon: float = 1e-7
    tanh_delta: float = 1e-6

    # Weight analysis
    histogram_bins: int = 80
    gaussian_sigma: float = 0.02

    # GAN harness
    gan_steps: int = 4000
    learning_rate: float = 1e-3
    eval_samples: int = 5000
    eval_interval: int = 250

    # Bit-width search
    search_max_bits: int = 8
    eval_repeats: int = 1

    # Run classification
    fail_threshold: float = 0.15
    pass_threshold: float = 0.5
    oscillation_threshold: float = 0.25

    # Quality grading
    acceptable_score: float = 0.6
    unacceptable_score: float = 0.4


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


# Export settings instance for easy import
settings = get_settings()

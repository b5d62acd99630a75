"""Process-level settings using Pydantic Settings."""

from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

PrecisionMode = Literal["verify64", "train32"]


class Settings(BaseSettings):
    """Settings loaded from GRAFT_* environment variables (or a .env file).

    Run-specific knobs (model shape, optimizer, task) live in the run config
    file; these settings only cover what differs between machines or CI jobs.
    """

    # Seed override; precedence is CLI flag > GRAFT_SEED > config file
    seed: Optional[int] = Field(default=None, ge=0, description="Seed override (GRAFT_SEED)")

    precision: Optional[PrecisionMode] = Field(
        default=None, description="Precision override (verify64/train32)"
    )

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Log level (DEBUG, INFO, WARNING, ERROR)")
    log_format: str = Field(default="console", description="Log format (console, json)")

    output_dir: str = Field(default="runs", description="Output root for configs that set no output_dir")

    model_config = SettingsConfigDict(
        env_prefix="GRAFT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


# Global settings instance
settings = Settings()


def resolve_seed(
    config_seed: int,
    cli_seed: Optional[int] = None,
    env: Optional[Settings] = None,
) -> int:
    """Pick the effective seed: CLI flag, then GRAFT_SEED, then the config value.

    Args:
        config_seed: Seed from the run config file
        cli_seed: Seed passed on the command line, if any
        env: Settings to consult; a fresh instance is read when omitted

    Returns:
        Effective seed
    """
    if cli_seed is not None:
        return cli_seed
    env = env if env is not None else Settings()
    if env.seed is not None:
        return env.seed
    return config_seed

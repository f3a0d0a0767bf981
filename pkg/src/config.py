from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

HOME_DIR = Path.home()
CONFIG_DIR = HOME_DIR / ".sclar-sim"


class Settings(BaseSettings):
    # Load environment variables from .env and system environment
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Debug mode
    debug: bool = Field(default=False, validation_alias="SCLAR_DEBUG")

    # Where logs and default experiment outputs go
    log_file: Path = Field(
        default=CONFIG_DIR / "sclar-sim.log", validation_alias="SCLAR_LOG_FILE"
    )
    output_dir: Path = Field(
        default=Path("runs"), validation_alias="SCLAR_OUTPUT_DIR"
    )

    # Emit the per-slot trace.csv for every training run
    write_trace: bool = Field(default=False, validation_alias="SCLAR_WRITE_TRACE")

    # Logfire settings
    logfire_enabled: bool = Field(default=False, validation_alias="LOGFIRE_ENABLED")
    logfire_token: Optional[str] = Field(default=None, validation_alias="LOGFIRE_TOKEN")
    logfire_service_name: str = Field(
        default="sclar-sim", validation_alias="LOGFIRE_SERVICE_NAME"
    )


def get_settings() -> Settings:
    """Instantiate and return the Settings object."""
    return Settings()

"""Configuration settings using Pydantic."""

from pathlib import Path
from typing import Optional
from typing import Tuple
from typing import Type

from pydantic import Field
from pydantic_settings import BaseSettings
from pydantic_settings import PydanticBaseSettingsSource
from pydantic_settings import SettingsConfigDict
from pydantic_settings import YamlConfigSettingsSource


class Settings(BaseSettings):
    """Application settings with Pydantic validation."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FACTORSTORE_",
        case_sensitive=False,
        yaml_file="factorstore.yaml",
        extra="ignore",
    )

    # Store settings
    root: Path = Field(
        default_factory=lambda: Path.home() / ".factorstore",
        description="Store root directory",
    )
    frequency: str = Field(default="day", description="Calendar frequency")

    # Evaluation settings
    memo_capacity: int = Field(
        default=500, description="In-memory node-result cache entries", ge=1
    )
    workers: int = Field(default=1, description="Parallel instrument tasks", ge=1)

    # Cache settings
    use_expr_cache: bool = Field(default=True, description="Enable expression cache")
    use_dataset_cache: bool = Field(default=True, description="Enable dataset cache")
    cache_size_budget_mb: Optional[float] = Field(
        default=None, description="Disk cache budget in MB (None = unbounded)", gt=0
    )
    visit_refresh_seconds: int = Field(
        default=3600, description="Minimum age before last-visit is rewritten", ge=0
    )

    # Logging settings
    log_level: str = Field(default="WARNING", description="Logging level")
    log_file: Optional[str] = Field(default=None, description="Log file path")
    debug: bool = Field(default=False, description="Enable debug mode")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        """Add the optional yaml file below environment and .env sources."""
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            YamlConfigSettingsSource(settings_cls),
            file_secret_settings,
        )

    def model_post_init(self, __context) -> None:
        """Post-initialization processing."""
        if self.debug:
            self.log_level = "DEBUG"

    @property
    def cache_dir(self) -> Path:
        """Get path to cache directory."""
        return self.root / "cache"

    @property
    def cache_size_budget_bytes(self) -> Optional[int]:
        """Disk cache budget in bytes."""
        if self.cache_size_budget_mb is None:
            return None
        return int(self.cache_size_budget_mb * 1024 * 1024)


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get global settings instance.

    Returns:
        Settings object
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """
    Reload settings from environment.

    Returns:
        New Settings object
    """
    global _settings
    _settings = Settings()
    return _settings

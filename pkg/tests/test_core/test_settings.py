"""Tests for layered settings."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from factorstore.core import settings as settings_module
from factorstore.core.settings import Settings
from factorstore.core.settings import get_settings
from factorstore.core.settings import reload_settings


@pytest.fixture(autouse=True)
def clean_environment(tmp_path, monkeypatch):
    """Empty working directory and no FACTORSTORE_ variables."""
    monkeypatch.chdir(tmp_path)
    for name in ("ROOT", "WORKERS", "USE_EXPR_CACHE", "USE_DATASET_CACHE", "DEBUG"):
        monkeypatch.delenv(f"FACTORSTORE_{name}", raising=False)
    monkeypatch.setattr(settings_module, "_settings", None)


class TestSettings:
    """Test defaults and source precedence."""

    def test_defaults(self):
        """Both caches on, one worker, store under the home directory."""
        settings = Settings()
        assert settings.root == Path.home() / ".factorstore"
        assert settings.use_expr_cache and settings.use_dataset_cache
        assert settings.workers == 1
        assert settings.memo_capacity == 500
        assert settings.cache_size_budget_bytes is None

    def test_environment(self, monkeypatch, tmp_path):
        """FACTORSTORE_ variables override defaults."""
        monkeypatch.setenv("FACTORSTORE_ROOT", str(tmp_path / "store"))
        monkeypatch.setenv("FACTORSTORE_WORKERS", "4")
        monkeypatch.setenv("FACTORSTORE_USE_DATASET_CACHE", "false")
        settings = Settings()
        assert settings.root == tmp_path / "store"
        assert settings.cache_dir == tmp_path / "store" / "cache"
        assert settings.workers == 4
        assert not settings.use_dataset_cache

    def test_yaml_file(self, tmp_path, monkeypatch):
        """The yaml file sits below the environment."""
        (tmp_path / "factorstore.yaml").write_text(
            "workers: 3\nuse_expr_cache: false\n", encoding="utf-8"
        )
        assert Settings().workers == 3
        assert not Settings().use_expr_cache

        monkeypatch.setenv("FACTORSTORE_WORKERS", "2")
        assert Settings().workers == 2

    def test_init_arguments_win(self, monkeypatch):
        """Explicit arguments override the environment."""
        monkeypatch.setenv("FACTORSTORE_WORKERS", "4")
        assert Settings(workers=8).workers == 8

    def test_debug_forces_level(self):
        """Debug mode logs at DEBUG."""
        assert Settings(debug=True).log_level == "DEBUG"

    def test_budget_in_bytes(self):
        """The budget is configured in megabytes."""
        assert Settings(cache_size_budget_mb=1.5).cache_size_budget_bytes == 1572864

    @pytest.mark.parametrize(
        "kwargs", [{"workers": 0}, {"memo_capacity": 0}, {"cache_size_budget_mb": 0}]
    )
    def test_invalid(self, kwargs):
        """Out-of-range values fail validation."""
        with pytest.raises(ValidationError):
            Settings(**kwargs)

    def test_global_instance(self, monkeypatch):
        """get_settings caches; reload_settings rereads the environment."""
        first = get_settings()
        assert get_settings() is first
        monkeypatch.setenv("FACTORSTORE_WORKERS", "6")
        assert reload_settings().workers == 6
        assert get_settings().workers == 6

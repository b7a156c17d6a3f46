"""Unit tests for settings loading."""

import sys
import tomllib
from pathlib import Path

import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from config import DEFAULT_CONFIG_PATH, Settings, __version__, load_settings
from errors import ConfigError
from polarimeter import HardwareConfig, SweepConfig


class TestLoadSettings:
    """Test the YAML settings layer."""

    def test_project_defaults(self) -> None:
        settings = load_settings()

        assert DEFAULT_CONFIG_PATH.exists()
        assert settings.sweep.samples == 1024
        assert settings.analyzer.samples == 512
        assert settings.tolerances.fullrun == pytest.approx(1e-8)
        assert settings.log_level == "INFO"

    def test_partial_file_keeps_defaults(self, tmp_path: Path) -> None:
        path = tmp_path / "settings.yaml"
        path.write_text("log_level: debug\nsweep:\n  samples: 64\n")
        settings = load_settings(path)

        assert settings.log_level == "DEBUG"
        assert settings.sweep.samples == 64
        assert settings.sweep.refine_tol == Settings().sweep.refine_tol
        assert settings.hardware == Settings().hardware

    def test_empty_file(self, tmp_path: Path) -> None:
        path = tmp_path / "settings.yaml"
        path.write_text("")
        assert load_settings(path) == Settings()

    def test_settings_feed_runtime_configs(self) -> None:
        settings = load_settings()
        hw = HardwareConfig.from_settings(settings.hardware)

        assert SweepConfig.from_settings(settings.sweep).samples == settings.sweep.samples
        assert hw.v == settings.hardware.v
        assert hw.l0 > 0

    @pytest.mark.parametrize(
        "text",
        [
            "sweep:\n  points: 10\n",
            "sweep:\n  samples: 4\n",
            "log_level: chatty\n",
            "seed: 3\n",
            "tolerances:\n  fullrun: -1\n",
            "hardware:\n  v: 0\n",
            "sweep: 12\n",
            "- a\n- b\n",
            "sweep: [\n",
        ],
    )
    def test_rejected(self, tmp_path: Path, text: str) -> None:
        path = tmp_path / "settings.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_settings(path)

    def test_missing_explicit_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            load_settings(tmp_path / "absent.yaml")


class TestVersion:
    """Test the package version."""

    def test_version_matches_project_metadata(self) -> None:
        pyproject = tomllib.loads((Path(__file__).parent.parent / "pyproject.toml").read_text())
        assert __version__ == pyproject["project"]["version"]

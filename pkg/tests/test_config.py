"""Tests for configuration loading."""
from pathlib import Path

import pytest
import yaml

from src.config import (
    CONFIG_ENV_VAR,
    DEFAULT_CONFIG_PATH,
    Config,
    load_config,
    resolve_config_path,
)


@pytest.fixture
def config_file(tmp_path):
    """A partial YAML config."""
    path = tmp_path / "config.yaml"
    path.write_text(
        yaml.safe_dump(
            {"seed": 7, "frames": {"size": 32, "k": 2}, "trajectory": {"optimizer": {"lr": 0.001}}}
        )
    )
    return path


class TestLoadConfig:
    """Test YAML loading and validation."""

    def test_defaults(self):
        """Test built-in defaults."""
        config = load_config(None)
        assert config.seed == 0
        assert config.frames.size == 64
        assert config.frames.k == 4
        assert config.trajectory.noise_channels == 128
        assert config.trajectory.optimizer.lr == pytest.approx(2e-4)
        assert config.trajectory.optimizer.beta1 == 0.5

    def test_partial_override(self, config_file):
        """Test unspecified values keep their defaults."""
        config = load_config(config_file)
        assert config.seed == 7
        assert config.frames.size == 32 and config.frames.k == 2
        assert config.frames.lambda_l1 == 10.0
        assert config.trajectory.optimizer.lr == pytest.approx(0.001)

    def test_shipped_config_matches_defaults(self):
        """Test the repository config file validates and mirrors the defaults."""
        path = Path(__file__).resolve().parent.parent / DEFAULT_CONFIG_PATH
        config = load_config(path)
        assert config.model_dump() == Config().model_dump()

    def test_missing_file(self, tmp_path):
        """Test a nonexistent config path."""
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_values(self, tmp_path):
        """Test out-of-range values are rejected."""
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({"synthesis": {"jitter": 0.5}}))
        with pytest.raises(ValueError, match="Invalid configuration"):
            load_config(path)

    def test_empty_file(self, tmp_path):
        """Test an empty YAML document gives the defaults."""
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).model_dump() == Config().model_dump()

    def test_frame_weights(self, config_file):
        """Test loss weights are built from the frame settings."""
        weights = load_config(config_file).frames.weights
        assert (weights.lambda_l1, weights.beta_regional) == (10.0, 100.0)

    def test_network_configs(self):
        """Test network configs are derived from the training sections."""
        config = Config()
        assert config.trajectory.generator_config(5).num_labels == 5
        assert config.frames.discriminator_config(30).in_channels == 33


class TestResolveConfigPath:
    """Test config path precedence."""

    def test_cli_wins(self, monkeypatch, tmp_path):
        """Test an explicit path beats the environment."""
        monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path / "env.yaml"))
        assert resolve_config_path(tmp_path / "cli.yaml") == tmp_path / "cli.yaml"

    def test_environment(self, monkeypatch, tmp_path):
        """Test the environment variable is used without a flag."""
        monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path / "env.yaml"))
        assert resolve_config_path(None) == tmp_path / "env.yaml"

    def test_default_file(self, monkeypatch, tmp_path):
        """Test the default file is used only when it exists."""
        monkeypatch.chdir(tmp_path)
        assert resolve_config_path(None) is None
        DEFAULT_CONFIG_PATH.parent.mkdir(parents=True)
        DEFAULT_CONFIG_PATH.write_text("seed: 1\n")
        assert resolve_config_path(None) == DEFAULT_CONFIG_PATH

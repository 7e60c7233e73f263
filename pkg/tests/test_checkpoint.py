"""Tests for checkpoint files."""
from collections import OrderedDict

import numpy as np
import pytest

from src.utils.checkpoint import (
    file_sha256,
    load_checkpoint,
    load_metadata,
    save_checkpoint,
    save_metadata,
    sidecar_path,
    strip_prefix,
)
from src.utils.errors import CheckpointError


@pytest.fixture
def tensors(rng):
    """A few named tensors of different ranks."""
    return OrderedDict(
        [
            ("gen.stem.weight", rng.standard_normal((3, 4, 5)).astype(np.float32)),
            ("gen.stem.bias", rng.standard_normal(5).astype(np.float32)),
            ("step", np.array(7.0, dtype=np.float32)),
        ]
    )


@pytest.fixture
def checkpoint(tmp_path, tensors):
    """Path of a saved checkpoint."""
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, tensors)
    return path


class TestCheckpoint:
    """Test saving and loading named tensors."""

    def test_round_trip_is_bit_exact(self, checkpoint, tensors):
        """Test names, order, shapes and values survive."""
        loaded = load_checkpoint(checkpoint)
        assert list(loaded) == list(tensors)
        for name, value in tensors.items():
            assert loaded[name].dtype == np.float32
            assert loaded[name].shape == value.shape
            assert np.array_equal(loaded[name], value)

    def test_starts_with_magic(self, checkpoint):
        """Test the file header."""
        assert checkpoint.read_bytes()[:4] == b"AFCK"

    def test_flipped_byte(self, checkpoint):
        """Test any corruption fails the checksum."""
        raw = bytearray(checkpoint.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        checkpoint.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(checkpoint)

    def test_truncated(self, checkpoint):
        """Test a cut-off file."""
        checkpoint.write_bytes(checkpoint.read_bytes()[:6])
        with pytest.raises(CheckpointError):
            load_checkpoint(checkpoint)

    def test_missing_file(self, tmp_path):
        """Test a nonexistent path."""
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "missing.ckpt")

    def test_empty_checkpoint(self, tmp_path):
        """Test zero tensors round-trip."""
        path = tmp_path / "empty.ckpt"
        save_checkpoint(path, {})
        assert load_checkpoint(path) == {}

    def test_strip_prefix(self, tensors):
        """Test selecting one network's tensors."""
        assert list(strip_prefix(tensors, "gen.")) == ["stem.weight", "stem.bias"]


class TestMetadata:
    """Test the JSON sidecar."""

    def test_round_trip(self, checkpoint):
        """Test metadata is written next to the checkpoint."""
        save_metadata(checkpoint, {"kind": "trajectory", "step": 3})
        assert sidecar_path(checkpoint).name == "model.ckpt.json"
        assert load_metadata(checkpoint) == {"kind": "trajectory", "step": 3}

    def test_missing_sidecar(self, checkpoint):
        """Test loading metadata that was never written."""
        with pytest.raises(CheckpointError):
            load_metadata(checkpoint)

    def test_file_hash_changes_with_content(self, tmp_path):
        """Test the file digest tracks content."""
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        a.write_bytes(b"x" * 10000)
        b.write_bytes(b"x" * 9999 + b"y")
        assert file_sha256(a) != file_sha256(b)
        assert len(file_sha256(a)) == 64

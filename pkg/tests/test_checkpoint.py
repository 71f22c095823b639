"""TFZ1 checkpoint format round-trips and corruption handling."""

import struct

import numpy as np
import pytest

from dogfight.checkpoint import (FORMAT_VERSION, MAGIC, load_checkpoint,
                                 manifest_diff, save_checkpoint,
                                 verify_manifest)
from dogfight.errors import CheckpointError


def _sample_params():
    rng = np.random.default_rng(0)
    return {
        "actor/in/W": rng.standard_normal((33, 8)),
        "actor/in/b": rng.standard_normal(8),
        "scalar/alpha": np.array(0.37),
    }


def test_round_trip(tmp_path):
    path = tmp_path / "net.tfz"
    params = _sample_params()
    save_checkpoint(path, params)
    loaded = load_checkpoint(path)
    assert set(loaded) == set(params)
    for name, value in params.items():
        assert loaded[name].dtype == np.float64
        # payload is float32 on disk
        np.testing.assert_array_equal(loaded[name],
                                      value.astype(np.float32).astype(np.float64))


def test_header_bytes(tmp_path):
    path = tmp_path / "net.tfz"
    save_checkpoint(path, {"w": np.zeros((2, 3))})
    blob = path.read_bytes()
    assert blob[:4] == MAGIC
    version, count = struct.unpack_from("<II", blob, 4)
    assert version == FORMAT_VERSION
    assert count == 1
    (name_len,) = struct.unpack_from("<I", blob, 12)
    assert name_len == 1
    assert blob[16:17] == b"w"
    (rank,) = struct.unpack_from("<I", blob, 17)
    assert rank == 2
    dims = struct.unpack_from("<2Q", blob, 21)
    assert dims == (2, 3)
    assert len(blob) == 21 + 16 + 6 * 4


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.tfz"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(CheckpointError, match="not a TFZ1"):
        load_checkpoint(path)


def test_truncated(tmp_path):
    path = tmp_path / "net.tfz"
    save_checkpoint(path, _sample_params())
    blob = path.read_bytes()
    path.write_bytes(blob[:len(blob) - 7])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_trailing_garbage(tmp_path):
    path = tmp_path / "net.tfz"
    save_checkpoint(path, {"w": np.ones(3)})
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)


def test_manifest_diff_reports_all_classes(tmp_path):
    path = tmp_path / "net.tfz"
    save_checkpoint(path, {"a": np.zeros((2, 2)), "c": np.zeros(4)})
    found = load_checkpoint(path)
    expected = {"a": (2, 3), "b": (5,)}
    diff = manifest_diff(expected, found)
    assert "shape: a" in diff
    assert "missing: b" in diff
    assert "unexpected: c" in diff
    with pytest.raises(CheckpointError, match="manifest"):
        verify_manifest(expected, found, "test")


def test_zero_rank_scalar(tmp_path):
    path = tmp_path / "s.tfz"
    save_checkpoint(path, {"alpha": np.array(1.5)})
    loaded = load_checkpoint(path)
    assert loaded["alpha"].shape == ()
    assert loaded["alpha"] == 1.5

import struct

import numpy as np
import pytest

from dcan.numerics import load_tensors, read_manifest, save_tensors, write_manifest


def test_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.weight": rng.normal(size=(3, 4)).astype(np.float32),
        "b": np.float32(rng.normal(size=())),
        "c.bias": rng.normal(size=(5,)).astype(np.float32),
        "empty": np.zeros((0, 2), dtype=np.float32),
    }
    save_tensors(tmp_path / "x.bin", tensors)
    back = load_tensors(tmp_path / "x.bin")
    assert set(back) == set(tensors)
    for k, v in tensors.items():
        assert back[k].dtype == np.float32
        assert back[k].shape == np.shape(v)
        assert np.array_equal(back[k], v)


def test_byte_layout(tmp_path):
    save_tensors(tmp_path / "x.bin", {"w": np.array([[1.0, 2.0]], dtype=np.float32)})
    raw = (tmp_path / "x.bin").read_bytes()
    expected = struct.pack("<I", 1) + b"w" + struct.pack("<I", 2) + struct.pack("<2I", 1, 2)
    expected += np.array([1.0, 2.0], dtype="<f4").tobytes()
    assert raw == expected


def test_names_written_sorted(tmp_path):
    save_tensors(tmp_path / "a.bin", {"z": np.ones(1), "a": np.zeros(1)})
    save_tensors(tmp_path / "b.bin", {"a": np.zeros(1), "z": np.ones(1)})
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_truncated_file(tmp_path):
    save_tensors(tmp_path / "x.bin", {"w": np.ones((4, 4), dtype=np.float32)})
    raw = (tmp_path / "x.bin").read_bytes()
    (tmp_path / "x.bin").write_bytes(raw[:-3])
    with pytest.raises(ValueError, match="truncated"):
        load_tensors(tmp_path / "x.bin")


def test_manifest_round_trip(tmp_path):
    write_manifest(tmp_path / "m", {"model.d": 64, "train.gamma": 0.3, "model.heads": ""})
    text = (tmp_path / "m").read_text()
    assert text.splitlines()[0] == "model.d = 64"
    assert read_manifest(tmp_path / "m") == {"model.d": "64", "model.heads": "", "train.gamma": "0.3"}

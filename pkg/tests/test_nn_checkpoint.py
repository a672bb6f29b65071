"""Checkpoint container format: byte layout, round trips, corruption."""

import struct

import numpy as np
import pytest

from pilotstack.nn.checkpoint import (CheckpointError, header_size,
                                      load_checkpoint, save_checkpoint)
from pilotstack.nn.model import default_architecture, init_params


def test_round_trip_bitwise(tmp_path, tiny_arch):
    params = init_params(tiny_arch, seed=8)
    path = tmp_path / "model.acpm"
    save_checkpoint(path, params, tiny_arch)
    loaded, arch = load_checkpoint(path)
    assert (arch.input_height, arch.input_width, arch.input_channels) == (12, 16, 3)
    assert arch.convs == tiny_arch.convs
    assert arch.hidden_units == tiny_arch.hidden_units
    # the rate is stored as a float32 field, so it round-trips at f32 precision
    assert arch.dropout_rate == np.float32(tiny_arch.dropout_rate)
    assert set(loaded) == set(params)
    for name in params:
        assert loaded[name].dtype == np.float32
        assert np.array_equal(loaded[name], params[name])


def test_default_header_and_file_size(tmp_path):
    arch = default_architecture()
    # 4 magic + 4 version + 12 input dims + 4 dropout + 4 conv count
    # + 5 * 12 conv rows + 4 hidden count + 2 * 4 hidden + 4 head count
    assert header_size(arch) == 104
    path = tmp_path / "model.acpm"
    save_checkpoint(path, init_params(arch, seed=0), arch)
    assert path.stat().st_size == 104 + 817028 * 4 == 3268216


def test_header_fields_little_endian(tmp_path, tiny_arch):
    path = tmp_path / "model.acpm"
    save_checkpoint(path, init_params(tiny_arch, seed=1), tiny_arch)
    data = path.read_bytes()
    assert data[:4] == b"ACPM"
    assert struct.unpack_from("<I", data, 4)[0] == 1  # format version
    ih, iw, ic = struct.unpack_from("<III", data, 8)
    assert (ih, iw, ic) == (12, 16, 3)


def test_save_rejects_shape_mismatch(tmp_path, tiny_arch):
    params = init_params(tiny_arch, seed=1)
    params["fc0.w"] = params["fc0.w"][:, :-1]
    with pytest.raises(CheckpointError, match="architecture says"):
        save_checkpoint(tmp_path / "model.acpm", params, tiny_arch)


def _saved(tmp_path, tiny_arch):
    path = tmp_path / "model.acpm"
    save_checkpoint(path, init_params(tiny_arch, seed=2), tiny_arch)
    return path


def test_load_rejects_bad_magic(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    data = bytearray(path.read_bytes())
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="bad magic"):
        load_checkpoint(path)


def test_load_rejects_unknown_version(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    data = bytearray(path.read_bytes())
    struct.pack_into("<I", data, 4, 9)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="unsupported checkpoint version"):
        load_checkpoint(path)


def test_load_rejects_truncated_header(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    path.write_bytes(path.read_bytes()[:10])
    with pytest.raises(CheckpointError, match="truncated in header"):
        load_checkpoint(path)


def test_load_rejects_truncated_payload(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(CheckpointError, match="payload is"):
        load_checkpoint(path)


def test_load_rejects_trailing_garbage(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(CheckpointError, match="payload is"):
        load_checkpoint(path)


def test_load_rejects_implausible_layer_counts(tmp_path):
    # hand-build a header claiming 1000 conv layers
    blob = b"ACPM" + struct.pack("<I", 1) + struct.pack("<IIIf", 8, 8, 3, 0.1)
    blob += struct.pack("<I", 1000)
    path = tmp_path / "bad.acpm"
    path.write_bytes(blob)
    with pytest.raises(CheckpointError, match="implausible conv layer count"):
        load_checkpoint(path)


def test_load_rejects_invalid_architecture(tmp_path):
    # zero conv layers is structurally valid in the container but not a
    # buildable network
    blob = (b"ACPM" + struct.pack("<I", 1) + struct.pack("<IIIf", 8, 8, 3, 0.1)
            + struct.pack("<I", 0) + struct.pack("<I", 1)
            + struct.pack("<I", 4) + struct.pack("<I", 2))
    path = tmp_path / "bad.acpm"
    path.write_bytes(blob)
    with pytest.raises(CheckpointError, match="invalid architecture"):
        load_checkpoint(path)


def test_loaded_params_are_writable_copies(tmp_path, tiny_arch):
    path = _saved(tmp_path, tiny_arch)
    params, _ = load_checkpoint(path)
    params["fc0.b"][0] = 7.0  # must not raise: frombuffer views are copied
    assert params["fc0.b"][0] == 7.0

"""Binary checkpoint files for named parameter sets.

Layout (all integers little-endian):

    magic   4 bytes  b"TFZ1"
    version u32      format version, currently 1
    count   u32      number of named parameters
    then per parameter:
        name_len u32, name UTF-8 bytes
        rank     u32
        dims     rank * u64
        payload  prod(dims) * float32

Training keeps float64 internally; files carry float32.  Loading therefore
round-trips through single precision by design.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"TFZ1"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray]) -> None:
    """Write named arrays to ``path`` in TFZ1 format."""
    path = Path(path)
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(params))]
    for name, value in params.items():
        arr = np.asarray(value, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    """Read a TFZ1 file into float64 arrays keyed by parameter name."""
    path = Path(path)
    blob = path.read_bytes()
    view = memoryview(blob)
    if len(blob) < 12 or view[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a TFZ1 checkpoint")
    version, count = struct.unpack_from("<II", view, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    offset = 12
    params: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", view, offset)
            offset += 4
            name = bytes(view[offset:offset + name_len]).decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", view, offset)
            offset += 4
            dims = struct.unpack_from(f"<{rank}Q", view, offset)
            offset += 8 * rank
            n = int(np.prod(dims)) if rank else 1
            payload = np.frombuffer(view, dtype="<f4", count=n, offset=offset)
            offset += 4 * n
            params[name] = payload.astype(np.float64).reshape(dims)
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated or corrupt checkpoint ({exc})") from exc
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return params


def manifest_diff(expected: dict[str, tuple[int, ...]],
                  found: dict[str, np.ndarray]) -> str:
    """Human-readable difference between a network manifest and a file."""
    lines = []
    for name, shape in expected.items():
        if name not in found:
            lines.append(f"missing: {name} {shape}")
        elif tuple(found[name].shape) != tuple(shape):
            lines.append(f"shape: {name} expected {tuple(shape)} "
                         f"found {tuple(found[name].shape)}")
    for name in found:
        if name not in expected:
            lines.append(f"unexpected: {name} {tuple(found[name].shape)}")
    return "\n".join(lines)


def verify_manifest(expected: dict[str, tuple[int, ...]],
                    found: dict[str, np.ndarray], context: str) -> None:
    diff = manifest_diff(expected, found)
    if diff:
        raise CheckpointError(f"{context}: checkpoint does not match network "
                              f"manifest:\n{diff}")

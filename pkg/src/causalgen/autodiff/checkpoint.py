"""Flat binary parameter checkpoints.

Layout: magic `CGPM`, u32 version, u32 parameter count, then per parameter
u32 name length, UTF-8 name bytes, u32 rank, u32 dims, and the little-endian
float64 payload in row-major order.  Model files wrap the same blob behind a
JSON header (magic `CGCK`) that records the architecture config.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensor import Parameter

PARAM_MAGIC = b"CGPM"
CONTAINER_MAGIC = b"CGCK"
VERSION = 1


class CheckpointError(Exception):
    pass


def dump_parameters(params: list[Parameter]) -> bytes:
    chunks = [PARAM_MAGIC, struct.pack("<II", VERSION, len(params))]
    for p in params:
        name = p.name.encode("utf-8")
        arr = np.ascontiguousarray(p.data, dtype="<f8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def parse_parameters(blob: bytes) -> dict[str, np.ndarray]:
    if blob[:4] != PARAM_MAGIC:
        raise CheckpointError("bad parameter magic")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported parameter format version {version}")
    offset = 12
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}I", blob, offset)
        offset += 4 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=offset)
        offset += 8 * n
        out[name] = arr.reshape(dims).astype(np.float64)
    return out


def save_parameters(params: list[Parameter], path) -> None:
    Path(path).write_bytes(dump_parameters(params))


def load_parameters(path) -> dict[str, np.ndarray]:
    return parse_parameters(Path(path).read_bytes())


def assign_parameters(params: list[Parameter], values: dict[str, np.ndarray]) -> None:
    """Copy loaded arrays into parameters, strict on names and shapes."""
    for p in params:
        if p.name not in values:
            raise CheckpointError(f"checkpoint missing parameter {p.name!r}")
        arr = values[p.name]
        if arr.shape != p.data.shape:
            raise CheckpointError(
                f"shape mismatch for {p.name!r}: {arr.shape} vs {p.data.shape}")
        p.data[...] = arr


def save_checkpoint(path, header: dict, params: list[Parameter]) -> None:
    """JSON header + parameter blob in one file."""
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = dump_parameters(params)
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if blob[:4] != CONTAINER_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[12:12 + header_len].decode("utf-8"))
    params = parse_parameters(blob[12 + header_len:])
    return header, params

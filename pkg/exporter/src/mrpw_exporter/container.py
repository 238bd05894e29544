"""Standalone MRPW container writer/reader (independent of the engine).

Format, little-endian throughout:

    "MRPW" | u32 version=1 | u32 payload crc32 | u32 entry count |
    u32 manifest length | manifest UTF-8 JSON |
    entries: (u32 name len | name | u32 ndim | u32 dims... | f32 data)*

The CRC covers every byte after the 20-byte header.  The manifest JSON is
canonical (sorted keys, compact separators) so re-exports of identical
content are byte-identical.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"MRPW"
VERSION = 1


class ContainerError(RuntimeError):
    pass


def encode(manifest: dict, entries: dict[str, np.ndarray]) -> bytes:
    manifest_b = json.dumps(manifest, sort_keys=True,
                            separators=(",", ":")).encode("utf-8")
    chunks = [manifest_b]
    for name, array in entries.items():
        data = np.ascontiguousarray(array, dtype="<f4")
        name_b = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    payload = b"".join(chunks)
    header = MAGIC + struct.pack("<IIII", VERSION, zlib.crc32(payload),
                                 len(entries), len(manifest_b))
    return header + payload


def write(path: str | Path, manifest: dict,
          entries: dict[str, np.ndarray]) -> int:
    """Write the container; returns the payload CRC32."""
    blob = encode(manifest, entries)
    Path(path).write_bytes(blob)
    (crc,) = struct.unpack("<I", blob[8:12])
    return crc


def read(path: str | Path) -> tuple[dict, dict[str, np.ndarray], int]:
    blob = Path(path).read_bytes()
    if len(blob) < 20 or blob[:4] != MAGIC:
        raise ContainerError(f"{path}: not an MRPW file")
    version, crc, entry_count, manifest_len = struct.unpack("<IIII", blob[4:20])
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported version {version}")
    payload = blob[20:]
    if zlib.crc32(payload) != crc:
        raise ContainerError(f"{path}: checksum mismatch")
    manifest = json.loads(payload[:manifest_len].decode("utf-8"))
    entries: dict[str, np.ndarray] = {}
    offset = manifest_len
    for _ in range(entry_count):
        (name_len,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        name = payload[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        dims = struct.unpack_from(f"<{ndim}I", payload, offset)
        offset += 4 * ndim
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        offset += 4 * count
        entries[name] = arr.reshape(dims).copy()
    if offset != len(payload):
        raise ContainerError(f"{path}: {len(payload) - offset} stray bytes")
    return manifest, entries, crc

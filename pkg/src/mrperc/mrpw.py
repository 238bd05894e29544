"""MRPW container codec: named float32 arrays plus a JSON manifest.

Layout (all integers little-endian u32):

    magic "MRPW" | version (=1) | payload CRC32 | entry count | manifest length
    manifest bytes (UTF-8 JSON)
    entries: repeated  name length | name UTF-8 | ndim | dims... | raw float32

The CRC32 covers everything after the 20-byte header (manifest bytes plus
all entry blocks).  The manifest is serialized canonically (sorted keys,
compact separators) so identical content always produces identical bytes.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ChecksumError, FormatError

MAGIC = b"MRPW"
VERSION = 1
_U32 = struct.Struct("<I")


def _encode_entry(name: str, array: np.ndarray) -> bytes:
    shape = np.asarray(array).shape
    data = np.ascontiguousarray(array, dtype="<f4")  # may promote 0-d to 1-d
    name_b = name.encode("utf-8")
    parts = [_U32.pack(len(name_b)), name_b, _U32.pack(len(shape))]
    parts += [_U32.pack(d) for d in shape]
    parts.append(data.tobytes())
    return b"".join(parts)


def encode(manifest: dict, entries: dict[str, np.ndarray]) -> bytes:
    """Serialize a manifest and named arrays into MRPW bytes."""
    manifest_b = json.dumps(manifest, sort_keys=True,
                            separators=(",", ":")).encode("utf-8")
    payload = manifest_b + b"".join(
        _encode_entry(n, a) for n, a in entries.items())
    header = MAGIC + _U32.pack(VERSION) + _U32.pack(zlib.crc32(payload)) \
        + _U32.pack(len(entries)) + _U32.pack(len(manifest_b))
    return header + payload


def write(path: str | Path, manifest: dict, entries: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode(manifest, entries))


def read(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse an MRPW file; returns (manifest, name -> float32 array).

    Raises FormatError on structural problems and ChecksumError when the
    stored CRC32 does not match the payload.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 20:
        raise FormatError(f"{path}: file shorter than the MRPW header")
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    version, crc, entry_count, manifest_len = struct.unpack("<IIII", blob[4:20])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    payload = blob[20:]
    if zlib.crc32(payload) != crc:
        raise ChecksumError(f"{path}: payload checksum mismatch (corrupt file?)")
    if manifest_len > len(payload):
        raise FormatError(f"{path}: manifest length {manifest_len} exceeds payload")
    try:
        manifest = json.loads(payload[:manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: manifest is not valid JSON: {exc}") from exc

    entries: dict[str, np.ndarray] = {}
    buf = io.BytesIO(payload[manifest_len:])

    def take(n: int, what: str) -> bytes:
        b = buf.read(n)
        if len(b) != n:
            raise FormatError(f"{path}: truncated while reading {what}")
        return b

    for _ in range(entry_count):
        (name_len,) = _U32.unpack(take(4, "entry name length"))
        name = take(name_len, "entry name").decode("utf-8")
        (ndim,) = _U32.unpack(take(4, f"ndim of {name!r}"))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, f"dims of {name!r}"))
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw = take(4 * count, f"data of {name!r}")
        if name in entries:
            raise FormatError(f"{path}: duplicate entry {name!r}")
        entries[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    if buf.read(1):
        raise FormatError(f"{path}: trailing bytes after the last entry")
    return manifest, entries

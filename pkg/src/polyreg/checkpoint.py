"""Binary checkpoint format.

Little-endian layout: 8-byte magic, u32 version, length-prefixed JSON
metadata, named-tensor table, trailing CRC32 of everything before it.
Round trips are bitwise lossless.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

MAGIC = b"POLYREG\x00"
VERSION = 1


class CorruptCheckpoint(Exception):
    """Magic/length/CRC failure."""


class VersionMismatch(Exception):
    """Checkpoint written by an incompatible format version."""


def save_checkpoint(path, tensors: dict[str, np.ndarray], metadata: dict) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    meta = json.dumps(metadata, sort_keys=True).encode("utf-8")
    chunks.append(struct.pack("<Q", len(meta)))
    chunks.append(meta)
    chunks.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        # ascontiguousarray promotes 0-d arrays to 1-d, so keep the shape
        arr = np.ascontiguousarray(arr).reshape(np.shape(arr))
        name_b = name.encode("utf-8")
        dtype_b = arr.dtype.str.encode("ascii")
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<H", len(dtype_b)))
        chunks.append(dtype_b)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
        data = arr.tobytes()
        chunks.append(struct.pack("<Q", len(data)))
        chunks.append(data)
    body = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptCheckpoint("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8:
        raise CorruptCheckpoint("file too short")
    body, crc_bytes = blob[:-4], blob[-4:]
    (crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise CorruptCheckpoint("CRC mismatch")
    r = _Reader(body)
    if r.take(len(MAGIC)) != MAGIC:
        raise CorruptCheckpoint("bad magic")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise VersionMismatch(f"format version {version}, expected {VERSION}")
    (meta_len,) = r.unpack("<Q")
    metadata = json.loads(r.take(meta_len).decode("utf-8"))
    (n_tensors,) = r.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (dtype_len,) = r.unpack("<H")
        dtype = np.dtype(r.take(dtype_len).decode("ascii"))
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q") if ndim else ()
        (data_len,) = r.unpack("<Q")
        arr = np.frombuffer(r.take(data_len), dtype=dtype).reshape(shape).copy()
        tensors[name] = arr
    if r.pos != len(body):
        raise CorruptCheckpoint("trailing bytes in checkpoint")
    return tensors, metadata
